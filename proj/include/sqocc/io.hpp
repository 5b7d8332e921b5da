/* Copyright 2026 The sqocc Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/
// File formats: JSON-lines scenes and Gaussian clouds, SQOC binary grids,
// PFM / PPM / PGM images, camera files and metric reports.
#pragma once

#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <unistd.h>

#include <nlohmann/json.hpp>

#include "sqocc/gaussianize.hpp"
#include "sqocc/grid.hpp"
#include "sqocc/metrics.hpp"
#include "sqocc/render.hpp"
#include "sqocc/superquadric.hpp"
#include "sqocc/voxelize.hpp"

namespace sqocc::io {

using nlohmann::json;

inline constexpr int kSceneVersion = 1;
inline constexpr int kCloudVersion = 1;
inline constexpr std::uint32_t kGridVersion = 1;

// Raised for malformed input; line is 1-based, 0 when not line oriented.
class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : std::runtime_error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// Writes through a temporary sibling file and renames it into place, so a
// failed write never leaves a partial file at `path`.
inline void write_atomic(const std::filesystem::path& path, const std::function<void(std::ostream&)>& body) {
  auto tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  try {
    {
      std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
      if (!os) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
      body(os);
      os.flush();
      if (!os) throw std::runtime_error("write failed: " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
  } catch (...) {
    std::error_code ec;
    std::filesystem::remove(tmp, ec);
    throw;
  }
}

inline std::ifstream open_input(const std::filesystem::path& path, bool binary = false) {
  std::ifstream is(path, binary ? std::ios::binary : std::ios::in);
  if (!is) throw std::runtime_error("cannot open " + path.string());
  return is;
}

// ---------------------------------------------------------------------------
// JSON helpers

namespace detail {

inline double number(const json& j, const char* key, std::size_t line) {
  const auto it = j.find(key);
  if (it == j.end()) throw ParseError(line, std::string("missing field '") + key + "'");
  if (!it->is_number()) throw ParseError(line, std::string("field '") + key + "' must be a number");
  const double v = it->get<double>();
  if (!std::isfinite(v)) throw ParseError(line, std::string("field '") + key + "' is not finite");
  return v;
}

inline std::vector<double> numbers(const json& j, const char* key, std::size_t line, std::optional<std::size_t> len) {
  const auto it = j.find(key);
  if (it == j.end()) throw ParseError(line, std::string("missing field '") + key + "'");
  if (!it->is_array()) throw ParseError(line, std::string("field '") + key + "' must be an array");
  if (len && it->size() != *len)
    throw ParseError(line, std::string("field '") + key + "' must have " + std::to_string(*len) + " entries");
  std::vector<double> out;
  out.reserve(it->size());
  for (const auto& v : *it) {
    if (!v.is_number()) throw ParseError(line, std::string("field '") + key + "' must hold numbers");
    out.push_back(v.get<double>());
    if (!std::isfinite(out.back())) throw ParseError(line, std::string("field '") + key + "' is not finite");
  }
  return out;
}

inline Vec3 vec3(const json& j, const char* key, std::size_t line) {
  const auto v = numbers(j, key, line, 3);
  return {v[0], v[1], v[2]};
}

inline Quat quat_wxyz(const json& j, const char* key, std::size_t line) {
  const auto v = numbers(j, key, line, 4);
  return Quat(v[0], v[1], v[2], v[3]);
}

inline json vec_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }
inline json quat_json(const Quat& q) { return json::array({q.w(), q.x(), q.y(), q.z()}); }

inline void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw std::invalid_argument(std::string("cannot write non-finite ") + what);
}

inline ClassTable read_classes(const json& header, std::size_t line) {
  const auto it = header.find("classes");
  if (it == header.end() || !it->is_array()) throw ParseError(line, "header needs a 'classes' array");
  ClassTable t;
  for (const auto& n : *it) {
    if (!n.is_string()) throw ParseError(line, "class names must be strings");
    t.names.push_back(n.get<std::string>());
  }
  try {
    t.validate();
  } catch (const std::invalid_argument& e) {
    throw ParseError(line, e.what());
  }
  return t;
}

// Reads the next non-blank line as a JSON object. Returns nullopt at EOF.
inline std::optional<json> next_record(std::istream& is, std::size_t& line) {
  std::string text;
  while (std::getline(is, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(text);
    } catch (const json::exception& e) {
      throw ParseError(line, std::string("invalid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ParseError(line, "record must be a JSON object");
    return j;
  }
  return std::nullopt;
}

inline void check_version(const json& header, int expected, std::size_t line) {
  const auto it = header.find("version");
  if (it == header.end() || !it->is_number_integer() || it->get<int>() != expected)
    throw ParseError(line, "unsupported or missing version (expected " + std::to_string(expected) + ")");
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Scene files: a header {"classes": [...], "version": 1} followed by one
// primitive per line. An empty file is an empty scene with no classes.

inline void write_scene(std::ostream& os, const Scene& scene) {
  scene.validate();
  os << json{{"classes", scene.classes.names}, {"version", kSceneVersion}}.dump() << '\n';
  for (const auto& sq : scene.primitives) {
    for (double v : sq.logits) detail::require_finite(v, "logit");
    json r;
    r["mu"] = detail::vec_json(sq.mu);
    r["scale"] = detail::vec_json(sq.scale);
    r["quat"] = detail::quat_json(sq.rot);
    r["opacity"] = sq.opacity;
    r["eps"] = json::array({sq.eps1, sq.eps2});
    r["logits"] = sq.logits;
    os << r.dump() << '\n';
  }
}

inline Scene read_scene(std::istream& is) {
  std::size_t line = 0;
  Scene scene;
  const auto header = detail::next_record(is, line);
  if (!header) return scene;
  detail::check_version(*header, kSceneVersion, line);
  scene.classes = detail::read_classes(*header, line);
  while (auto r = detail::next_record(is, line)) {
    const auto eps = detail::numbers(*r, "eps", line, 2);
    auto logits = detail::numbers(*r, "logits", line, std::nullopt);
    if (logits.size() != scene.classes.size())
      throw ParseError(line, "expected " + std::to_string(scene.classes.size()) + " logits, got " +
                                 std::to_string(logits.size()));
    try {
      scene.primitives.push_back(SuperQuadric::make(detail::vec3(*r, "mu", line), detail::vec3(*r, "scale", line),
                                                    detail::quat_wxyz(*r, "quat", line),
                                                    detail::number(*r, "opacity", line), std::move(logits),
                                                    eps[0], eps[1]));
    } catch (const std::invalid_argument& e) {
      throw ParseError(line, e.what());
    }
  }
  return scene;
}

inline Scene read_scene_file(const std::filesystem::path& path) {
  auto is = open_input(path);
  return read_scene(is);
}

inline void write_scene_file(const std::filesystem::path& path, const Scene& scene) {
  write_atomic(path, [&](std::ostream& os) { write_scene(os, scene); });
}

// ---------------------------------------------------------------------------
// Gaussian clouds: header {"kind": "gaussian_cloud", "classes": [...],
// "version": 1} followed by one Gaussian per line.

inline void write_cloud(std::ostream& os, const GaussianCloud& cloud) {
  os << json{{"kind", "gaussian_cloud"}, {"classes", cloud.classes.names}, {"version", kCloudVersion}}.dump()
     << '\n';
  for (const auto& g : cloud.gaussians) {
    json r;
    r["mean"] = detail::vec_json(g.mean);
    r["scales"] = detail::vec_json(g.scales);
    r["rot"] = detail::quat_json(g.rot);
    r["opacity"] = g.opacity;
    r["logits"] = g.logits;
    r["parent"] = g.parent;
    r["layer"] = g.layer;
    os << r.dump() << '\n';
  }
}

inline GaussianCloud read_cloud(std::istream& is) {
  std::size_t line = 0;
  GaussianCloud cloud;
  const auto header = detail::next_record(is, line);
  if (!header) return cloud;
  if (header->value("kind", std::string()) != "gaussian_cloud") throw ParseError(line, "not a gaussian_cloud file");
  detail::check_version(*header, kCloudVersion, line);
  cloud.classes = detail::read_classes(*header, line);
  while (auto r = detail::next_record(is, line)) {
    Gaussian3D g;
    g.mean = detail::vec3(*r, "mean", line);
    g.scales = detail::vec3(*r, "scales", line);
    if ((g.scales.array() <= 0.0).any()) throw ParseError(line, "scales must be > 0");
    g.rot = detail::quat_wxyz(*r, "rot", line);
    if (std::abs(g.rot.norm() - 1.0) > 1e-6) throw ParseError(line, "rot must be a unit quaternion");
    g.opacity = detail::number(*r, "opacity", line);
    if (g.opacity < 0.0) throw ParseError(line, "opacity must be >= 0");
    g.logits = detail::numbers(*r, "logits", line, cloud.classes.size());
    const auto parent = r->find("parent"), layer = r->find("layer");
    if (parent == r->end() || !parent->is_number_unsigned() || layer == r->end() || !layer->is_number_unsigned())
      throw ParseError(line, "parent and layer must be non-negative integers");
    g.parent = parent->get<std::size_t>();
    g.layer = layer->get<std::size_t>();
    cloud.gaussians.push_back(std::move(g));
  }
  return cloud;
}

inline GaussianCloud read_cloud_file(const std::filesystem::path& path) {
  auto is = open_input(path);
  return read_cloud(is);
}

inline void write_cloud_file(const std::filesystem::path& path, const GaussianCloud& cloud) {
  write_atomic(path, [&](std::ostream& os) { write_cloud(os, cloud); });
}

// True when the first record of the file declares a Gaussian cloud.
inline bool is_cloud_file(const std::filesystem::path& path) {
  auto is = open_input(path);
  std::size_t line = 0;
  const auto header = detail::next_record(is, line);
  return header && header->value("kind", std::string()) == "gaussian_cloud";
}

// ---------------------------------------------------------------------------
// SQOC binary grids, little-endian:
//   "SQOC" u32 version u32 nx ny nz f32 origin[3] f32 resolution u16 C
//   u8 labels[N] (x fastest, 255 = free) u8 has_occupancy f32 v_o[N]
// Class names are not stored; reading yields class_0 ... class_{C-1}.

struct GridFile {
  SemanticGrid grid;
  std::optional<std::vector<float>> occupancy;
};

namespace detail {

template <typename T>
void put(std::ostream& os, T v) {
  static_assert(std::is_integral_v<T> || std::is_floating_point_v<T>);
  std::array<unsigned char, sizeof(T)> bytes;
  if constexpr (std::is_floating_point_v<T>) {
    using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
    const auto u = std::bit_cast<U>(v);
    for (std::size_t i = 0; i < sizeof(T); ++i) bytes[i] = static_cast<unsigned char>(u >> (8 * i));
  } else {
    using U = std::make_unsigned_t<T>;
    const auto u = static_cast<U>(v);
    for (std::size_t i = 0; i < sizeof(T); ++i) bytes[i] = static_cast<unsigned char>(u >> (8 * i));
  }
  os.write(reinterpret_cast<const char*>(bytes.data()), sizeof(T));
}

template <typename T>
T get(std::istream& is) {
  std::array<unsigned char, sizeof(T)> bytes;
  if (!is.read(reinterpret_cast<char*>(bytes.data()), sizeof(T))) throw ParseError(0, "truncated file");
  if constexpr (std::is_floating_point_v<T>) {
    using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
    U u = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) u |= static_cast<U>(bytes[i]) << (8 * i);
    return std::bit_cast<T>(u);
  } else {
    using U = std::make_unsigned_t<T>;
    U u = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) u |= static_cast<U>(static_cast<U>(bytes[i]) << (8 * i));
    return static_cast<T>(u);
  }
}

// Widens a stored float through its shortest decimal form, so a value
// written from the double 0.4 reads back as the double 0.4.
inline double widen(float f) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), f);
  double d = 0.0;
  std::from_chars(buf, res.ptr, d);
  return d;
}

}  // namespace detail

inline void write_grid(std::ostream& os, const SemanticGrid& grid, const std::vector<double>* occupancy = nullptr) {
  grid.spec.validate();
  grid.classes.validate();
  if (grid.classes.free_index != 255) throw std::invalid_argument("SQOC: free label must be 255");
  const std::size_t n = grid.spec.voxel_count();
  if (grid.labels.size() != n) throw std::invalid_argument("SQOC: label count does not match dims");
  if (occupancy && occupancy->size() != n) throw std::invalid_argument("SQOC: occupancy size does not match dims");
  os.write("SQOC", 4);
  detail::put<std::uint32_t>(os, kGridVersion);
  for (int d : grid.spec.dims) detail::put<std::uint32_t>(os, static_cast<std::uint32_t>(d));
  for (int a = 0; a < 3; ++a) detail::put<float>(os, static_cast<float>(grid.spec.origin[a]));
  detail::put<float>(os, static_cast<float>(grid.spec.resolution));
  detail::put<std::uint16_t>(os, static_cast<std::uint16_t>(grid.classes.size()));
  os.write(reinterpret_cast<const char*>(grid.labels.data()), static_cast<std::streamsize>(n));
  detail::put<std::uint8_t>(os, occupancy ? 1 : 0);
  if (occupancy)
    for (double v : *occupancy) detail::put<float>(os, static_cast<float>(v));
}

inline GridFile read_grid(std::istream& is) {
  try {
    char magic[4];
    if (!is.read(magic, 4) || std::string(magic, 4) != "SQOC") throw ParseError(0, "bad magic");
    if (detail::get<std::uint32_t>(is) != kGridVersion) throw ParseError(0, "unsupported version");
    GridFile out;
    auto& spec = out.grid.spec;
    for (int& d : spec.dims) {
      const auto v = detail::get<std::uint32_t>(is);
      if (v == 0 || v > (1u << 16)) throw ParseError(0, "dims out of range");
      d = static_cast<int>(v);
    }
    for (int a = 0; a < 3; ++a) spec.origin[a] = detail::widen(detail::get<float>(is));
    spec.resolution = detail::widen(detail::get<float>(is));
    try {
      spec.validate();
    } catch (const std::invalid_argument& e) {
      throw ParseError(0, e.what());
    }
    const auto c = detail::get<std::uint16_t>(is);
    if (c == 0 || c > 255) throw ParseError(0, "class count must be in [1, 255]");
    out.grid.classes = ClassTable::numbered(c);
    const std::size_t n = spec.voxel_count();
    out.grid.labels.resize(n);
    if (!is.read(reinterpret_cast<char*>(out.grid.labels.data()), static_cast<std::streamsize>(n)))
      throw ParseError(0, "truncated file");
    for (Label l : out.grid.labels)
      if (l != out.grid.classes.free_index && l >= c) throw ParseError(0, "label outside class table");
    const auto has_occ = detail::get<std::uint8_t>(is);
    if (has_occ > 1) throw ParseError(0, "bad occupancy flag");
    if (has_occ) {
      std::vector<float> v(n);
      for (auto& x : v) x = detail::get<float>(is);
      out.occupancy = std::move(v);
    }
    if (is.peek() != std::char_traits<char>::eof()) throw ParseError(0, "trailing bytes");
    return out;
  } catch (const ParseError& e) {
    throw ParseError(0, std::string("SQOC: ") + e.what());
  }
}

inline void write_grid_file(const std::filesystem::path& path, const SemanticGrid& grid,
                            const std::vector<double>* occupancy = nullptr) {
  write_atomic(path, [&](std::ostream& os) { write_grid(os, grid, occupancy); });
}

inline GridFile read_grid_file(const std::filesystem::path& path) {
  auto is = open_input(path, true);
  return read_grid(is);
}

// ---------------------------------------------------------------------------
// Images

// PFM greyscale: "Pf", width height, scale -1 (little-endian), rows bottom
// to top.
inline void write_pfm(std::ostream& os, int width, int height, const std::vector<double>& values) {
  if (values.size() != static_cast<std::size_t>(width) * height) throw std::invalid_argument("PFM: size mismatch");
  os << "Pf\n" << width << ' ' << height << "\n-1.0\n";
  for (int v = height - 1; v >= 0; --v)
    for (int u = 0; u < width; ++u) detail::put<float>(os, static_cast<float>(values[static_cast<std::size_t>(v) * width + u]));
}

struct PfmImage {
  int width = 0;
  int height = 0;
  std::vector<float> values;  // top row first
};

inline PfmImage read_pfm(std::istream& is) {
  std::string tag;
  PfmImage img;
  double scale = 0.0;
  if (!(is >> tag >> img.width >> img.height >> scale) || tag != "Pf" || img.width < 1 || img.height < 1)
    throw ParseError(0, "PFM: bad header");
  if (scale >= 0.0) throw ParseError(0, "PFM: only little-endian files are supported");
  is.get();
  img.values.resize(static_cast<std::size_t>(img.width) * img.height);
  for (int v = img.height - 1; v >= 0; --v)
    for (int u = 0; u < img.width; ++u) img.values[static_cast<std::size_t>(v) * img.width + u] = detail::get<float>(is);
  return img;
}

using Rgb = std::array<std::uint8_t, 3>;

// One "r g b" line per class id. Blank lines and '#' comments are skipped.
inline std::vector<Rgb> read_palette(std::istream& is) {
  std::vector<Rgb> out;
  std::string text;
  std::size_t line = 0;
  while (std::getline(is, text)) {
    ++line;
    const auto first = text.find_first_not_of(" \t\r");
    if (first == std::string::npos || text[first] == '#') continue;
    std::istringstream ls(text);
    int r, g, b;
    std::string extra;
    if (!(ls >> r >> g >> b) || (ls >> extra) || r < 0 || r > 255 || g < 0 || g > 255 || b < 0 || b > 255)
      throw ParseError(line, "palette entries are three integers in [0, 255]");
    out.push_back({static_cast<std::uint8_t>(r), static_cast<std::uint8_t>(g), static_cast<std::uint8_t>(b)});
  }
  return out;
}

// Deterministic fallback colours for palettes that are missing or short.
inline Rgb default_colour(std::size_t id) {
  std::uint64_t h = (id + 1) * 0x9E3779B97F4A7C15ull;
  h ^= h >> 29;
  return {static_cast<std::uint8_t>(64 + (h & 0xbf)), static_cast<std::uint8_t>(64 + ((h >> 8) & 0xbf)),
          static_cast<std::uint8_t>(64 + ((h >> 16) & 0xbf))};
}

// P6 semantic image; free pixels are black.
inline void write_ppm(std::ostream& os, const RenderOutput& img, const std::vector<Rgb>& palette) {
  os << "P6\n" << img.width << ' ' << img.height << "\n255\n";
  for (Label l : img.semantic) {
    Rgb c{0, 0, 0};
    if (l != img.free_index) c = l < palette.size() ? palette[l] : default_colour(l);
    os.write(reinterpret_cast<const char*>(c.data()), 3);
  }
}

// P5 image of values in [0, 1].
inline void write_pgm(std::ostream& os, int width, int height, const std::vector<double>& values) {
  if (values.size() != static_cast<std::size_t>(width) * height) throw std::invalid_argument("PGM: size mismatch");
  os << "P5\n" << width << ' ' << height << "\n255\n";
  for (double v : values) {
    const auto b = static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
    os.put(static_cast<char>(b));
  }
}

// ---------------------------------------------------------------------------
// Camera files: intrinsics plus either "world_to_camera" (16 numbers,
// row-major 4x4) or "eye" / "target" / "up".

inline Camera read_camera(std::istream& is) {
  json j;
  try {
    j = json::parse(is);
  } catch (const json::exception& e) {
    throw ParseError(0, std::string("camera: invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ParseError(0, "camera: expected a JSON object");
  Camera cam;
  cam.fx = detail::number(j, "fx", 0);
  cam.fy = detail::number(j, "fy", 0);
  cam.cx = detail::number(j, "cx", 0);
  cam.cy = detail::number(j, "cy", 0);
  const double w = detail::number(j, "width", 0), h = detail::number(j, "height", 0);
  if (w != std::floor(w) || h != std::floor(h) || w < 1 || h < 1 || w > 1 << 15 || h > 1 << 15)
    throw ParseError(0, "camera: width and height must be positive integers");
  cam.width = static_cast<int>(w);
  cam.height = static_cast<int>(h);
  if (j.contains("near")) cam.near = detail::number(j, "near", 0);
  if (j.contains("far")) cam.far = detail::number(j, "far", 0);
  if (j.contains("world_to_camera")) {
    const auto m = detail::numbers(j, "world_to_camera", 0, 16);
    Eigen::Matrix4d mat;
    for (int r = 0; r < 4; ++r)
      for (int c = 0; c < 4; ++c) mat(r, c) = m[static_cast<std::size_t>(4 * r + c)];
    if (mat.row(3) != Eigen::RowVector4d(0, 0, 0, 1)) throw ParseError(0, "camera: last row must be 0 0 0 1");
    cam.world_to_camera.matrix() = mat;
  } else if (j.contains("eye")) {
    try {
      cam.world_to_camera = Camera::look_at(detail::vec3(j, "eye", 0), detail::vec3(j, "target", 0),
                                            j.contains("up") ? detail::vec3(j, "up", 0) : Vec3(0, 0, 1));
    } catch (const std::invalid_argument& e) {
      throw ParseError(0, e.what());
    }
  } else {
    throw ParseError(0, "camera: need 'world_to_camera' or 'eye'/'target'");
  }
  try {
    cam.validate();
  } catch (const std::invalid_argument& e) {
    throw ParseError(0, e.what());
  }
  return cam;
}

inline Camera read_camera_file(const std::filesystem::path& path) {
  auto is = open_input(path);
  return read_camera(is);
}

inline void write_camera(std::ostream& os, const Camera& cam) {
  json j{{"fx", cam.fx}, {"fy", cam.fy}, {"cx", cam.cx},         {"cy", cam.cy},
         {"width", cam.width}, {"height", cam.height}, {"near", cam.near}, {"far", cam.far}};
  json m = json::array();
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) m.push_back(cam.world_to_camera.matrix()(r, c));
  j["world_to_camera"] = m;
  os << j.dump(2) << '\n';
}

// ---------------------------------------------------------------------------
// Metric reports

inline std::string format_threshold(double t) {
  std::ostringstream ss;
  ss << t;
  return ss.str();
}

inline json report_json(const MetricReport& r, const ClassTable& classes) {
  json j;
  j["iou"] = r.iou;
  j["miou"] = r.miou;
  json per = json::object();
  for (std::size_t k = 0; k < r.per_class_iou.size(); ++k) {
    const std::string name = k < classes.size() ? classes.names[k] : "class_" + std::to_string(k);
    per[name] = r.per_class_valid[k] ? json(r.per_class_iou[k]) : json(nullptr);
  }
  j["per_class_iou"] = per;
  json ray = json::object();
  for (const auto& [t, v] : r.ray_iou) ray[format_threshold(t)] = v;
  j["ray_iou"] = ray;
  return j;
}

// Flat key=value lines; absent classes print "absent".
inline std::string report_text(const MetricReport& r, const ClassTable& classes) {
  std::ostringstream ss;
  ss << std::setprecision(17);
  ss << "iou=" << r.iou << '\n' << "miou=" << r.miou << '\n';
  for (std::size_t k = 0; k < r.per_class_iou.size(); ++k) {
    const std::string name = k < classes.size() ? classes.names[k] : "class_" + std::to_string(k);
    ss << "iou." << name << '=';
    if (r.per_class_valid[k])
      ss << r.per_class_iou[k];
    else
      ss << "absent";
    ss << '\n';
  }
  for (const auto& [t, v] : r.ray_iou) ss << "ray_iou@" << format_threshold(t) << '=' << v << '\n';
  return ss.str();
}

// ---------------------------------------------------------------------------
// Pipeline configuration shared by the CLI subcommands.

struct RunConfig {
  GaussianizeConfig gaussianize;
  VoxelizeConfig voxelize;
  VoxelGridSpec grid = VoxelGridSpec::occ3d();
  std::string camera_path;
  std::vector<double> ray_thresholds = default_ray_thresholds();
  int ray_azimuths = 360;
  std::vector<double> ray_elevations_deg{-15.0, -7.5, 0.0, 7.5};
  std::uint64_t seed = 0;

  void validate() const {
    gaussianize.validate();
    voxelize.validate();
    grid.validate();
    if (ray_thresholds.empty()) throw std::invalid_argument("thresholds: need at least one");
    for (double t : ray_thresholds)
      if (!(t >= 0.0) || !std::isfinite(t)) throw std::invalid_argument("thresholds: values must be finite and >= 0");
    if (ray_azimuths < 1) throw std::invalid_argument("rays: need at least one azimuth");
    if (ray_elevations_deg.empty()) throw std::invalid_argument("rays: need at least one elevation");
    for (double e : ray_elevations_deg)
      if (!(std::abs(e) < 90.0)) throw std::invalid_argument("rays: elevations must lie in (-90, 90) degrees");
  }
};

}  // namespace sqocc::io
