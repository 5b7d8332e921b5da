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
// Icosphere generation and deformation onto superquadric surfaces.
#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <ostream>
#include <stdexcept>
#include <utility>
#include <vector>

#include "sqocc/superquadric.hpp"

namespace sqocc {

inline constexpr int kMaxIcosphereLevel = 4;

struct IcosphereMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<std::uint32_t, 3>> faces;  // counter-clockwise seen from outside
  int level = 0;
};

inline constexpr std::size_t icosphere_face_count(int level) { return std::size_t{20} << (2 * level); }
inline constexpr std::size_t icosphere_vertex_count(int level) { return (std::size_t{10} << (2 * level)) + 2; }

inline IcosphereMesh icosphere(int level) {
  if (level < 0 || level > kMaxIcosphereLevel)
    throw std::invalid_argument("icosphere: level must be in [0, " + std::to_string(kMaxIcosphereLevel) + "]");

  const double t = std::numbers::phi;
  IcosphereMesh mesh;
  mesh.level = level;
  mesh.vertices = {{-1, t, 0}, {1, t, 0}, {-1, -t, 0}, {1, -t, 0}, {0, -1, t}, {0, 1, t},
                   {0, -1, -t}, {0, 1, -t}, {t, 0, -1}, {t, 0, 1}, {-t, 0, -1}, {-t, 0, 1}};
  for (auto& v : mesh.vertices) v.normalize();
  mesh.faces = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11}, {1, 5, 9}, {5, 11, 4},
                {11, 10, 2}, {10, 7, 6}, {7, 1, 8},  {3, 9, 4},  {3, 4, 2},   {3, 2, 6}, {3, 6, 8},
                {3, 8, 9},  {4, 9, 5},  {2, 4, 11}, {6, 2, 10}, {8, 6, 7},   {9, 8, 1}};

  for (int l = 0; l < level; ++l) {
    std::map<std::pair<std::uint32_t, std::uint32_t>, std::uint32_t> midpoints;
    auto midpoint = [&](std::uint32_t a, std::uint32_t b) {
      const auto key = std::minmax(a, b);
      auto it = midpoints.find(key);
      if (it != midpoints.end()) return it->second;
      const auto idx = static_cast<std::uint32_t>(mesh.vertices.size());
      mesh.vertices.push_back((mesh.vertices[a] + mesh.vertices[b]).normalized());
      midpoints.emplace(key, idx);
      return idx;
    };
    std::vector<std::array<std::uint32_t, 3>> next;
    next.reserve(mesh.faces.size() * 4);
    for (const auto& f : mesh.faces) {
      const auto ab = midpoint(f[0], f[1]);
      const auto bc = midpoint(f[1], f[2]);
      const auto ca = midpoint(f[2], f[0]);
      next.push_back({f[0], ab, ca});
      next.push_back({f[1], bc, ab});
      next.push_back({f[2], ca, bc});
      next.push_back({ab, bc, ca});
    }
    mesh.faces = std::move(next);
  }
  return mesh;
}

// ASCII OFF dump for inspection in mesh viewers.
inline void write_off(std::ostream& os, const std::vector<Vec3>& vertices,
                      const std::vector<std::array<std::uint32_t, 3>>& faces) {
  os.precision(17);
  os << "OFF\n" << vertices.size() << ' ' << faces.size() << " 0\n";
  for (const auto& v : vertices) os << v.x() << ' ' << v.y() << ' ' << v.z() << '\n';
  for (const auto& f : faces) os << "3 " << f[0] << ' ' << f[1] << ' ' << f[2] << '\n';
}

struct SphericalCoords {
  double eta = 0.0;    // latitude, [-pi/2, pi/2]
  double omega = 0.0;  // longitude, (-pi, pi]
};

inline SphericalCoords spherical_coords(const Vec3& v) {
  SphericalCoords c;
  c.eta = std::asin(std::clamp(v.z(), -1.0, 1.0));
  // Poles have no longitude; report 0.
  if (std::abs(v.x()) < 1e-15 && std::abs(v.y()) < 1e-15) return c;
  c.omega = std::atan2(v.y(), v.x());
  if (c.omega <= -std::numbers::pi) c.omega = std::numbers::pi;
  return c;
}

// sign(a) * |a|^e
inline double signed_pow(double a, double e) {
  if (a == 0.0) return 0.0;
  return std::copysign(std::pow(std::abs(a), e), a);
}

// Parametric surface point of the superquadric with the given shape.
inline Vec3 map_to_surface(double eta, double omega, const Vec3& scale, double eps1, double eps2) {
  const double ce = signed_pow(std::cos(eta), eps1);
  return {scale.x() * ce * signed_pow(std::cos(omega), eps2), scale.y() * ce * signed_pow(std::sin(omega), eps2),
          scale.z() * signed_pow(std::sin(eta), eps1)};
}

inline constexpr double kDegenerateFaceArea = 1e-12;

// Per-face data of a deformed icosphere, in the superquadric's local frame.
struct SurfaceFrame {
  Vec3 centroid = Vec3::Zero();
  Vec3 normal = Vec3::UnitZ();
  Vec3 tangent_u = Vec3::UnitX();
  Vec3 tangent_v = Vec3::UnitY();
  double area = 0.0;
  double eta = 0.0;
  double omega = 0.0;
  bool degenerate = false;

  // Columns (tangent_u, tangent_v, normal): a right-handed rotation.
  Mat3 basis() const {
    Mat3 m;
    m.col(0) = tangent_u;
    m.col(1) = tangent_v;
    m.col(2) = normal;
    return m;
  }
};

inline std::vector<Vec3> deform_vertices(const IcosphereMesh& mesh, const Vec3& scale, double eps1, double eps2) {
  std::vector<Vec3> out;
  out.reserve(mesh.vertices.size());
  for (const auto& v : mesh.vertices) {
    const auto c = spherical_coords(v);
    out.push_back(map_to_surface(c.eta, c.omega, scale, eps1, eps2));
  }
  return out;
}

// One frame per mesh face, in face order. Vertices are mapped onto the
// surface first; centroid, area, normal and tangents come from the deformed
// triangle. (eta, omega) are those of the undeformed centroid direction.
inline std::vector<SurfaceFrame> deform_mesh(const IcosphereMesh& mesh, const Vec3& scale, double eps1, double eps2) {
  const auto verts = deform_vertices(mesh, scale, eps1, eps2);
  std::vector<SurfaceFrame> frames;
  frames.reserve(mesh.faces.size());
  for (const auto& f : mesh.faces) {
    const Vec3& a = verts[f[0]];
    const Vec3& b = verts[f[1]];
    const Vec3& c = verts[f[2]];
    SurfaceFrame fr;
    fr.centroid = (a + b + c) / 3.0;
    const Vec3 e1 = b - a;
    const Vec3 cross = e1.cross(c - a);
    const double cross_norm = cross.norm();
    fr.area = 0.5 * cross_norm;

    const Vec3 dir = (mesh.vertices[f[0]] + mesh.vertices[f[1]] + mesh.vertices[f[2]]).normalized();
    const auto sc = spherical_coords(dir);
    fr.eta = sc.eta;
    fr.omega = sc.omega;

    fr.degenerate = fr.area < kDegenerateFaceArea;
    fr.normal = fr.degenerate ? dir : Vec3(cross / cross_norm);
    Vec3 u = e1 - e1.dot(fr.normal) * fr.normal;
    if (u.norm() < 1e-300 || fr.degenerate) {
      // Any direction orthogonal to the normal will do.
      u = fr.normal.unitOrthogonal();
    }
    fr.tangent_u = u.normalized();
    fr.tangent_v = fr.normal.cross(fr.tangent_u);
    frames.push_back(fr);
  }
  return frames;
}

}  // namespace sqocc
