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
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "sqocc/io.hpp"
#include "test_util.hpp"

namespace sqocc {
namespace {

namespace fs = std::filesystem;

fs::path temp_dir() {
  const auto dir = fs::temp_directory_path() / ("sqocc_test_io_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  return dir;
}

bool bit_equal(double a, double b) { return std::memcmp(&a, &b, sizeof(double)) == 0; }

void expect_same_scene(const Scene& a, const Scene& b) {
  EXPECT_EQ(a.classes.names, b.classes.names);
  ASSERT_EQ(a.primitives.size(), b.primitives.size());
  for (std::size_t i = 0; i < a.primitives.size(); ++i) {
    const auto &p = a.primitives[i], &q = b.primitives[i];
    for (int k = 0; k < 3; ++k) {
      EXPECT_TRUE(bit_equal(p.mu[k], q.mu[k]));
      EXPECT_TRUE(bit_equal(p.scale[k], q.scale[k]));
    }
    for (int k = 0; k < 4; ++k) EXPECT_TRUE(bit_equal(p.rot.coeffs()[k], q.rot.coeffs()[k]));
    EXPECT_TRUE(bit_equal(p.opacity, q.opacity));
    EXPECT_TRUE(bit_equal(p.eps1, q.eps1));
    EXPECT_TRUE(bit_equal(p.eps2, q.eps2));
    ASSERT_EQ(p.logits.size(), q.logits.size());
    for (std::size_t k = 0; k < p.logits.size(); ++k) EXPECT_TRUE(bit_equal(p.logits[k], q.logits[k]));
  }
}

TEST(SceneFile, RoundTripBitExact) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto scene = gen_scene(seed, 50, VoxelGridSpec::occ3d());
    std::stringstream ss;
    io::write_scene(ss, scene);
    expect_same_scene(scene, io::read_scene(ss));
  }
}

TEST(SceneFile, EmptyAndHeaderOnly) {
  std::istringstream empty("");
  const auto s = io::read_scene(empty);
  EXPECT_TRUE(s.primitives.empty());
  std::istringstream header(R"({"classes": ["a", "b"], "version": 1})"
                            "\n\n");
  const auto h = io::read_scene(header);
  EXPECT_EQ(h.classes.size(), 2u);
  EXPECT_TRUE(h.primitives.empty());
}

TEST(SceneFile, ErrorsCarryLineNumbers) {
  const std::string header = R"({"classes": ["a", "b"], "version": 1})";
  const std::string good =
      R"({"mu": [0,0,0], "scale": [1,1,1], "quat": [1,0,0,0], "opacity": 0.5, "eps": [1,1], "logits": [0,1]})";
  const std::vector<std::pair<std::string, std::string>> bad{
      {R"({"mu": [0,0], "scale": [1,1,1], "quat": [1,0,0,0], "opacity": 0.5, "eps": [1,1], "logits": [0,1]})", "mu"},
      {R"({"mu": [0,0,0], "scale": [1,1,1], "quat": [1,0,0,0], "opacity": 0.5, "eps": [1,1], "logits": [0]})",
       "logits"},
      {R"({"mu": [0,0,0], "scale": [1,-1,1], "quat": [1,0,0,0], "opacity": 0.5, "eps": [1,1], "logits": [0,1]})",
       "scale"},
      {R"({"mu": [NaN,0,0], "scale": [1,1,1], "quat": [1,0,0,0], "opacity": 0.5, "eps": [1,1], "logits": [0,1]})",
       "JSON"},
      {R"({"mu": [1e999,0,0], "scale": [1,1,1], "quat": [1,0,0,0], "opacity": 0.5, "eps": [1,1], "logits": [0,1]})",
       ""},
      {"not json", "JSON"},
  };
  for (const auto& [line, what] : bad) {
    std::istringstream is(header + "\n" + good + "\n" + line + "\n");
    try {
      io::read_scene(is);
      ADD_FAILURE() << "accepted: " << line;
    } catch (const io::ParseError& e) {
      EXPECT_EQ(e.line(), 3u) << e.what();
      EXPECT_NE(std::string(e.what()).find(what), std::string::npos) << e.what();
    }
  }
  std::istringstream no_version(R"({"classes": ["a"]})");
  EXPECT_THROW(io::read_scene(no_version), io::ParseError);
}

TEST(SceneFile, WriterRejectsNonFinite) {
  auto scene = gen_scene(1, 2, VoxelGridSpec::occ3d());
  scene.primitives[1].logits[0] = std::numeric_limits<double>::quiet_NaN();
  std::stringstream ss;
  EXPECT_THROW(io::write_scene(ss, scene), std::invalid_argument);
}

TEST(CloudFile, RoundTrip) {
  const auto scene = gen_scene(3, 2, VoxelGridSpec::occ3d());
  const auto cloud = gaussianize(scene);
  std::stringstream ss;
  io::write_cloud(ss, cloud);
  const auto back = io::read_cloud(ss);
  ASSERT_EQ(back.size(), cloud.size());
  EXPECT_EQ(back.classes.names, cloud.classes.names);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    EXPECT_EQ(back.gaussians[i].mean, cloud.gaussians[i].mean);
    EXPECT_EQ(back.gaussians[i].scales, cloud.gaussians[i].scales);
    EXPECT_EQ(back.gaussians[i].rot.coeffs(), cloud.gaussians[i].rot.coeffs());
    EXPECT_EQ(back.gaussians[i].opacity, cloud.gaussians[i].opacity);
    EXPECT_EQ(back.gaussians[i].logits, cloud.gaussians[i].logits);
    EXPECT_EQ(back.gaussians[i].parent, cloud.gaussians[i].parent);
    EXPECT_EQ(back.gaussians[i].layer, cloud.gaussians[i].layer);
  }
}

TEST(GridFile, RoundTripBitExactAndLayout) {
  auto spec = testing::cube_grid(12, 0.4, Vec3(1, 2, 3));
  spec.origin = Vec3(-1.4, -0.4, 0.6);
  const auto scene = gen_scene(9, 10, spec, ClassTable::numbered(5));
  const auto r = voxelize(scene, spec);
  std::stringstream ss;
  io::write_grid(ss, r.grid, &r.dense.v_o);
  const std::string bytes = ss.str();
  const std::size_t n = spec.voxel_count();
  ASSERT_EQ(bytes.size(), 4 + 4 + 12 + 12 + 4 + 2 + n + 1 + 4 * n);
  EXPECT_EQ(bytes.substr(0, 4), "SQOC");
  EXPECT_EQ(static_cast<unsigned char>(bytes[4]), 1);
  EXPECT_EQ(static_cast<unsigned char>(bytes[8]), 12);

  const auto back = io::read_grid(ss);
  EXPECT_TRUE(back.grid.spec.same_geometry(r.grid.spec));
  EXPECT_EQ(back.grid.labels, r.grid.labels);
  EXPECT_EQ(back.grid.classes.size(), 5u);
  ASSERT_TRUE(back.occupancy);
  for (std::size_t i = 0; i < n; ++i) EXPECT_EQ((*back.occupancy)[i], static_cast<float>(r.dense.v_o[i]));

  // Re-writing what was read reproduces the bytes.
  std::vector<double> occ(back.occupancy->begin(), back.occupancy->end());
  std::stringstream again;
  io::write_grid(again, back.grid, &occ);
  EXPECT_EQ(again.str(), bytes);
}

TEST(GridFile, OccupancyOptionalAndCorruptionDetected) {
  const auto spec = testing::cube_grid(4, 0.5);
  SemanticGrid g;
  g.spec = spec;
  g.classes = ClassTable::numbered(2);
  g.labels.assign(spec.voxel_count(), 255);
  g.labels[3] = 1;
  std::stringstream ss;
  io::write_grid(ss, g);
  const std::string bytes = ss.str();
  std::stringstream copy(bytes);
  EXPECT_FALSE(io::read_grid(copy).occupancy);

  std::stringstream truncated(bytes.substr(0, bytes.size() - 2));
  EXPECT_THROW(io::read_grid(truncated), io::ParseError);
  std::string bad_magic = bytes;
  bad_magic[0] = 'X';
  std::stringstream bm(bad_magic);
  EXPECT_THROW(io::read_grid(bm), io::ParseError);
  std::string bad_label = bytes;
  bad_label[4 + 4 + 12 + 16 + 2] = 9;
  std::stringstream bl(bad_label);
  EXPECT_THROW(io::read_grid(bl), io::ParseError);
}

TEST(GridFile, WidenRecoversConfiguredDoubles) {
  for (double v : {0.4, -40.0, -1.0, 0.1, 0.2, 12.8, -6.4, 5.4})
    EXPECT_EQ(io::detail::widen(static_cast<float>(v)), v);
}

TEST(AtomicWrite, NoPartialFileOnFailure) {
  const auto dir = temp_dir();
  const auto path = dir / "out.bin";
  fs::remove(path);
  EXPECT_THROW(io::write_atomic(path,
                                [](std::ostream& os) {
                                  os << "partial";
                                  throw std::runtime_error("boom");
                                }),
               std::runtime_error);
  EXPECT_FALSE(fs::exists(path));
  for (const auto& e : fs::directory_iterator(dir)) ADD_FAILURE() << "leftover " << e.path();
  io::write_atomic(path, [](std::ostream& os) { os << "ok"; });
  std::ifstream is(path);
  std::string s;
  is >> s;
  EXPECT_EQ(s, "ok");
  fs::remove_all(dir);
}

TEST(Images, PfmRoundTripAndRowOrder) {
  std::vector<double> v{1, 2, 3, 4, 5, 6};
  std::stringstream ss;
  io::write_pfm(ss, 3, 2, v);
  const std::string bytes = ss.str();
  EXPECT_EQ(bytes.substr(0, 11), "Pf\n3 2\n-1.0");
  // The first stored row is the bottom row (4, 5, 6).
  float first;
  std::memcpy(&first, bytes.data() + 12, 4);
  EXPECT_EQ(first, 4.0f);
  const auto img = io::read_pfm(ss);
  for (std::size_t i = 0; i < v.size(); ++i) EXPECT_EQ(img.values[i], static_cast<float>(v[i]));
}

TEST(Images, PpmAndPgm) {
  RenderOutput out(2, 1, 2, 255);
  out.semantic = {1, 255};
  std::stringstream ppm;
  io::write_ppm(ppm, out, {{10, 20, 30}, {40, 50, 60}});
  EXPECT_EQ(ppm.str(), std::string("P6\n2 1\n255\n") + std::string("\x28\x32\x3c\0\0\0", 6));
  std::stringstream pgm;
  io::write_pgm(pgm, 2, 1, {0.0, 1.0});
  EXPECT_EQ(pgm.str(), std::string("P5\n2 1\n255\n") + std::string("\0\xff", 2));
  std::istringstream pal("# comment\n1 2 3\n\n4 5 6\n");
  EXPECT_EQ(io::read_palette(pal).size(), 2u);
  std::istringstream bad("1 2 300\n");
  EXPECT_THROW(io::read_palette(bad), io::ParseError);
}

TEST(CameraFile, MatrixAndLookAtForms) {
  std::istringstream a(R"({"fx": 100, "fy": 100, "cx": 32, "cy": 24, "width": 64, "height": 48,
    "world_to_camera": [1,0,0,0, 0,1,0,0, 0,0,1,0, 0,0,0,1]})");
  const auto cam = io::read_camera(a);
  EXPECT_TRUE(cam.world_to_camera.matrix().isIdentity());
  std::istringstream b(R"({"fx": 100, "fy": 100, "cx": 32, "cy": 24, "width": 64, "height": 48,
    "eye": [5, 0, 0], "target": [0, 0, 0], "up": [0, 0, 1]})");
  const auto look = io::read_camera(b);
  EXPECT_NEAR((look.world_to_camera * Vec3::Zero() - Vec3(0, 0, 5)).norm(), 0.0, 1e-12);
  std::stringstream round;
  io::write_camera(round, look);
  const auto back = io::read_camera(round);
  EXPECT_TRUE(back.world_to_camera.matrix().isApprox(look.world_to_camera.matrix(), 1e-15));
}

TEST(CameraFile, ValidationErrors) {
  for (const char* text : {R"({"fx": 0, "fy": 100, "cx": 1, "cy": 1, "width": 2, "height": 2, "eye": [1,0,0], "target": [0,0,0]})",
                           R"({"fx": 1, "fy": 1, "cx": 1, "cy": 1, "width": 2.5, "height": 2, "eye": [1,0,0], "target": [0,0,0]})",
                           R"({"fx": 1, "fy": 1, "cx": 1, "cy": 1, "width": 2, "height": 2})",
                           R"({"fx": 1, "fy": 1, "cx": 1, "cy": 1, "width": 2, "height": 2,
                               "world_to_camera": [2,0,0,0, 0,1,0,0, 0,0,1,0, 0,0,0,1]})",
                           "[1, 2]", "{"}) {
    std::istringstream is(text);
    EXPECT_THROW(io::read_camera(is), io::ParseError) << text;
  }
}

TEST(Report, TextAndJson) {
  MetricReport r;
  r.iou = 0.5;
  r.miou = 0.25;
  r.per_class_iou = {0.25, 0.0};
  r.per_class_valid = {true, false};
  r.ray_iou = {{1.0, 0.1}, {2.0, 0.2}};
  const ClassTable classes{{"car", "tree"}};
  const auto text = io::report_text(r, classes);
  EXPECT_NE(text.find("iou=0.5\n"), std::string::npos);
  EXPECT_NE(text.find("iou.car=0.25\n"), std::string::npos);
  EXPECT_NE(text.find("iou.tree=absent\n"), std::string::npos);
  EXPECT_NE(text.find("ray_iou@2=0.2"), std::string::npos);
  const auto j = io::report_json(r, classes);
  EXPECT_EQ(j["miou"], 0.25);
  EXPECT_TRUE(j["per_class_iou"]["tree"].is_null());
  EXPECT_EQ(j["ray_iou"]["1"], 0.1);
}

TEST(RunConfigTest, Validation) {
  io::RunConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.ray_thresholds = {};
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.ray_elevations_deg = {95};
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.voxelize.tau = -1;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
}

}  // namespace
}  // namespace sqocc
