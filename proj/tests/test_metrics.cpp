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
#include <algorithm>
#include <numeric>

#include <gtest/gtest.h>

#include "sqocc/metrics.hpp"
#include "test_util.hpp"

namespace sqocc {
namespace {

SemanticGrid empty_grid(const VoxelGridSpec& spec, std::size_t classes) {
  SemanticGrid g;
  g.spec = spec;
  g.classes = ClassTable::numbered(classes);
  g.labels.assign(spec.voxel_count(), g.classes.free_index);
  return g;
}

SemanticGrid random_grid(SceneRng& rng, const VoxelGridSpec& spec, std::size_t classes, double fill) {
  auto g = empty_grid(spec, classes);
  for (auto& l : g.labels)
    if (rng.uniform() < fill) l = static_cast<Label>(rng.uniform() * static_cast<double>(classes));
  return g;
}

// Confusion matrix over C + 1 labels, with index C standing for free.
struct Confusion {
  std::size_t c;
  std::vector<std::size_t> m;
  Confusion(const SemanticGrid& p, const SemanticGrid& g) : c(p.classes.size()), m((c + 1) * (c + 1), 0) {
    for (std::size_t i = 0; i < p.labels.size(); ++i) {
      const std::size_t a = p.occupied(i) ? p.labels[i] : c;
      const std::size_t b = g.occupied(i) ? g.labels[i] : c;
      ++m[a * (c + 1) + b];
    }
  }
  std::size_t at(std::size_t a, std::size_t b) const { return m[a * (c + 1) + b]; }
  double binary_iou() const {
    std::size_t tp = 0, fp = 0, fn = 0;
    for (std::size_t a = 0; a < c; ++a) {
      for (std::size_t b = 0; b < c; ++b) tp += at(a, b);
      fp += at(a, c);
      fn += at(c, a);
    }
    return tp + fp + fn == 0 ? 1.0 : static_cast<double>(tp) / static_cast<double>(tp + fp + fn);
  }
  std::pair<std::vector<double>, double> class_iou() const {
    std::vector<double> iou(c, -1.0);
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t k = 0; k < c; ++k) {
      std::size_t row = 0, col = 0;
      for (std::size_t j = 0; j <= c; ++j) row += at(k, j), col += at(j, k);
      const std::size_t uni = row + col - at(k, k);
      if (uni == 0) continue;
      iou[k] = static_cast<double>(at(k, k)) / static_cast<double>(uni);
      sum += iou[k];
      ++n;
    }
    return {iou, n ? sum / static_cast<double>(n) : 1.0};
  }
};

TEST(VoxelIou, Examples) {
  VoxelGridSpec spec;
  spec.dims = {2, 2, 1};
  auto pred = empty_grid(spec, 2), gt = empty_grid(spec, 2);
  EXPECT_EQ(voxel_iou(pred, gt), 1.0);
  gt.labels[spec.linear(1, 1, 0)] = 0;
  EXPECT_EQ(voxel_iou(pred, gt), 0.0);
  pred.labels[spec.linear(0, 0, 0)] = 0;
  pred.labels[spec.linear(1, 0, 0)] = 1;
  gt.labels[spec.linear(1, 0, 0)] = 0;
  EXPECT_DOUBLE_EQ(voxel_iou(pred, gt), 1.0 / 3.0);
  EXPECT_EQ(voxel_iou(pred, pred), 1.0);
}

TEST(VoxelIou, RejectsMismatch) {
  VoxelGridSpec a, b;
  a.dims = {2, 2, 1};
  b.dims = {2, 1, 2};
  EXPECT_THROW(voxel_iou(empty_grid(a, 2), empty_grid(b, 2)), std::invalid_argument);
  EXPECT_THROW(voxel_iou(empty_grid(a, 2), empty_grid(a, 3)), std::invalid_argument);
  auto bad = empty_grid(a, 2);
  bad.labels[0] = 7;
  EXPECT_THROW(voxel_iou(bad, empty_grid(a, 2)), std::invalid_argument);
}

TEST(ClassIou, MatchesConfusionOracle) {
  SceneRng rng(1);
  VoxelGridSpec spec;
  spec.dims = {16, 12, 5};
  for (int trial = 0; trial < 50; ++trial) {
    const auto pred = random_grid(rng, spec, 15, rng.uniform(0.0, 0.8));
    const auto gt = random_grid(rng, spec, 15, rng.uniform(0.0, 0.8));
    const Confusion cm(pred, gt);
    EXPECT_EQ(voxel_iou(pred, gt), cm.binary_iou());
    EXPECT_EQ(voxel_iou(pred, gt), voxel_iou(gt, pred));
    const auto ci = class_iou(pred, gt);
    const auto [ref, ref_mean] = cm.class_iou();
    for (std::size_t k = 0; k < 15; ++k) {
      EXPECT_EQ(ci.valid[k], ref[k] >= 0.0);
      if (ci.valid[k]) EXPECT_EQ(ci.per_class[k], ref[k]);
    }
    EXPECT_DOUBLE_EQ(ci.mean, ref_mean);
  }
}

TEST(ClassIou, IdenticalAndEmptyPrediction) {
  SceneRng rng(2);
  VoxelGridSpec spec;
  spec.dims = {10, 10, 4};
  const auto gt = random_grid(rng, spec, 6, 0.3);
  const auto self = class_iou(gt, gt);
  for (std::size_t k = 0; k < 6; ++k)
    if (self.valid[k]) EXPECT_EQ(self.per_class[k], 1.0);
  EXPECT_EQ(self.mean, 1.0);
  const auto none = class_iou(empty_grid(spec, 6), gt);
  for (std::size_t k = 0; k < 6; ++k)
    if (none.valid[k]) EXPECT_EQ(none.per_class[k], 0.0);
}

TEST(ClassIou, InvariantUnderRelabeling) {
  SceneRng rng(3);
  VoxelGridSpec spec;
  spec.dims = {8, 8, 8};
  auto pred = random_grid(rng, spec, 5, 0.5), gt = random_grid(rng, spec, 5, 0.5);
  const double before = class_iou(pred, gt).mean;
  const Label perm[5] = {3, 0, 4, 1, 2};
  for (auto* g : {&pred, &gt})
    for (auto& l : g->labels)
      if (l != g->classes.free_index) l = perm[l];
  EXPECT_DOUBLE_EQ(class_iou(pred, gt).mean, before);
}

TEST(FirstHit, AxisAlignedDistance) {
  VoxelGridSpec spec;
  spec.dims = {40, 1, 1};
  spec.resolution = 0.5;
  auto g = empty_grid(spec, 2);
  g.labels[20] = 1;
  const auto hit = first_hit(g, Ray{Vec3(0, 0.25, 0.25), Vec3(1, 0, 0)});
  ASSERT_TRUE(hit);
  EXPECT_DOUBLE_EQ(hit->distance, 10.0);
  EXPECT_EQ(hit->label, 1);
  EXPECT_FALSE(first_hit(g, Ray{Vec3(0, 0.25, 0.25), Vec3(-1, 0, 0)}));
  // Starting outside the grid, the distance counts from the ray origin.
  const auto outside = first_hit(g, Ray{Vec3(-5, 0.25, 0.25), Vec3(1, 0, 0)});
  ASSERT_TRUE(outside);
  EXPECT_DOUBLE_EQ(outside->distance, 15.0);
}

TEST(FirstHit, MatchesDenseSampling) {
  SceneRng rng(4);
  VoxelGridSpec spec;
  spec.dims = {20, 20, 8};
  spec.origin = Vec3(-4, -4, -1.6);
  const auto g = random_grid(rng, spec, 3, 0.02);
  for (int i = 0; i < 300; ++i) {
    Vec3 d(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
    d.normalize();
    const Ray ray{Vec3(rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(-1, 1)), d};
    const auto hit = first_hit(g, ray);
    // March in tiny steps; the first sample inside an occupied voxel must lie
    // just past the DDA entry distance.
    std::optional<double> ref;
    for (double t = 0.0; t < 20.0; t += 1e-4) {
      const auto v = spec.voxel_of(ray.origin + t * ray.dir);
      if (!spec.contains(v)) continue;
      if (g.occupied(spec.linear(static_cast<int>(v[0]), static_cast<int>(v[1]), static_cast<int>(v[2])))) {
        ref = t;
        break;
      }
    }
    ASSERT_EQ(hit.has_value(), ref.has_value()) << i;
    if (hit) EXPECT_NEAR(hit->distance, *ref, 2e-4) << i;
  }
}

TEST(RayIou, ThresholdRule) {
  VoxelGridSpec spec;
  spec.dims = {60, 1, 1};
  spec.resolution = 0.5;
  auto pred = empty_grid(spec, 2), gt = empty_grid(spec, 2);
  pred.labels[20] = 1;  // hit at 10.0
  gt.labels[23] = 1;    // hit at 11.5
  const std::vector<Ray> rays{{Vec3(0, 0.25, 0.25), Vec3(1, 0, 0)}};
  const auto r = ray_iou(pred, gt, rays, {1.0, 2.0, 4.0});
  EXPECT_EQ(r[0].second, 0.0);
  EXPECT_EQ(r[1].second, 1.0);
  EXPECT_EQ(r[2].second, 1.0);
  gt.labels[23] = 0;  // class mismatch
  for (const auto& [t, v] : ray_iou(pred, gt, rays, {1.0, 2.0, 4.0})) EXPECT_EQ(v, 0.0);
  EXPECT_THROW(ray_iou(pred, gt, {}, {1.0}), std::invalid_argument);
}

TEST(RayIou, SelfOneEmptyZeroAndMonotone) {
  SceneRng rng(5);
  const auto spec = testing::cube_grid(24, 0.4);
  const auto rays = default_rays(spec);
  EXPECT_EQ(rays.size(), 360u * 4u);
  for (int trial = 0; trial < 10; ++trial) {
    const auto a = random_grid(rng, spec, 4, 0.01), b = random_grid(rng, spec, 4, 0.01);
    for (const auto& [t, v] : ray_iou(a, a, rays)) EXPECT_EQ(v, 1.0);
    const auto r = ray_iou(a, b, rays);
    ASSERT_EQ(r.size(), 3u);
    EXPECT_LE(r[0].second, r[1].second);
    EXPECT_LE(r[1].second, r[2].second);
  }
  // Walls on every side so every ray hits in gt.
  auto gt = empty_grid(spec, 2);
  for (int z = 0; z < 24; ++z)
    for (int y = 0; y < 24; ++y)
      for (int x = 0; x < 24; ++x)
        if (x == 0 || y == 0 || x == 23 || y == 23 || z == 0 || z == 23) gt.labels[spec.linear(x, y, z)] = 0;
  for (const auto& [t, v] : ray_iou(empty_grid(spec, 2), gt, rays)) EXPECT_EQ(v, 0.0);
  for (const auto& [t, v] : ray_iou(empty_grid(spec, 2), empty_grid(spec, 2), rays)) EXPECT_EQ(v, 1.0);
}

TEST(Evaluate, SelfComparisonAllOnes) {
  SceneRng rng(6);
  const auto spec = testing::cube_grid(16, 0.4);
  const auto g = random_grid(rng, spec, 5, 0.1);
  const auto r = evaluate(g, g, default_rays(spec, 36));
  EXPECT_EQ(r.iou, 1.0);
  EXPECT_EQ(r.miou, 1.0);
  for (const auto& [t, v] : r.ray_iou) EXPECT_EQ(v, 1.0);
}

}  // namespace
}  // namespace sqocc
