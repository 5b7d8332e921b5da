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
// Seeded synthetic scenes for tests and benchmarks.
#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "sqocc/grid.hpp"
#include "sqocc/superquadric.hpp"

namespace sqocc {

// The 17 semantic classes of Occ3D-nuScenes.
inline ClassTable occ3d_classes() {
  ClassTable t;
  t.names = {"others",      "barrier",     "bicycle",           "bus",        "car",
             "construction_vehicle", "motorcycle", "pedestrian", "traffic_cone", "trailer",
             "truck",       "driveable_surface", "other_flat", "sidewalk",   "terrain",
             "manmade",     "vegetation"};
  return t;
}

struct SceneGenOptions {
  double min_scale = 0.2;
  double max_scale = 4.0;
  double min_opacity = 0.1;
  double max_opacity = 1.0;
  double logit_range = 3.0;  // logits uniform in [-range, range]
};

// Deterministic in (seed, n, grid, classes): the generator and the mapping to
// [0, 1) are fully specified, so files are reproducible across platforms.
class SceneRng {
 public:
  explicit SceneRng(std::uint64_t seed) : engine_(seed) {}
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniformly distributed rotation (Shoemake).
  Quat rotation() {
    const double u1 = uniform(), u2 = uniform(), u3 = uniform();
    const double a = std::sqrt(1.0 - u1), b = std::sqrt(u1);
    const double t2 = 2.0 * std::numbers::pi * u2, t3 = 2.0 * std::numbers::pi * u3;
    return Quat(b * std::cos(t3), a * std::sin(t2), a * std::cos(t2), b * std::sin(t3));
  }

 private:
  std::mt19937_64 engine_;
};

inline Scene gen_scene(std::uint64_t seed, std::size_t n, const VoxelGridSpec& grid,
                       const ClassTable& classes = occ3d_classes(), const SceneGenOptions& opt = {}) {
  grid.validate();
  classes.validate();
  SceneRng rng(seed);
  Scene scene;
  scene.classes = classes;
  const Vec3 lo = grid.origin;
  const Vec3 hi = grid.max_corner();
  scene.primitives.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Vec3 mu, scale;
    for (int a = 0; a < 3; ++a) mu[a] = rng.uniform(lo[a], hi[a]);
    for (int a = 0; a < 3; ++a) scale[a] = rng.uniform(opt.min_scale, opt.max_scale);
    const Quat rot = rng.rotation();
    const double opacity = rng.uniform(opt.min_opacity, opt.max_opacity);
    const double eps1 = rng.uniform(kMinExponent, kMaxExponent);
    const double eps2 = rng.uniform(kMinExponent, kMaxExponent);
    std::vector<double> logits(classes.size());
    for (auto& l : logits) l = rng.uniform(-opt.logit_range, opt.logit_range);
    scene.primitives.push_back(SuperQuadric::make(mu, scale, rot, opacity, std::move(logits), eps1, eps2));
  }
  return scene;
}

}  // namespace sqocc
