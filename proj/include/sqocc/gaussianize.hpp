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
// Multi-layer Gaussian approximation of superquadric occupancy density.
//
// Each superquadric is expanded into a nested family of scaled copies. Every
// copy receives a deformed icosphere, and every deformed face carries one 3D
// Gaussian: centred on the face centroid, spanning the face in its tangent
// plane, and extending along the normal by half the distance to the matching
// face on the neighbouring layer. Opacities are set so that each Gaussian's
// peak equals the superquadric density at its centre.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <iterator>
#include <stdexcept>
#include <string>
#include <vector>

#include "sqocc/grid.hpp"
#include "sqocc/parallel.hpp"
#include "sqocc/superquadric.hpp"
#include "sqocc/tessellate.hpp"

namespace sqocc {

struct Gaussian3D {
  Vec3 mean = Vec3::Zero();
  Vec3 scales = Vec3::Ones();  // (tangent_u, tangent_v, normal) standard deviations
  Quat rot = Quat::Identity();  // local-to-world
  double opacity = 0.0;
  std::vector<double> logits;
  std::size_t parent = 0;
  std::size_t layer = 0;

  // opacity * exp(-d^2 / 2), d the Mahalanobis distance to the mean.
  double evaluate(const Vec3& x) const {
    const Vec3 d = rot.conjugate() * (x - mean);
    const double q = (d.array() / scales.array()).square().sum();
    return opacity * std::exp(-0.5 * q);
  }
};

struct GaussianCloud {
  std::vector<Gaussian3D> gaussians;
  ClassTable classes;

  std::size_t size() const { return gaussians.size(); }
};

enum class OpacitySign {
  kAligned,           // sigma * exp(-f(m)): peak matches the superquadric density
  kPositiveExponent,  // sigma * exp(+f(m))
};

inline const std::vector<double>& default_k_values() {
  static const std::vector<double> k{0.5, 0.6, 0.75, 0.9, 1.05, 1.2, 1.6, 2.0, 2.5};
  return k;
}

struct GaussianizeConfig {
  std::vector<double> k_values = default_k_values();
  int level = 1;
  double xy_coverage = 0.7;
  OpacitySign opacity_sign = OpacitySign::kAligned;
  double min_opacity_cull = 0.0;

  void validate() const {
    validate_scale_list(k_values);
    if (level < 0 || level > kMaxIcosphereLevel)
      throw std::invalid_argument("gaussianize: level must be in [0, " + std::to_string(kMaxIcosphereLevel) + "]");
    if (!(xy_coverage > 0.0) || !std::isfinite(xy_coverage))
      throw std::invalid_argument("gaussianize: xy_coverage must be > 0");
    if (!(min_opacity_cull >= 0.0)) throw std::invalid_argument("gaussianize: min_opacity_cull must be >= 0");
  }
};

struct BuildReport {
  std::vector<std::size_t> per_primitive;  // emitted Gaussians per superquadric
  std::size_t degenerate_skipped = 0;
  std::size_t culled = 0;

  std::size_t total() const {
    std::size_t n = 0;
    for (auto c : per_primitive) n += c;
    return n;
  }
};

// Peak opacity for a Gaussian centred at world point m.
inline double layer_opacity(const SuperQuadric& sq, const Vec3& m, OpacitySign sign) {
  const double f = inside_outside(sq, to_local(sq, m));
  if (sign == OpacitySign::kAligned) return sq.opacity * std::exp(-f);
  // exp(+f) overflows quickly far outside the surface; keep it finite.
  return sq.opacity * std::exp(std::min(f, 700.0));
}

// Half the distance between matching face centroids on consecutive layers.
inline double pair_z_scale(const std::vector<SurfaceFrame>& frames_k, const std::vector<SurfaceFrame>& frames_next,
                           std::size_t face) {
  if (frames_k.size() != frames_next.size())
    throw std::invalid_argument("pair_z_scale: frame lists differ in length");
  if (face >= frames_k.size()) throw std::out_of_range("pair_z_scale: face index out of range");
  return 0.5 * (frames_next[face].centroid - frames_k[face].centroid).norm();
}

namespace detail {

inline void gaussianize_into(const SuperQuadric& sq, std::size_t parent, const GaussianizeConfig& cfg,
                             const IcosphereMesh& mesh, std::vector<Gaussian3D>& out, BuildReport& report) {
  const auto& ks = cfg.k_values;
  std::vector<std::vector<SurfaceFrame>> layers;
  layers.reserve(ks.size());
  for (double k : ks) layers.push_back(deform_mesh(mesh, k * sq.scale, sq.eps1, sq.eps2));

  const Mat3 l2w = sq.local_to_world();
  std::size_t emitted = 0;
  for (std::size_t li = 0; li < ks.size(); ++li) {
    const auto& frames = layers[li];
    for (std::size_t fi = 0; fi < frames.size(); ++fi) {
      const SurfaceFrame& fr = frames[fi];
      if (fr.degenerate) {
        ++report.degenerate_skipped;
        continue;
      }
      const double xy = cfg.xy_coverage * std::sqrt(fr.area);
      double z;
      if (ks.size() == 1) {
        z = xy;  // no neighbouring layer to pair with
      } else if (li + 1 < ks.size()) {
        z = pair_z_scale(frames, layers[li + 1], fi);
      } else {
        z = pair_z_scale(layers[li - 1], frames, fi);
      }
      Gaussian3D g;
      g.mean = l2w * fr.centroid + sq.mu;
      g.scales = Vec3(xy, xy, z);
      g.rot = (sq.rot * Quat(fr.basis())).normalized();
      g.opacity = layer_opacity(sq, g.mean, cfg.opacity_sign);
      if (g.opacity < cfg.min_opacity_cull) {
        ++report.culled;
        continue;
      }
      g.logits = sq.logits;
      g.parent = parent;
      g.layer = li;
      out.push_back(std::move(g));
      ++emitted;
    }
  }
  report.per_primitive.push_back(emitted);
}

}  // namespace detail

inline GaussianCloud gaussianize(const SuperQuadric& sq, const GaussianizeConfig& cfg = {},
                                 BuildReport* report = nullptr) {
  cfg.validate();
  const auto mesh = icosphere(cfg.level);
  GaussianCloud cloud;
  cloud.classes = ClassTable::numbered(std::max<std::size_t>(1, sq.num_classes()));
  BuildReport local;
  detail::gaussianize_into(sq, 0, cfg, mesh, cloud.gaussians, report ? *report : local);
  return cloud;
}

// Scene-level map over primitives; output is concatenated in primitive order
// regardless of how many workers ran.
inline GaussianCloud gaussianize(const Scene& scene, const GaussianizeConfig& cfg = {},
                                 BuildReport* report = nullptr) {
  cfg.validate();
  const auto mesh = icosphere(cfg.level);
  const std::size_t n = scene.primitives.size();
  std::vector<std::vector<Gaussian3D>> parts(n);
  std::vector<BuildReport> reports(n);
  parallel_for(n, [&](std::size_t i) {
    parts[i].reserve(mesh.faces.size() * cfg.k_values.size());
    detail::gaussianize_into(scene.primitives[i], i, cfg, mesh, parts[i], reports[i]);
  });

  GaussianCloud cloud;
  cloud.classes = scene.classes;
  std::size_t total = 0;
  for (const auto& p : parts) total += p.size();
  cloud.gaussians.reserve(total);
  BuildReport merged;
  for (std::size_t i = 0; i < n; ++i) {
    std::move(parts[i].begin(), parts[i].end(), std::back_inserter(cloud.gaussians));
    merged.per_primitive.push_back(reports[i].per_primitive.front());
    merged.degenerate_skipped += reports[i].degenerate_skipped;
    merged.culled += reports[i].culled;
  }
  if (report) *report = std::move(merged);
  return cloud;
}

// Precomputed inverse covariances for evaluating a mixture at many points.
class MixtureEvaluator {
 public:
  explicit MixtureEvaluator(const GaussianCloud& cloud) {
    terms_.reserve(cloud.size());
    for (const auto& g : cloud.gaussians) {
      const Mat3 r = g.rot.toRotationMatrix();
      const Vec3 inv = g.scales.array().square().inverse();
      terms_.push_back({g.mean, r * inv.asDiagonal() * r.transpose(), g.opacity});
    }
  }

  double operator()(const Vec3& x) const {
    double sum = 0.0;
    for (const auto& t : terms_) {
      const Vec3 d = x - t.mean;
      sum += t.opacity * std::exp(-0.5 * d.dot(t.precision * d));
    }
    return sum;
  }

 private:
  struct Term {
    Vec3 mean;
    Mat3 precision;
    double opacity;
  };
  std::vector<Term> terms_;
};

// Opacity-weighted superquadric density and mixture density sampled at the
// voxel centres of grid.
struct DensityFields {
  std::vector<double> truth;
  std::vector<double> mixture;
};

inline DensityFields sample_density_fields(const SuperQuadric& sq, const GaussianCloud& cloud,
                                           const VoxelGridSpec& grid) {
  grid.validate();
  DensityFields out;
  out.truth.resize(grid.voxel_count());
  out.mixture.resize(grid.voxel_count());
  const MixtureEvaluator mixture(cloud);
  const std::size_t plane = static_cast<std::size_t>(grid.dims[0]) * grid.dims[1];
  parallel_for(grid.voxel_count(), [&](std::size_t i) {
    const auto x = static_cast<int>(i % grid.dims[0]);
    const auto y = static_cast<int>((i / grid.dims[0]) % grid.dims[1]);
    const auto z = static_cast<int>(i / plane);
    const Vec3 p = grid.center(x, y, z);
    out.truth[i] = sq.opacity * density(sq, p);
    out.mixture[i] = mixture(p);
  });
  return out;
}

struct ApproximationReport {
  double mean_abs_error = 0.0;
  double max_error = 0.0;
  double support_mean_abs_error = 0.0;  // restricted to truth > support_threshold
  std::size_t support_count = 0;
  std::size_t sample_count = 0;
};

inline constexpr double kSupportThreshold = 0.05;

inline ApproximationReport approximation_error(const DensityFields& fields) {
  ApproximationReport r;
  r.sample_count = fields.truth.size();
  double sum = 0.0;
  double support_sum = 0.0;
  for (std::size_t i = 0; i < fields.truth.size(); ++i) {
    const double e = std::abs(fields.truth[i] - fields.mixture[i]);
    sum += e;
    r.max_error = std::max(r.max_error, e);
    if (fields.truth[i] > kSupportThreshold) {
      support_sum += e;
      ++r.support_count;
    }
  }
  if (r.sample_count) r.mean_abs_error = sum / static_cast<double>(r.sample_count);
  if (r.support_count) r.support_mean_abs_error = support_sum / static_cast<double>(r.support_count);
  return r;
}

inline ApproximationReport approximation_error(const SuperQuadric& sq, const GaussianCloud& cloud,
                                               const VoxelGridSpec& grid) {
  return approximation_error(sample_density_fields(sq, cloud, grid));
}

}  // namespace sqocc
