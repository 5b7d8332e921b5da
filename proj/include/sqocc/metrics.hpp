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
// Occupancy metrics: binary IoU, per-class IoU / mIoU and a ray-based IoU.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "sqocc/grid.hpp"
#include "sqocc/parallel.hpp"

namespace sqocc {

struct MetricReport {
  double iou = 0.0;
  std::vector<double> per_class_iou;
  std::vector<bool> per_class_valid;  // false: class absent from both grids
  double miou = 0.0;
  std::vector<std::pair<double, double>> ray_iou;  // (threshold metres, value)
};

namespace detail {

inline void check_comparable(const SemanticGrid& pred, const SemanticGrid& gt) {
  if (!pred.spec.same_geometry(gt.spec)) throw std::invalid_argument("metrics: grids differ in geometry");
  if (pred.labels.size() != pred.spec.voxel_count() || gt.labels.size() != gt.spec.voxel_count())
    throw std::invalid_argument("metrics: label count does not match grid dims");
  if (pred.classes.size() != gt.classes.size() || pred.classes.free_index != gt.classes.free_index)
    throw std::invalid_argument("metrics: grids use different class tables");
  const std::size_t c = pred.classes.size();
  for (const auto* g : {&pred, &gt})
    for (Label l : g->labels)
      if (l != g->classes.free_index && l >= c) throw std::invalid_argument("metrics: label outside class table");
}

}  // namespace detail

// Binary free/occupied IoU; 1 when both grids are entirely free.
inline double voxel_iou(const SemanticGrid& pred, const SemanticGrid& gt) {
  detail::check_comparable(pred, gt);
  std::size_t inter = 0, uni = 0;
  for (std::size_t i = 0; i < pred.labels.size(); ++i) {
    const bool a = pred.occupied(i), b = gt.occupied(i);
    inter += a && b;
    uni += a || b;
  }
  return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

struct ClassIou {
  std::vector<double> per_class;
  std::vector<bool> valid;
  double mean = 1.0;  // over valid classes; 1 when no class is present anywhere
};

inline ClassIou class_iou(const SemanticGrid& pred, const SemanticGrid& gt) {
  detail::check_comparable(pred, gt);
  const std::size_t c = pred.classes.size();
  std::vector<std::size_t> inter(c, 0), in_pred(c, 0), in_gt(c, 0);
  const Label free = pred.classes.free_index;
  for (std::size_t i = 0; i < pred.labels.size(); ++i) {
    const Label a = pred.labels[i], b = gt.labels[i];
    if (a != free) ++in_pred[a];
    if (b != free) ++in_gt[b];
    if (a == b && a != free) ++inter[a];
  }
  ClassIou out;
  out.per_class.assign(c, 0.0);
  out.valid.assign(c, false);
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t k = 0; k < c; ++k) {
    const std::size_t uni = in_pred[k] + in_gt[k] - inter[k];
    if (uni == 0) continue;
    out.valid[k] = true;
    out.per_class[k] = static_cast<double>(inter[k]) / static_cast<double>(uni);
    sum += out.per_class[k];
    ++n;
  }
  if (n) out.mean = sum / static_cast<double>(n);
  return out;
}

struct Ray {
  Vec3 origin;
  Vec3 dir;  // unit length
};

struct RayHit {
  double distance = 0.0;  // ray parameter where the hit voxel is entered
  Label label = 0;
};

// First occupied voxel along the ray (3D DDA). Voxels behind the origin are
// ignored; a ray starting inside an occupied voxel hits at distance 0.
inline std::optional<RayHit> first_hit(const SemanticGrid& grid, const Ray& ray) {
  const auto& spec = grid.spec;
  const Vec3 lo = spec.origin, hi = spec.max_corner();
  double t_enter = 0.0, t_exit = std::numeric_limits<double>::infinity();
  for (int a = 0; a < 3; ++a) {
    if (ray.dir[a] == 0.0) {
      if (ray.origin[a] < lo[a] || ray.origin[a] >= hi[a]) return std::nullopt;
      continue;
    }
    double t0 = (lo[a] - ray.origin[a]) / ray.dir[a], t1 = (hi[a] - ray.origin[a]) / ray.dir[a];
    if (t0 > t1) std::swap(t0, t1);
    t_enter = std::max(t_enter, t0);
    t_exit = std::min(t_exit, t1);
  }
  if (!(t_enter < t_exit)) return std::nullopt;

  const Vec3 start = ray.origin + t_enter * ray.dir;
  Index3 v;
  std::array<int, 3> step{};
  std::array<double, 3> t_max{}, t_delta{};
  for (int a = 0; a < 3; ++a) {
    v[a] = std::clamp<std::int64_t>(static_cast<std::int64_t>(std::floor((start[a] - lo[a]) / spec.resolution)), 0,
                                    spec.dims[a] - 1);
    if (ray.dir[a] > 0.0) {
      step[a] = 1;
      t_max[a] = (lo[a] + (v[a] + 1) * spec.resolution - ray.origin[a]) / ray.dir[a];
      t_delta[a] = spec.resolution / ray.dir[a];
    } else if (ray.dir[a] < 0.0) {
      step[a] = -1;
      t_max[a] = (lo[a] + v[a] * spec.resolution - ray.origin[a]) / ray.dir[a];
      t_delta[a] = -spec.resolution / ray.dir[a];
    } else {
      t_max[a] = t_delta[a] = std::numeric_limits<double>::infinity();
    }
  }
  double t = t_enter;
  while (true) {
    const std::size_t idx =
        spec.linear(static_cast<int>(v[0]), static_cast<int>(v[1]), static_cast<int>(v[2]));
    if (grid.labels[idx] != grid.classes.free_index) return RayHit{t, grid.labels[idx]};
    int axis = 0;
    if (t_max[1] < t_max[axis]) axis = 1;
    if (t_max[2] < t_max[axis]) axis = 2;
    t = t_max[axis];
    if (t >= t_exit) return std::nullopt;
    v[axis] += step[axis];
    if (v[axis] < 0 || v[axis] >= spec.dims[axis]) return std::nullopt;
    t_max[axis] += t_delta[axis];
  }
}

inline const std::vector<double>& default_ray_thresholds() {
  static const std::vector<double> t{1.0, 2.0, 4.0};
  return t;
}

// Horizontal fan from the grid centre: `azimuths` evenly spaced headings at
// each listed elevation (degrees).
inline std::vector<Ray> default_rays(const VoxelGridSpec& spec, int azimuths = 360,
                                     const std::vector<double>& elevations_deg = {-15.0, -7.5, 0.0, 7.5}) {
  const Vec3 centre = 0.5 * (spec.origin + spec.max_corner());
  std::vector<Ray> rays;
  rays.reserve(static_cast<std::size_t>(azimuths) * elevations_deg.size());
  for (double el_deg : elevations_deg) {
    const double el = el_deg * std::numbers::pi / 180.0;
    for (int k = 0; k < azimuths; ++k) {
      const double az = 2.0 * std::numbers::pi * k / azimuths;
      rays.push_back({centre, Vec3(std::cos(el) * std::cos(az), std::cos(el) * std::sin(az), std::sin(el))});
    }
  }
  return rays;
}

// A ray is a true positive at threshold t when both grids are hit, the hit
// distances differ by at most t and the classes agree. Any other pred hit is
// a false positive and any other gt hit a false negative.
inline std::vector<std::pair<double, double>> ray_iou(const SemanticGrid& pred, const SemanticGrid& gt,
                                                      const std::vector<Ray>& rays,
                                                      const std::vector<double>& thresholds = default_ray_thresholds()) {
  detail::check_comparable(pred, gt);
  if (rays.empty()) throw std::invalid_argument("ray_iou: no rays");
  if (thresholds.empty()) throw std::invalid_argument("ray_iou: no thresholds");
  for (double t : thresholds)
    if (!(t >= 0.0)) throw std::invalid_argument("ray_iou: thresholds must be >= 0");
  for (const auto& r : rays)
    if (!r.origin.allFinite() || std::abs(r.dir.norm() - 1.0) > 1e-6)
      throw std::invalid_argument("ray_iou: ray directions must be unit vectors");

  std::vector<std::optional<RayHit>> hp(rays.size()), hg(rays.size());
  parallel_for(rays.size(), [&](std::size_t i) {
    hp[i] = first_hit(pred, rays[i]);
    hg[i] = first_hit(gt, rays[i]);
  });

  std::vector<std::pair<double, double>> out;
  for (double t : thresholds) {
    std::size_t tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < rays.size(); ++i) {
      const bool match = hp[i] && hg[i] && hp[i]->label == hg[i]->label &&
                         std::abs(hp[i]->distance - hg[i]->distance) <= t;
      if (match) {
        ++tp;
        continue;
      }
      fp += hp[i].has_value();
      fn += hg[i].has_value();
    }
    const std::size_t denom = tp + fp + fn;
    out.emplace_back(t, denom == 0 ? 1.0 : static_cast<double>(tp) / static_cast<double>(denom));
  }
  return out;
}

inline MetricReport evaluate(const SemanticGrid& pred, const SemanticGrid& gt, const std::vector<Ray>& rays,
                             const std::vector<double>& thresholds = default_ray_thresholds()) {
  MetricReport r;
  r.iou = voxel_iou(pred, gt);
  auto ci = class_iou(pred, gt);
  r.per_class_iou = std::move(ci.per_class);
  r.per_class_valid = std::move(ci.valid);
  r.miou = ci.mean;
  r.ray_iou = ray_iou(pred, gt, rays, thresholds);
  return r;
}

}  // namespace sqocc
