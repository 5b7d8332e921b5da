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
// Superquadric scene voxelization.
//
// Every voxel centre p accumulates
//   v_o(p) = sum_i sigma_i * exp(-f_i(p))     (occupancy weight)
//   v_c(p) = sum_i exp(-f_i(p)) * c_i         (class weights)
// over the primitives whose neighbourhood covers it. Voxels with v_o < tau
// are free; the rest take the arg-max class.
//
// voxelize() scatters each primitive into a window around its centre voxel.
// voxelize_bruteforce() gathers every primitive at every voxel and is the
// reference the fast path is checked against.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <memory>
#include <tuple>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "sqocc/grid.hpp"
#include "sqocc/parallel.hpp"
#include "sqocc/sample_weights.hpp"
#include "sqocc/superquadric.hpp"

namespace sqocc {

enum class SemanticMode {
  kLogitSum,  // accumulate raw logits
  kProbSum,   // accumulate softmax(logits)
};

struct VoxelizeConfig {
  double tau = 0.01;
  int neighborhood_radius = 5;  // voxels, before per-primitive extent expansion
  SemanticMode semantic_mode = SemanticMode::kLogitSum;
  // false: every primitive covers the whole grid and nothing is culled, which
  // makes voxelize() agree bit-for-bit with voxelize_bruteforce().
  bool truncate = true;
  // Window expansion in units of the primitive's largest semi-axis.
  double extent_scale = 2.5;
  // Inside the window, samples with inside-outside >= this are skipped
  // (exp(-20) ~ 2.1e-9).
  double cull_inside_outside = 20.0;
  unsigned threads = 0;  // 0: thread_count()

  void validate() const {
    if (!(tau >= 0.0)) throw std::invalid_argument("voxelize: tau must be >= 0");
    if (neighborhood_radius < 0) throw std::invalid_argument("voxelize: neighborhood radius must be >= 0");
    if (!(extent_scale >= 0.0) || !std::isfinite(extent_scale))
      throw std::invalid_argument("voxelize: extent_scale must be finite and >= 0");
    if (!(cull_inside_outside > 0.0)) throw std::invalid_argument("voxelize: cull threshold must be > 0");
  }
};

namespace detail {

// Per-primitive constants hoisted out of the voxel loops.
struct PreparedPrimitive {
  Mat3 w2l;
  Vec3 mu;
  Vec3 inv_scale;
  Vec3 scale;
  double p_xy;   // 2 / eps2
  double q_xy;   // eps2 / eps1
  double p_z;    // 2 / eps1
  double sigma;
  double cull_ratio;  // local |x_i| / s_i at or beyond which f >= cull threshold
  double min_weight;  // samples below exp(-cull threshold) are skipped when truncating
  std::vector<double> class_weights;

  PreparedPrimitive(const SuperQuadric& sq, const VoxelizeConfig& cfg)
      : w2l(sq.world_to_local()),
        mu(sq.mu),
        inv_scale(sq.scale.cwiseInverse()),
        scale(sq.scale),
        p_xy(2.0 / sq.eps2),
        q_xy(sq.eps2 / sq.eps1),
        p_z(2.0 / sq.eps1),
        sigma(sq.opacity),
        // f >= (max_i |x_i| / s_i)^(2 / eps1)
        cull_ratio(std::pow(cfg.cull_inside_outside, sq.eps1 / 2.0)),
        min_weight(cfg.truncate ? std::exp(-cfg.cull_inside_outside) : 0.0),
        class_weights(sq.logits) {
    if (cfg.semantic_mode == SemanticMode::kProbSum && !class_weights.empty()) {
      const double m = *std::max_element(class_weights.begin(), class_weights.end());
      double sum = 0.0;
      for (auto& w : class_weights) sum += (w = std::exp(w - m));
      for (auto& w : class_weights) w /= sum;
    }
  }

  Vec3 local(const Vec3& p) const { return w2l * (p - mu); }

  // Local coordinates of voxel centre (x, y, z), written as the row start plus
  // x steps so grid rows can be walked incrementally. Both voxelizers go
  // through this exact expression.
  Vec3 row_origin(const VoxelGridSpec& spec, std::int64_t y, std::int64_t z) const {
    return local(spec.center(0, y, z));
  }
  Vec3 row_step(const VoxelGridSpec& spec) const { return w2l.col(0) * spec.resolution; }
  static Vec3 along_row(const Vec3& origin, const Vec3& step, std::int64_t x) {
    return origin + static_cast<double>(x) * step;
  }

  // |x_i| / s_i
  Vec3 ratios(const Vec3& x) const { return (x.array() * inv_scale.array()).abs(); }

  bool culled(const Vec3& r) const { return r.maxCoeff() >= cull_ratio; }

  double weight(const Vec3& x) const {
    const Vec3 r = ratios(x);
    const WeightLanes lanes{&r[0], &r[1], &r[2], &p_xy, &q_xy, &p_z};
    double w;
    sample_weights(lanes, &w, 1);
    return w;
  }
};

struct IndexBox {
  Index3 lo{0, 0, 0};
  Index3 hi{-1, -1, -1};  // inclusive
  bool empty() const { return lo[0] > hi[0] || lo[1] > hi[1] || lo[2] > hi[2]; }
};

inline IndexBox full_box(const VoxelGridSpec& spec) {
  return {{0, 0, 0}, {spec.dims[0] - 1, spec.dims[1] - 1, spec.dims[2] - 1}};
}

inline void accumulate(DenseGrids& dense, std::size_t idx, const PreparedPrimitive& p, double w) {
  dense.v_o[idx] += w * p.sigma;
  scaled_add(dense.v_c.data() + idx * dense.num_classes, p.class_weights.data(), w, dense.num_classes);
}

// Samples of one primitive waiting for a batched weight evaluation.
class SampleBatch {
 public:
  static constexpr std::size_t kCapacity = 512;

  bool full() const { return n_ == kCapacity; }

  void push(const Vec3& ratios, std::size_t voxel) {
    ax_[n_] = ratios.x();
    ay_[n_] = ratios.y();
    az_[n_] = ratios.z();
    voxel_[n_] = voxel;
    ++n_;
  }

  void flush(DenseGrids& dense, const PreparedPrimitive& p) {
    if (n_ == 0) return;
    sample_weights_shared(ax_, ay_, az_, p.p_xy, p.q_xy, p.p_z, w_, n_);
    for (std::size_t i = 0; i < n_; ++i)
      if (w_[i] >= p.min_weight) accumulate(dense, voxel_[i], p, w_[i]);
    n_ = 0;
  }

 private:
  std::size_t n_ = 0;
  double ax_[kCapacity], ay_[kCapacity], az_[kCapacity];
  double w_[kCapacity];
  std::size_t voxel_[kCapacity];
};

// Voxel x-range of one grid row (fixed y, z) that can survive the cull test.
// Local coordinates are affine in x; the range is padded by one voxel and the
// per-sample test stays authoritative.
inline std::pair<std::int64_t, std::int64_t> cull_row_range(const PreparedPrimitive& p, const Vec3& base,
                                                             const Vec3& step, std::int64_t lo, std::int64_t hi) {
  const double d_lo = static_cast<double>(lo);
  const double d_hi = static_cast<double>(hi);
  double t_lo = d_lo;
  double t_hi = d_hi;
  // Clamped to [lo - 2, hi + 2] first, so truncation toward zero plus a
  // correction gives floor and ceil.
  auto floor_in = [&](double v) {
    v = std::clamp(v, d_lo - 2.0, d_hi + 2.0);
    const double t = static_cast<double>(static_cast<std::int64_t>(v));
    return t > v ? t - 1.0 : t;
  };
  auto ceil_in = [&](double v) {
    v = std::clamp(v, d_lo - 2.0, d_hi + 2.0);
    const double t = static_cast<double>(static_cast<std::int64_t>(v));
    return t < v ? t + 1.0 : t;
  };
  for (int a = 0; a < 3; ++a) {
    const double bound = p.cull_ratio * p.scale[a];
    if (std::abs(step[a]) < 1e-300) {
      if (std::abs(base[a]) >= bound * (1.0 + 1e-12)) return {1, 0};
      continue;
    }
    double e0 = (-bound - base[a]) / step[a];
    double e1 = (bound - base[a]) / step[a];
    if (e0 > e1) std::swap(e0, e1);
    t_lo = std::max(t_lo, floor_in(e0) - 1.0);
    t_hi = std::min(t_hi, ceil_in(e1) + 1.0);
  }
  if (!(t_lo <= t_hi)) return {1, 0};
  return {static_cast<std::int64_t>(t_lo), static_cast<std::int64_t>(t_hi)};
}

}  // namespace detail

// Window radius in voxels for one primitive: the base neighbourhood plus its
// own extent.
inline std::int64_t window_radius(const SuperQuadric& sq, const VoxelGridSpec& spec, const VoxelizeConfig& cfg) {
  return cfg.neighborhood_radius +
         static_cast<std::int64_t>(std::ceil(sq.scale.maxCoeff() * cfg.extent_scale / spec.resolution));
}

// Upper bound on the contribution sigma * exp(-f) one primitive can make to a
// voxel the fast path leaves out. Outside the window the voxel centre is more
// than d = (radius + 1/2) * resolution away from mu along some axis, and
// f >= (max_i |x_i| / s_i)^(2/eps1) >= (d / (sqrt(3) * max s))^(2/eps1).
// Inside the window only samples with f >= the cull threshold are skipped.
inline double truncation_tail_bound(const SuperQuadric& sq, const VoxelGridSpec& spec, const VoxelizeConfig& cfg) {
  if (!cfg.truncate) return 0.0;
  const double d = (static_cast<double>(window_radius(sq, spec, cfg)) + 0.5) * spec.resolution;
  const double ratio = d / (std::sqrt(3.0) * sq.scale.maxCoeff());
  const double window_tail = std::exp(-std::pow(ratio, 2.0 / sq.eps1));
  return sq.opacity * std::max(window_tail, std::exp(-cfg.cull_inside_outside));
}

// Label every voxel from accumulated weights. Voxels with v_o below tau, or
// with no mass at all, are free; ties in the class arg-max go to the lowest id.
inline SemanticGrid finalize(const DenseGrids& dense, double tau, const ClassTable& classes) {
  if (dense.num_classes != classes.size()) throw std::invalid_argument("finalize: class count mismatch");
  if (dense.v_o.size() != dense.spec.voxel_count()) throw std::invalid_argument("finalize: dims mismatch");
  SemanticGrid out;
  out.spec = dense.spec;
  out.classes = classes;
  out.labels.assign(dense.v_o.size(), classes.free_index);
  const std::size_t c = dense.num_classes;
  parallel_chunks(dense.v_o.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const double o = dense.v_o[i];
      if (o < tau || o == 0.0) continue;
      const double* vc = dense.v_c.data() + i * c;
      std::size_t best = 0;
      for (std::size_t k = 1; k < c; ++k)
        if (vc[k] > vc[best]) best = k;
      out.labels[i] = static_cast<Label>(best);
    }
  });
  return out;
}

struct VoxelizeResult {
  SemanticGrid grid;
  DenseGrids dense;
};

// Scatter only the dense fields (no thresholding).
inline DenseGrids voxelize_dense(const Scene& scene, const VoxelGridSpec& spec, const VoxelizeConfig& cfg = {}) {
  scene.validate();
  spec.validate();
  cfg.validate();
  const std::size_t c = scene.classes.size();
  DenseGrids dense(spec, c);

  std::vector<detail::PreparedPrimitive> prepared;
  std::vector<detail::IndexBox> boxes;
  prepared.reserve(scene.primitives.size());
  for (const auto& sq : scene.primitives) {
    if (sq.opacity == 0.0) continue;
    prepared.emplace_back(sq, cfg);
    if (!cfg.truncate) {
      boxes.push_back(detail::full_box(spec));
      continue;
    }
    detail::IndexBox box;
    const auto centre = spec.voxel_of(sq.mu);
    const auto radius = window_radius(sq, spec, cfg);
    // World AABB of the local cull box, padded by a voxel for rounding.
    const Mat3 l2w = sq.local_to_world();
    const Vec3 half = l2w.cwiseAbs() * (prepared.back().cull_ratio * sq.scale);
    for (int a = 0; a < 3; ++a) {
      std::int64_t lo = centre[a] - radius;
      std::int64_t hi = centre[a] + radius;
      const double cull_lo = std::floor((sq.mu[a] - half[a] - spec.origin[a]) / spec.resolution - 0.5) - 1.0;
      const double cull_hi = std::ceil((sq.mu[a] + half[a] - spec.origin[a]) / spec.resolution - 0.5) + 1.0;
      if (std::isfinite(cull_lo) && cull_lo > static_cast<double>(lo)) lo = static_cast<std::int64_t>(cull_lo);
      if (std::isfinite(cull_hi) && cull_hi < static_cast<double>(hi)) hi = static_cast<std::int64_t>(cull_hi);
      box.lo[a] = std::max<std::int64_t>(lo, 0);
      box.hi[a] = std::min<std::int64_t>(hi, spec.dims[a] - 1);
    }
    boxes.push_back(box);
  }

  // Bucket primitives into cache-sized blocks of voxels. Each block is owned
  // by one worker and visits its primitives in scene order, so every voxel
  // sums its contributions in the same order for any worker count.
  constexpr std::int64_t kBlock = 16;
  std::array<std::int64_t, 3> nblocks{};
  for (int a = 0; a < 3; ++a) nblocks[a] = (spec.dims[a] + kBlock - 1) / kBlock;
  std::vector<std::vector<std::uint32_t>> buckets(static_cast<std::size_t>(nblocks[0] * nblocks[1] * nblocks[2]));
  auto block_id = [&](std::int64_t bx, std::int64_t by, std::int64_t bz) {
    return static_cast<std::size_t>(bx + nblocks[0] * (by + nblocks[1] * bz));
  };
  for (std::size_t pi = 0; pi < prepared.size(); ++pi) {
    const auto& box = boxes[pi];
    if (box.empty()) continue;
    for (auto bz = box.lo[2] / kBlock; bz <= box.hi[2] / kBlock; ++bz)
      for (auto by = box.lo[1] / kBlock; by <= box.hi[1] / kBlock; ++by)
        for (auto bx = box.lo[0] / kBlock; bx <= box.hi[0] / kBlock; ++bx)
          buckets[block_id(bx, by, bz)].push_back(static_cast<std::uint32_t>(pi));
  }

  parallel_chunks(buckets.size(), [&](std::size_t b_begin, std::size_t b_end) {
    auto batch = std::make_unique<detail::SampleBatch>();
    for (std::size_t b = b_begin; b < b_end; ++b) {
      const auto bi = static_cast<std::int64_t>(b);
      const Index3 block_lo{(bi % nblocks[0]) * kBlock, ((bi / nblocks[0]) % nblocks[1]) * kBlock,
                            (bi / (nblocks[0] * nblocks[1])) * kBlock};
      for (const auto pi : buckets[b]) {
        const auto& p = prepared[pi];
        Index3 lo, hi;
        for (int a = 0; a < 3; ++a) {
          lo[a] = std::max(boxes[pi].lo[a], block_lo[a]);
          hi[a] = std::min(boxes[pi].hi[a], block_lo[a] + kBlock - 1);
        }
        const Vec3 step = p.row_step(spec);
        for (auto z = lo[2]; z <= hi[2]; ++z) {
          for (auto y = lo[1]; y <= hi[1]; ++y) {
            const Vec3 origin = p.row_origin(spec, y, z);
            auto [x0, x1] = std::pair{lo[0], hi[0]};
            if (cfg.truncate) std::tie(x0, x1) = detail::cull_row_range(p, origin, step, x0, x1);
            if (x0 > x1) continue;
            const std::size_t row = spec.linear(0, static_cast<int>(y), static_cast<int>(z));
            for (auto x = x0; x <= x1; ++x) {
              const Vec3 r = p.ratios(detail::PreparedPrimitive::along_row(origin, step, x));
              if (cfg.truncate && p.culled(r)) continue;
              batch->push(r, row + static_cast<std::size_t>(x));
              if (batch->full()) batch->flush(dense, p);
            }
          }
        }
        batch->flush(dense, p);
      }
    }
  }, cfg.threads);
  return dense;
}

inline VoxelizeResult voxelize(const Scene& scene, const VoxelGridSpec& spec, const VoxelizeConfig& cfg = {}) {
  VoxelizeResult r;
  r.dense = voxelize_dense(scene, spec, cfg);
  r.grid = finalize(r.dense, cfg.tau, scene.classes);
  return r;
}

// Reference gather: every voxel sums every primitive, no window, no culling.
// Cost is O(voxels * primitives).
inline DenseGrids voxelize_bruteforce_dense(const Scene& scene, const VoxelGridSpec& spec,
                                            const VoxelizeConfig& cfg = {}) {
  scene.validate();
  spec.validate();
  cfg.validate();
  DenseGrids dense(spec, scene.classes.size());
  std::vector<detail::PreparedPrimitive> prepared;
  for (const auto& sq : scene.primitives)
    if (sq.opacity != 0.0) prepared.emplace_back(sq, cfg);

  const std::size_t n = prepared.size();
  std::vector<double> ps(n), qs(n), rs(n);
  for (std::size_t k = 0; k < n; ++k) {
    ps[k] = prepared[k].p_xy;
    qs[k] = prepared[k].q_xy;
    rs[k] = prepared[k].p_z;
  }
  const std::size_t nx = spec.dims[0];
  const std::size_t ny = spec.dims[1];
  parallel_chunks(spec.voxel_count(), [&](std::size_t begin, std::size_t end) {
    std::vector<double> ax(n), ay(n), az(n), w(n);
    for (std::size_t i = begin; i < end; ++i) {
      const auto x = static_cast<std::int64_t>(i % nx);
      const auto y = static_cast<std::int64_t>((i / nx) % ny);
      const auto z = static_cast<std::int64_t>(i / (nx * ny));
      for (std::size_t k = 0; k < n; ++k) {
        const auto& p = prepared[k];
        const Vec3 r = p.ratios(detail::PreparedPrimitive::along_row(p.row_origin(spec, y, z), p.row_step(spec), x));
        ax[k] = r.x();
        ay[k] = r.y();
        az[k] = r.z();
      }
      sample_weights({ax.data(), ay.data(), az.data(), ps.data(), qs.data(), rs.data()}, w.data(), n);
      for (std::size_t k = 0; k < n; ++k) detail::accumulate(dense, i, prepared[k], w[k]);
    }
  }, cfg.threads);
  return dense;
}

inline VoxelizeResult voxelize_bruteforce(const Scene& scene, const VoxelGridSpec& spec,
                                          const VoxelizeConfig& cfg = {}) {
  VoxelizeResult r;
  r.dense = voxelize_bruteforce_dense(scene, spec, cfg);
  r.grid = finalize(r.dense, cfg.tau, scene.classes);
  return r;
}

}  // namespace sqocc
