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
// Pinhole rendering of depth, semantic and alpha maps.
//
// splat_render() rasterizes a GaussianCloud with tile-based front-to-back
// alpha compositing. raymarch_render() integrates the superquadric density
// itself along each pixel ray and is the reference for the splats.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "sqocc/gaussianize.hpp"
#include "sqocc/parallel.hpp"
#include "sqocc/sample_weights.hpp"
#include "sqocc/superquadric.hpp"

namespace sqocc {

using Mat2 = Eigen::Matrix2d;
using Vec2 = Eigen::Vector2d;

// Camera frame: x right, y down, z forward. Pixel (u, v) is sampled at its
// centre (u + 0.5, v + 0.5).
struct Camera {
  double fx = 500.0;
  double fy = 500.0;
  double cx = 320.0;
  double cy = 240.0;
  int width = 640;
  int height = 480;
  Eigen::Isometry3d world_to_camera = Eigen::Isometry3d::Identity();
  double near = 0.1;
  double far = 100.0;

  void validate() const {
    if (!(fx > 0.0) || !(fy > 0.0) || !std::isfinite(fx) || !std::isfinite(fy))
      throw std::invalid_argument("camera: fx and fy must be > 0");
    if (!std::isfinite(cx) || !std::isfinite(cy)) throw std::invalid_argument("camera: non-finite principal point");
    if (width < 1 || height < 1) throw std::invalid_argument("camera: width and height must be >= 1");
    if (!(near > 0.0)) throw std::invalid_argument("camera: near must be > 0");
    if (!(far > near) || !std::isfinite(far)) throw std::invalid_argument("camera: far must be finite and > near");
    const Mat3 r = world_to_camera.linear();
    if (!world_to_camera.matrix().allFinite() || !(r.transpose() * r).isIdentity(1e-6) || r.determinant() < 0.0)
      throw std::invalid_argument("camera: extrinsic rotation is not a proper rotation");
  }

  Vec3 position() const { return world_to_camera.inverse() * Vec3::Zero(); }

  // Camera at eye looking at target with the given world up vector.
  static Eigen::Isometry3d look_at(const Vec3& eye, const Vec3& target, const Vec3& up) {
    const Vec3 forward = target - eye;
    if (!(forward.norm() > 0.0)) throw std::invalid_argument("camera: eye and target coincide");
    const Vec3 z = forward.normalized();
    const Vec3 side = z.cross(up);
    if (!(side.norm() > 1e-9 * up.norm())) throw std::invalid_argument("camera: up vector parallel to viewing direction");
    const Vec3 x = side.normalized();
    const Vec3 y = z.cross(x);
    Mat3 r;
    r.row(0) = x;
    r.row(1) = y;
    r.row(2) = z;
    Eigen::Isometry3d t = Eigen::Isometry3d::Identity();
    t.linear() = r;
    t.translation() = -r * eye;
    return t;
  }
};

struct RenderOutput {
  int width = 0;
  int height = 0;
  std::size_t num_classes = 0;
  Label free_index = 255;
  std::vector<double> depth;          // expected depth, 0 where nothing was hit
  std::vector<Label> semantic;        // class id or free_index
  std::vector<double> alpha;          // accumulated opacity
  std::vector<double> class_weights;  // width * height * num_classes

  RenderOutput() = default;
  RenderOutput(int w, int h, std::size_t classes, Label free)
      : width(w),
        height(h),
        num_classes(classes),
        free_index(free),
        depth(static_cast<std::size_t>(w) * h, 0.0),
        semantic(static_cast<std::size_t>(w) * h, free),
        alpha(static_cast<std::size_t>(w) * h, 0.0),
        class_weights(static_cast<std::size_t>(w) * h * classes, 0.0) {}

  std::size_t pixel(int u, int v) const { return static_cast<std::size_t>(v) * width + u; }
};

struct RenderOptions {
  double alpha_threshold = 0.5;  // minimum alpha for a pixel to carry a class
  unsigned threads = 0;
};

inline constexpr double kMaxSplatAlpha = 0.999;
inline constexpr double kMinTransmittance = 1e-4;
inline constexpr double kScreenCovarianceFloor = 0.3;
inline constexpr int kTileSize = 16;

// Largest eigenvalue of a symmetric 2x2 matrix.
inline double max_eigenvalue(const Mat2& m) {
  const double mid = 0.5 * (m(0, 0) + m(1, 1));
  const double half_diff = 0.5 * (m(0, 0) - m(1, 1));
  return mid + std::sqrt(half_diff * half_diff + m(0, 1) * m(1, 0));
}

struct ProjectedGaussian {
  Vec2 mean2d;
  Mat2 cov2d;
  double depth = 0.0;
};

inline std::optional<ProjectedGaussian> project_gaussian(const Gaussian3D& g, const Camera& cam) {
  const Vec3 p = cam.world_to_camera * g.mean;
  const double z = p.z();
  if (!(z > cam.near && z < cam.far)) return std::nullopt;

  // Clamp the Jacobian's evaluation point to a band around the frustum so
  // off-screen splats do not blow up.
  const double lim_lo_x = -1.3 * cam.cx / cam.fx, lim_hi_x = 1.3 * (cam.width - cam.cx) / cam.fx;
  const double lim_lo_y = -1.3 * cam.cy / cam.fy, lim_hi_y = 1.3 * (cam.height - cam.cy) / cam.fy;
  const double tx = std::clamp(p.x() / z, lim_lo_x, lim_hi_x) * z;
  const double ty = std::clamp(p.y() / z, lim_lo_y, lim_hi_y) * z;
  Eigen::Matrix<double, 2, 3> jac;
  jac << cam.fx / z, 0.0, -cam.fx * tx / (z * z), 0.0, cam.fy / z, -cam.fy * ty / (z * z);

  const Mat3 w = cam.world_to_camera.linear();
  const Mat3 rg = g.rot.toRotationMatrix();
  const Mat3 cov3d = w * rg * g.scales.array().square().matrix().asDiagonal() * rg.transpose() * w.transpose();

  ProjectedGaussian out;
  out.cov2d = jac * cov3d * jac.transpose();
  out.cov2d(0, 0) += kScreenCovarianceFloor;
  out.cov2d(1, 1) += kScreenCovarianceFloor;
  out.mean2d = Vec2(cam.fx * p.x() / z + cam.cx, cam.fy * p.y() / z + cam.cy);
  out.depth = z;

  const double radius = 3.0 * std::sqrt(max_eigenvalue(out.cov2d));
  if (out.mean2d.x() + radius < 0.0 || out.mean2d.x() - radius > cam.width || out.mean2d.y() + radius < 0.0 ||
      out.mean2d.y() - radius > cam.height)
    return std::nullopt;
  return out;
}

namespace detail {

inline void resolve_semantics(RenderOutput& out, double alpha_threshold) {
  const std::size_t c = out.num_classes;
  for (std::size_t i = 0; i < out.alpha.size(); ++i) {
    if (out.alpha[i] > 0.0) out.depth[i] /= out.alpha[i];
    if (c == 0 || !(out.alpha[i] >= alpha_threshold)) continue;
    const double* cw = out.class_weights.data() + i * c;
    std::size_t best = 0;
    for (std::size_t k = 1; k < c; ++k)
      if (cw[k] > cw[best]) best = k;
    out.semantic[i] = static_cast<Label>(best);
  }
}

}  // namespace detail

inline RenderOutput splat_render(const GaussianCloud& cloud, const Camera& cam, const RenderOptions& opt = {}) {
  cam.validate();
  const std::size_t c = cloud.classes.size();
  RenderOutput out(cam.width, cam.height, c, cloud.classes.free_index);

  struct Splat {
    Vec2 mean;
    Mat2 conic;  // inverse screen covariance
    double depth;
    double opacity;
    std::size_t index;
    int x0, x1, y0, y1;  // pixel bounds of the 3-sigma box, inclusive
  };
  std::vector<std::optional<Splat>> projected(cloud.size());
  parallel_for(cloud.size(), [&](std::size_t i) {
    const auto& g = cloud.gaussians[i];
    const auto pg = project_gaussian(g, cam);
    if (!pg) return;
    const double radius = 3.0 * std::sqrt(max_eigenvalue(pg->cov2d));
    Splat s{pg->mean2d, pg->cov2d.inverse(), pg->depth, g.opacity, i, 0, 0, 0, 0};
    s.x0 = std::max(0, static_cast<int>(std::floor(pg->mean2d.x() - radius)));
    s.x1 = std::min(cam.width - 1, static_cast<int>(std::ceil(pg->mean2d.x() + radius)));
    s.y0 = std::max(0, static_cast<int>(std::floor(pg->mean2d.y() - radius)));
    s.y1 = std::min(cam.height - 1, static_cast<int>(std::ceil(pg->mean2d.y() + radius)));
    if (s.x0 <= s.x1 && s.y0 <= s.y1) projected[i] = s;
  }, opt.threads);

  const int tiles_x = (cam.width + kTileSize - 1) / kTileSize;
  const int tiles_y = (cam.height + kTileSize - 1) / kTileSize;
  std::vector<std::vector<std::uint32_t>> tiles(static_cast<std::size_t>(tiles_x) * tiles_y);
  std::vector<Splat> splats;
  for (const auto& s : projected) {
    if (!s) continue;
    const auto id = static_cast<std::uint32_t>(splats.size());
    splats.push_back(*s);
    for (int ty = s->y0 / kTileSize; ty <= s->y1 / kTileSize; ++ty)
      for (int tx = s->x0 / kTileSize; tx <= s->x1 / kTileSize; ++tx)
        tiles[static_cast<std::size_t>(ty) * tiles_x + tx].push_back(id);
  }

  parallel_for(tiles.size(), [&](std::size_t t) {
    auto& list = tiles[t];
    std::sort(list.begin(), list.end(), [&](std::uint32_t a, std::uint32_t b) {
      if (splats[a].depth != splats[b].depth) return splats[a].depth < splats[b].depth;
      return splats[a].index < splats[b].index;
    });
    const int tx = static_cast<int>(t % tiles_x), ty = static_cast<int>(t / tiles_x);
    for (int v = ty * kTileSize; v < std::min(cam.height, (ty + 1) * kTileSize); ++v) {
      for (int u = tx * kTileSize; u < std::min(cam.width, (tx + 1) * kTileSize); ++u) {
        const Vec2 pix(u + 0.5, v + 0.5);
        const std::size_t pi = out.pixel(u, v);
        double transmittance = 1.0;
        double acc_alpha = 0.0, acc_depth = 0.0;
        double* cw = out.class_weights.data() + pi * c;
        for (const auto id : list) {
          const Splat& s = splats[id];
          if (u < s.x0 || u > s.x1 || v < s.y0 || v > s.y1) continue;
          const Vec2 d = pix - s.mean;
          const double a = std::min(kMaxSplatAlpha, s.opacity * std::exp(-0.5 * d.dot(s.conic * d)));
          if (!(a > 0.0)) continue;
          const double w = transmittance * a;
          acc_alpha += w;
          acc_depth += w * s.depth;
          const auto& logits = cloud.gaussians[s.index].logits;
          for (std::size_t k = 0; k < c; ++k) cw[k] += w * logits[k];
          transmittance *= 1.0 - a;
          if (transmittance < kMinTransmittance) break;
        }
        out.alpha[pi] = acc_alpha;
        out.depth[pi] = acc_depth;
      }
    }
  }, opt.threads);

  detail::resolve_semantics(out, opt.alpha_threshold);
  return out;
}

struct RaymarchOptions : RenderOptions {
  // Samples where a primitive's inside-outside value is provably above this
  // are skipped (exp(-20) ~ 2.1e-9).
  double cull_inside_outside = 20.0;
};

// Volumetric reference: density D(x) = sum_i sigma_i exp(-f_i(x)) is treated
// as extinction per metre, sampled at z-depths near + (k + 1/2) * step.
inline RenderOutput raymarch_render(const Scene& scene, const Camera& cam, double step,
                                    const RaymarchOptions& opt = {}) {
  scene.validate();
  cam.validate();
  if (!(step > 0.0) || !std::isfinite(step)) throw std::invalid_argument("raymarch: step must be > 0");
  const std::size_t c = scene.classes.size();
  RenderOutput out(cam.width, cam.height, c, scene.classes.free_index);

  struct Prim {
    Mat3 w2l;
    Vec3 mu, inv_scale, bound;  // bound: half-extent of the local cull box
    double p, q, r, sigma;
    const std::vector<double>* logits;
  };
  std::vector<Prim> prims;
  for (const auto& sq : scene.primitives) {
    if (sq.opacity == 0.0) continue;
    const double ratio = std::pow(opt.cull_inside_outside, sq.eps1 / 2.0);
    prims.push_back({sq.world_to_local(), sq.mu, sq.scale.cwiseInverse(), ratio * sq.scale, 2.0 / sq.eps2,
                     sq.eps2 / sq.eps1, 2.0 / sq.eps1, sq.opacity, &sq.logits});
  }

  const auto samples = static_cast<std::int64_t>(std::floor((cam.far - cam.near) / step));
  const Mat3 c2w = cam.world_to_camera.linear().transpose();
  const Vec3 eye = cam.position();

  parallel_chunks(static_cast<std::size_t>(cam.height), [&](std::size_t v_begin, std::size_t v_end) {
    std::vector<double> dens, cls, ax, ay, az, ps, qs, rs, w;
    for (auto v = static_cast<int>(v_begin); v < static_cast<int>(v_end); ++v) {
      for (int u = 0; u < cam.width; ++u) {
        const Vec3 dir_cam((u + 0.5 - cam.cx) / cam.fx, (v + 0.5 - cam.cy) / cam.fy, 1.0);
        const Vec3 dir = c2w * dir_cam;  // advances one metre of camera depth per unit t
        const double ds = step * dir_cam.norm();

        // Sample range [k0, k1) touched by any primitive's cull box.
        std::int64_t k0 = samples, k1 = 0;
        std::vector<std::pair<std::int64_t, std::int64_t>> spans(prims.size(), {0, 0});
        for (std::size_t pi = 0; pi < prims.size(); ++pi) {
          const auto& p = prims[pi];
          const Vec3 o = p.w2l * (eye - p.mu);
          const Vec3 d = p.w2l * dir;
          double t0 = cam.near, t1 = cam.far;
          for (int a = 0; a < 3 && t0 <= t1; ++a) {
            if (std::abs(d[a]) < 1e-300) {
              if (std::abs(o[a]) >= p.bound[a]) t1 = t0 - 1.0;
              continue;
            }
            double e0 = (-p.bound[a] - o[a]) / d[a], e1 = (p.bound[a] - o[a]) / d[a];
            if (e0 > e1) std::swap(e0, e1);
            t0 = std::max(t0, e0);
            t1 = std::min(t1, e1);
          }
          if (!(t0 <= t1)) continue;
          const auto s0 = std::max<std::int64_t>(0, static_cast<std::int64_t>(std::floor((t0 - cam.near) / step - 0.5)));
          const auto s1 = std::min<std::int64_t>(samples, static_cast<std::int64_t>(std::ceil((t1 - cam.near) / step + 0.5)));
          if (s0 >= s1) continue;
          spans[pi] = {s0, s1};
          k0 = std::min(k0, s0);
          k1 = std::max(k1, s1);
        }
        if (k0 >= k1) continue;

        const auto n = static_cast<std::size_t>(k1 - k0);
        dens.assign(n, 0.0);
        cls.assign(n * c, 0.0);
        for (std::size_t pi = 0; pi < prims.size(); ++pi) {
          const auto [s0, s1] = spans[pi];
          if (s0 >= s1) continue;
          const auto& p = prims[pi];
          const auto m = static_cast<std::size_t>(s1 - s0);
          ax.resize(m), ay.resize(m), az.resize(m), w.resize(m);
          ps.assign(m, p.p), qs.assign(m, p.q), rs.assign(m, p.r);
          for (std::size_t j = 0; j < m; ++j) {
            const double t = cam.near + (static_cast<double>(s0 + static_cast<std::int64_t>(j)) + 0.5) * step;
            const Vec3 x = p.w2l * (eye + t * dir - p.mu);
            ax[j] = std::abs(x.x() * p.inv_scale.x());
            ay[j] = std::abs(x.y() * p.inv_scale.y());
            az[j] = std::abs(x.z() * p.inv_scale.z());
          }
          sample_weights({ax.data(), ay.data(), az.data(), ps.data(), qs.data(), rs.data()}, w.data(), m);
          for (std::size_t j = 0; j < m; ++j) {
            const std::size_t k = static_cast<std::size_t>(s0 - k0) + j;
            dens[k] += p.sigma * w[j];
            for (std::size_t cc = 0; cc < c; ++cc) cls[k * c + cc] += w[j] * (*p.logits)[cc];
          }
        }

        const std::size_t pix = out.pixel(u, v);
        double transmittance = 1.0, acc_alpha = 0.0, acc_depth = 0.0;
        double* cw = out.class_weights.data() + pix * c;
        for (std::size_t k = 0; k < n; ++k) {
          if (dens[k] <= 0.0) continue;
          const double a = 1.0 - std::exp(-dens[k] * ds);
          const double wk = transmittance * a;
          const double t = cam.near + (static_cast<double>(k0 + static_cast<std::int64_t>(k)) + 0.5) * step;
          acc_alpha += wk;
          acc_depth += wk * t;
          for (std::size_t cc = 0; cc < c; ++cc) cw[cc] += wk * cls[k * c + cc];
          transmittance *= 1.0 - a;
          if (transmittance < kMinTransmittance) break;
        }
        out.alpha[pix] = acc_alpha;
        out.depth[pix] = acc_depth;
      }
    }
  }, opt.threads);

  detail::resolve_semantics(out, opt.alpha_threshold);
  return out;
}

}  // namespace sqocc
