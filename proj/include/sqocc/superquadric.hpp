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
// Superquadric primitives: parameters, rigid transforms, the inside-outside
// function and the exp(-f) occupancy density it induces.
#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

namespace sqocc {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Quat = Eigen::Quaterniond;

using Label = std::uint8_t;

inline constexpr double kMinExponent = 0.2;
inline constexpr double kMaxExponent = 2.0;
// Inside-outside values saturate here; exp(-cap) is an exact 0 density.
inline constexpr double kInsideOutsideCap = 1e30;

// Semantic classes plus the sentinel label used for free space. Labels are
// stored as bytes, so at most 255 classes fit beside the default sentinel.
struct ClassTable {
  std::vector<std::string> names;
  Label free_index = 255;

  std::size_t size() const { return names.size(); }

  void validate() const {
    if (names.empty()) throw std::invalid_argument("class table: need at least one class");
    if (names.size() > 255) throw std::invalid_argument("class table: at most 255 classes");
    if (free_index < names.size())
      throw std::invalid_argument("class table: free_index collides with a class id");
    std::unordered_set<std::string> seen;
    for (const auto& n : names)
      if (!seen.insert(n).second) throw std::invalid_argument("class table: duplicate name '" + n + "'");
  }

  // class_0 ... class_{count-1}
  static ClassTable numbered(std::size_t count) {
    ClassTable t;
    for (std::size_t i = 0; i < count; ++i) t.names.push_back("class_" + std::to_string(i));
    t.validate();
    return t;
  }
};

// One scene primitive. Build through SuperQuadric::make so the invariants
// (positive scale, unit quaternion, opacity range, exponent clamp) hold.
struct SuperQuadric {
  Vec3 mu = Vec3::Zero();
  Vec3 scale = Vec3::Ones();
  Quat rot = Quat::Identity();  // local-to-world
  double opacity = 1.0;
  std::vector<double> logits;
  double eps1 = 1.0;
  double eps2 = 1.0;
  bool eps_clamped = false;  // set when make() had to clamp an exponent

  static SuperQuadric make(const Vec3& mu, const Vec3& scale, const Quat& rot, double opacity,
                           std::vector<double> logits, double eps1, double eps2) {
    if (!mu.allFinite()) throw std::invalid_argument("superquadric: non-finite mean");
    if (!scale.allFinite() || (scale.array() <= 0.0).any())
      throw std::invalid_argument("superquadric: scale components must be finite and > 0");
    if (!std::isfinite(opacity) || opacity < 0.0 || opacity > 1.0)
      throw std::invalid_argument("superquadric: opacity must lie in [0, 1]");
    if (!std::isfinite(eps1) || !std::isfinite(eps2))
      throw std::invalid_argument("superquadric: non-finite shape exponent");
    for (double l : logits)
      if (!std::isfinite(l)) throw std::invalid_argument("superquadric: non-finite logit");
    const double qn = rot.coeffs().norm();
    if (!std::isfinite(qn) || qn < 1e-12) throw std::invalid_argument("superquadric: degenerate quaternion");

    SuperQuadric sq;
    sq.mu = mu;
    sq.scale = scale;
    sq.rot = rot;
    // Already-unit quaternions are kept bit-for-bit so files round-trip.
    if (std::abs(qn - 1.0) > 1e-12) sq.rot.coeffs() /= qn;
    sq.opacity = opacity;
    sq.logits = std::move(logits);
    sq.eps1 = std::clamp(eps1, kMinExponent, kMaxExponent);
    sq.eps2 = std::clamp(eps2, kMinExponent, kMaxExponent);
    sq.eps_clamped = sq.eps1 != eps1 || sq.eps2 != eps2;
    return sq;
  }

  std::size_t num_classes() const { return logits.size(); }

  // World-to-local rotation (inverse of the stored orientation).
  Mat3 world_to_local() const { return rot.conjugate().toRotationMatrix(); }
  Mat3 local_to_world() const { return rot.toRotationMatrix(); }
};

struct Scene {
  std::vector<SuperQuadric> primitives;
  ClassTable classes;

  void validate() const {
    classes.validate();
    for (std::size_t i = 0; i < primitives.size(); ++i)
      if (primitives[i].logits.size() != classes.size())
        throw std::invalid_argument("scene: primitive " + std::to_string(i) + " has " +
                                    std::to_string(primitives[i].logits.size()) + " logits, expected " +
                                    std::to_string(classes.size()));
  }
};

inline Vec3 to_local(const SuperQuadric& sq, const Vec3& x) { return sq.world_to_local() * (x - sq.mu); }

inline Vec3 to_world(const SuperQuadric& sq, const Vec3& x_local) { return sq.local_to_world() * x_local + sq.mu; }

// Inside-outside function with absolute values on every ratio. Only the shape
// (scale and exponents) matters, so it is exposed on raw parameters too.
inline double inside_outside(const Vec3& scale, double eps1, double eps2, const Vec3& x_local) {
  const double ax = std::abs(x_local.x() / scale.x());
  const double ay = std::abs(x_local.y() / scale.y());
  const double az = std::abs(x_local.z() / scale.z());
  const double p = 2.0 / eps2;
  const double xy = std::pow(std::pow(ax, p) + std::pow(ay, p), eps2 / eps1);
  const double f = xy + std::pow(az, 2.0 / eps1);
  if (!(f < kInsideOutsideCap)) return kInsideOutsideCap;  // also catches inf / nan
  return f;
}

inline double inside_outside(const SuperQuadric& sq, const Vec3& x_local) {
  return inside_outside(sq.scale, sq.eps1, sq.eps2, x_local);
}

// Occupancy probability exp(-f) at a world point, not weighted by opacity.
inline double density(const SuperQuadric& sq, const Vec3& x) { return std::exp(-inside_outside(sq, to_local(sq, x))); }

// Copies of sq with scale multiplied by each k; k must be positive and
// strictly increasing.
inline void validate_scale_list(const std::vector<double>& ks) {
  if (ks.empty()) throw std::invalid_argument("scale list: empty");
  for (std::size_t i = 0; i < ks.size(); ++i) {
    if (!std::isfinite(ks[i]) || ks[i] <= 0.0) throw std::invalid_argument("scale list: values must be > 0");
    if (i > 0 && !(ks[i] > ks[i - 1])) throw std::invalid_argument("scale list: values must be strictly increasing");
  }
}

inline std::vector<SuperQuadric> scaled_family(const SuperQuadric& sq, const std::vector<double>& ks) {
  validate_scale_list(ks);
  std::vector<SuperQuadric> out;
  out.reserve(ks.size());
  for (double k : ks) {
    SuperQuadric s = sq;
    s.scale = k * sq.scale;
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace sqocc
