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
#include <cmath>
#include <numbers>
#include <stdexcept>

#include <gtest/gtest.h>

#include "sqocc/superquadric.hpp"
#include "test_util.hpp"

namespace sqocc {
namespace {

SuperQuadric sphere(const Vec3& mu = Vec3::Zero(), const Quat& rot = Quat::Identity()) {
  return SuperQuadric::make(mu, Vec3::Ones(), rot, 1.0, {0.0}, 1.0, 1.0);
}

SuperQuadric reference_shape() { return SuperQuadric::make(Vec3::Zero(), {1.0, 0.7, 0.5}, Quat::Identity(), 1.0, {0.0}, 0.6, 0.7); }

// Independent evaluation in extended precision.
long double inside_outside_long(const Vec3& s, long double e1, long double e2, const Vec3& x) {
  const long double ax = std::fabs(static_cast<long double>(x.x()) / s.x());
  const long double ay = std::fabs(static_cast<long double>(x.y()) / s.y());
  const long double az = std::fabs(static_cast<long double>(x.z()) / s.z());
  return std::pow(std::pow(ax, 2 / e2) + std::pow(ay, 2 / e2), e2 / e1) + std::pow(az, 2 / e1);
}

TEST(ToLocal, IdentityRotationSubtractsMean) {
  const auto sq = SuperQuadric::make({1, 2, 3}, Vec3::Ones(), Quat::Identity(), 1.0, {0.0}, 1.0, 1.0);
  EXPECT_TRUE(to_local(sq, Vec3(1, 2, 3)).isZero(0.0));
}

TEST(ToLocal, QuaternionIsLocalToWorld) {
  const Quat rz(Eigen::AngleAxisd(std::numbers::pi / 2, Vec3::UnitZ()));
  const auto x = to_local(sphere(Vec3::Zero(), rz), Vec3(0, 1, 0));
  EXPECT_NEAR(x.x(), 1.0, 1e-15);
  EXPECT_NEAR(x.y(), 0.0, 1e-15);
  EXPECT_NEAR(x.z(), 0.0, 1e-15);
}

TEST(ToLocal, RoundTripRandom) {
  SceneRng rng(7);
  for (int i = 0; i < 1000; ++i) {
    const auto sq = testing::random_shape(rng);
    const Vec3 x(rng.uniform(-10, 10), rng.uniform(-10, 10), rng.uniform(-10, 10));
    EXPECT_LT((to_world(sq, to_local(sq, x)) - x).norm(), 1e-12);
  }
}

TEST(InsideOutside, SphereExamples) {
  const auto s = sphere();
  EXPECT_DOUBLE_EQ(inside_outside(s, Vec3(1, 0, 0)), 1.0);
  EXPECT_EQ(inside_outside(s, Vec3(0, 0, 0)), 0.0);
  EXPECT_DOUBLE_EQ(inside_outside(s, Vec3(2, 0, 0)), 4.0);
}

TEST(InsideOutside, ReferenceShapeSurfacePoint) { EXPECT_NEAR(inside_outside(reference_shape(), Vec3(1, 0, 0)), 1.0, 1e-15); }

TEST(InsideOutside, MatchesExtendedPrecisionOracle) {
  SceneRng rng(11);
  for (int i = 0; i < 1000; ++i) {
    const auto sq = testing::random_shape(rng);
    const Vec3 x(rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(-3, 3));
    const long double ref = inside_outside_long(sq.scale, sq.eps1, sq.eps2, x);
    if (ref >= 1e30L) continue;
    EXPECT_NEAR(inside_outside(sq, x) / static_cast<double>(ref), 1.0, 1e-12);
  }
}

TEST(InsideOutside, HomogeneitySymmetryMonotonicity) {
  SceneRng rng(3);
  for (int i = 0; i < 1000; ++i) {
    const auto sq = testing::random_shape(rng);
    const Vec3 x(rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2));
    const double k = rng.uniform(0.1, 3.0);
    const double f = inside_outside(sq, x);
    EXPECT_NEAR(inside_outside(sq, Vec3(k * x)), std::pow(k, 2.0 / sq.eps1) * f, 1e-9 * std::pow(k, 2.0 / sq.eps1) * f);
    for (int flips = 1; flips < 8; ++flips) {
      const Vec3 y((flips & 1) ? -x.x() : x.x(), (flips & 2) ? -x.y() : x.y(), (flips & 4) ? -x.z() : x.z());
      EXPECT_EQ(inside_outside(sq, y), f);
    }
    const Vec3 u = x.normalized();
    double prev = inside_outside(sq, Vec3(0.01 * u));
    for (double t = 0.02; t < 3.0; t += 0.05) {
      const double cur = inside_outside(sq, Vec3(t * u));
      EXPECT_GT(cur, prev);
      prev = cur;
    }
  }
}

TEST(InsideOutside, SaturatesAtCap) {
  const auto sq = SuperQuadric::make(Vec3::Zero(), Vec3::Constant(1e-3), Quat::Identity(), 1.0, {0.0}, 0.2, 0.2);
  EXPECT_EQ(inside_outside(sq, Vec3(1e6, 1e6, 1e6)), kInsideOutsideCap);
  EXPECT_EQ(density(sq, Vec3(1e6, 0, 0)), 0.0);
}

TEST(Density, Examples) {
  const auto s = sphere();
  EXPECT_EQ(density(s, Vec3::Zero()), 1.0);
  EXPECT_NEAR(density(s, Vec3(0, 1, 0)), std::exp(-1.0), 1e-15);
  const double expected = std::exp(-std::pow(2.5, 2.0 / 0.6));
  EXPECT_NEAR(density(reference_shape(), Vec3(2.5, 0, 0)) / expected, 1.0, 1e-12);
}

TEST(Density, InUnitIntervalAndMaximalAtCentre) {
  SceneRng rng(5);
  for (int i = 0; i < 200; ++i) {
    const auto sq = testing::random_shape(rng);
    EXPECT_EQ(density(sq, sq.mu), 1.0);
    const Vec3 x = sq.mu + Vec3(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
    const double d = density(sq, x);
    EXPECT_GE(d, 0.0);
    EXPECT_LT(d, 1.0);
  }
}

TEST(SuperQuadricMake, ClampsExponentsAndRecords) {
  const auto sq = SuperQuadric::make(Vec3::Zero(), Vec3::Ones(), Quat::Identity(), 0.5, {1.0}, 0.05, 3.0);
  EXPECT_EQ(sq.eps1, kMinExponent);
  EXPECT_EQ(sq.eps2, kMaxExponent);
  EXPECT_TRUE(sq.eps_clamped);
  EXPECT_FALSE(sphere().eps_clamped);
}

TEST(SuperQuadricMake, NormalizesQuaternion) {
  const auto sq = SuperQuadric::make(Vec3::Zero(), Vec3::Ones(), Quat(2, 0, 0, 0), 0.5, {1.0}, 1, 1);
  EXPECT_NEAR(sq.rot.norm(), 1.0, 1e-15);
}

TEST(SuperQuadricMake, RejectsInvalid) {
  EXPECT_THROW(SuperQuadric::make(Vec3::Zero(), {1, 0, 1}, Quat::Identity(), 0.5, {}, 1, 1), std::invalid_argument);
  EXPECT_THROW(SuperQuadric::make(Vec3::Zero(), {1, 1, 1}, Quat::Identity(), 1.5, {}, 1, 1), std::invalid_argument);
  EXPECT_THROW(SuperQuadric::make(Vec3::Zero(), {1, 1, 1}, Quat(0, 0, 0, 0), 0.5, {}, 1, 1), std::invalid_argument);
  EXPECT_THROW(SuperQuadric::make(Vec3(NAN, 0, 0), {1, 1, 1}, Quat::Identity(), 0.5, {}, 1, 1), std::invalid_argument);
  EXPECT_THROW(SuperQuadric::make(Vec3::Zero(), {1, 1, 1}, Quat::Identity(), 0.5, {INFINITY}, 1, 1),
               std::invalid_argument);
}

TEST(ClassTableTest, Validation) {
  EXPECT_THROW(ClassTable{}.validate(), std::invalid_argument);
  ClassTable dup{{"a", "a"}};
  EXPECT_THROW(dup.validate(), std::invalid_argument);
  ClassTable clash{{"a", "b"}, 1};
  EXPECT_THROW(clash.validate(), std::invalid_argument);
  EXPECT_NO_THROW(ClassTable::numbered(17).validate());
}

TEST(SceneTest, RejectsLogitLengthMismatch) {
  Scene s;
  s.classes = ClassTable::numbered(2);
  s.primitives.push_back(sphere());
  EXPECT_THROW(s.validate(), std::invalid_argument);
}

TEST(ScaledFamily, DefaultKGivesNineShapes) {
  const std::vector<double> k{0.5, 0.6, 0.75, 0.9, 1.05, 1.2, 1.6, 2.0, 2.5};
  const auto fam = scaled_family(reference_shape(), k);
  ASSERT_EQ(fam.size(), 9u);
  for (std::size_t i = 0; i < k.size(); ++i) EXPECT_EQ(fam[i].scale, k[i] * reference_shape().scale);
}

TEST(ScaledFamily, SingletonAndHomogeneity) {
  SceneRng rng(9);
  const auto sq = testing::random_shape(rng);
  const auto one = scaled_family(sq, {1.0});
  ASSERT_EQ(one.size(), 1u);
  for (int i = 0; i < 50; ++i) {
    const Vec3 x(rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2));
    EXPECT_EQ(inside_outside(one[0], x), inside_outside(sq, x));
  }
  const auto two = scaled_family(sphere(), {2.0});
  EXPECT_DOUBLE_EQ(inside_outside(two[0], Vec3(2, 0, 0)), 1.0);
  EXPECT_DOUBLE_EQ(inside_outside(sphere(), Vec3(2, 0, 0)), 4.0);
}

TEST(ScaledFamily, RejectsBadLists) {
  EXPECT_THROW(scaled_family(sphere(), {}), std::invalid_argument);
  EXPECT_THROW(scaled_family(sphere(), {0.0, 1.0}), std::invalid_argument);
  EXPECT_THROW(scaled_family(sphere(), {1.0, 1.0}), std::invalid_argument);
  EXPECT_THROW(scaled_family(sphere(), {2.0, 1.0}), std::invalid_argument);
}

}  // namespace
}  // namespace sqocc
