// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "gof/oracles/fixtures.hpp"
#include "gof/oracles/gradcheck.hpp"
#include "gof/oracles/reference.hpp"
#include "gof/ray_gaussian.hpp"

namespace gof {
namespace {

TEST(RayGaussian, IdentityToLocal) {
  const RayLocal r = to_local(Gaussian3D{}, Vec3(0, 0, -5), Vec3(0, 0, 1));
  EXPECT_EQ(r.origin, Vec3(0, 0, -5));
  EXPECT_EQ(r.direction, Vec3(0, 0, 1));
  EXPECT_DOUBLE_EQ(r.a, 1.0);
  EXPECT_DOUBLE_EQ(r.b, -5.0);
  EXPECT_FALSE(r.scale_clamped);
}

TEST(RayGaussian, DiagonalScaling) {
  Gaussian3D g;
  g.scale = Vec3(2, 1, 1);
  const RayLocal r = to_local(g, Vec3(2, 0, 0), Vec3(0, 0, 1));
  EXPECT_TRUE(r.origin.isApprox(Vec3(1, 0, 0)));
}

TEST(RayGaussian, LocalRayMatchesCovarianceForm) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 200; ++i) {
    const Gaussian3D g = oracle::random_gaussian(rng);
    const Vec3 o = 4.0 * oracle::random_unit(rng);
    const Vec3 d = (g.center - o).normalized() + 0.2 * oracle::random_unit(rng);
    const RayLocal r = to_local(g, o, d);
    for (double t = 0.0; t <= 8.0; t += 0.25) {
      EXPECT_NEAR(gaussian_1d(r, t), oracle::response(g, o + t * d), 1e-6);
    }
  }
}

TEST(RayGaussian, IntersectExamples) {
  RayLocal r;
  r.origin = Vec3(0, 0, -5);
  r.direction = Vec3(0, 0, 1);
  r.a = 1.0;
  r.b = -5.0;
  Intersection h = intersect(r);
  EXPECT_DOUBLE_EQ(h.t_star, 5.0);
  EXPECT_DOUBLE_EQ(h.peak, 1.0);

  r.origin = Vec3(1, 0, -5);
  h = intersect(r);
  EXPECT_DOUBLE_EQ(h.t_star, 5.0);
  EXPECT_NEAR(h.peak, 0.60653, 1e-5);
  EXPECT_NEAR(h.peak, std::exp(-0.5), 1e-15);
}

TEST(RayGaussian, TStarMatchesDenseArgmax) {
  std::mt19937_64 rng(17);
  for (int i = 0; i < 100; ++i) {
    const Gaussian3D g = oracle::random_gaussian(rng);
    const Vec3 o = 5.0 * oracle::random_unit(rng);
    const Vec3 d = (g.center - o).normalized() + 0.1 * oracle::random_unit(rng);
    const Intersection h = intersect(to_local(g, o, d));
    const oracle::DenseMax dense = oracle::dense_argmax(g, o, d, 0.0, 20.0, 1e-3);
    if (h.t_star < 0.0 || h.t_star > 20.0) continue;
    EXPECT_LE(std::abs(h.t_star - dense.t), 1e-3);
    EXPECT_NEAR(h.t_star, oracle::covariance_t_star(g, o, d), 1e-9);
  }
}

TEST(RayGaussian, TStarIsStationary) {
  std::mt19937_64 rng(23);
  for (int i = 0; i < 100; ++i) {
    const Gaussian3D g = oracle::random_gaussian(rng);
    const Vec3 o = 4.0 * oracle::random_unit(rng);
    const Vec3 d = g.center - o + 0.3 * oracle::random_unit(rng);
    const RayLocal r = to_local(g, o, d);
    const Intersection h = intersect(r);
    const double h_step = 1e-5 / std::sqrt(r.a);
    const double slope = (gaussian_1d(r, h.t_star + h_step) - gaussian_1d(r, h.t_star - h_step)) / (2 * h_step);
    EXPECT_LT(std::abs(slope), 1e-6 * std::max(h.peak, 1e-300) + 1e-12);
  }
}

TEST(RayGaussian, DirectionScaleInvariance) {
  std::mt19937_64 rng(29);
  for (int i = 0; i < 50; ++i) {
    const Gaussian3D g = oracle::random_gaussian(rng);
    const GaussianFrame f = make_frame(g);
    const Vec3 o = 4.0 * oracle::random_unit(rng);
    const Vec3 d = (g.center - o) + 0.3 * oracle::random_unit(rng);
    const double c = 0.1 + 3.0 * (i % 7);
    const RayLocal r1 = to_local(f, o, d), r2 = to_local(f, o, c * d);
    const Intersection h1 = intersect(r1), h2 = intersect(r2);
    EXPECT_NEAR(h2.t_star, h1.t_star / c, 1e-9 * std::max(1.0, std::abs(h1.t_star)));
    EXPECT_NEAR(h2.peak, h1.peak, 1e-9);
    EXPECT_LT((plane_normal(f, r1, d) - plane_normal(f, r2, c * d)).norm(), 1e-9);
  }
}

TEST(RayGaussian, PeakIsOneOnlyThroughCenter) {
  std::mt19937_64 rng(31);
  const Gaussian3D g = oracle::random_gaussian(rng);
  const Vec3 o(3, -4, 2);
  EXPECT_NEAR(intersect(to_local(g, o, g.center - o)).peak, 1.0, 1e-12);
  const Intersection off = intersect(to_local(g, o, g.center - o + Vec3(0.01, 0, 0)));
  EXPECT_GT(off.peak, 0.0);
  EXPECT_LT(off.peak, 1.0);
}

TEST(RayGaussian, IsotropicNormalOpposesRay) {
  Gaussian3D g;
  g.scale = Vec3::Constant(0.7);
  g.rotation = Vec4(0.5, 0.5, -0.5, 0.5);
  const Vec3 o(1, 2, -6), d(0.1, -0.2, 1.0);
  const Vec3 n = plane_normal(g, to_local(g, o, d), d);
  EXPECT_LT((n + d.normalized()).norm(), 1e-12);
}

TEST(RayGaussian, AxisAlignedElongatedNormal) {
  Gaussian3D g;
  g.scale = Vec3(1, 1, 10);
  const Vec3 o(0, 0, -30), d(0, 0, 1);
  const Vec3 n = plane_normal(g, to_local(g, o, d), d);
  EXPECT_LT((n - Vec3(0, 0, -1)).norm(), 1e-12);
}

TEST(RayGaussian, NormalInvariantToUniformScale) {
  std::mt19937_64 rng(37);
  for (int i = 0; i < 50; ++i) {
    Gaussian3D g = oracle::random_gaussian(rng);
    const Vec3 o = 4.0 * oracle::random_unit(rng);
    const Vec3 d = g.center - o + 0.3 * oracle::random_unit(rng);
    const Vec3 n1 = plane_normal(g, to_local(g, o, d), d);
    g.scale *= 2.5;
    const Vec3 n2 = plane_normal(g, to_local(g, o, d), d);
    EXPECT_LT((n1 - n2).norm(), 1e-9);
    EXPECT_NEAR(n1.norm(), 1.0, 1e-12);
    EXPECT_LT(n1.dot(d), 0.0);
  }
}

TEST(RayGaussian, NormalIsOrthogonalToIntersectionPlane) {
  std::mt19937_64 rng(41);
  for (int i = 0; i < 100; ++i) {
    const Gaussian3D g = oracle::random_gaussian(rng);
    const Vec3 o = 4.0 * oracle::random_unit(rng);
    const Vec3 d = g.center - o + 0.3 * oracle::random_unit(rng);
    const RayLocal r = to_local(g, o, d);
    const Vec3 n = plane_normal(g, r, d);
    const Vec3 u = r.direction.cross(oracle::random_unit(rng)).normalized();
    const Mat3 rs = quaternion_to_matrix(g.rotation) * g.scale.asDiagonal();
    EXPECT_LT(std::abs(n.dot(rs * u)), 1e-6);
  }
}

TEST(RayGaussian, ContributionCulling) {
  Gaussian3D g;
  EXPECT_DOUBLE_EQ(contribution(g, Vec3(0, 0, -5), Vec3(0, 0, 1), 0.2), 1.0);
  EXPECT_DOUBLE_EQ(contribution(g, Vec3(0, 0, 5), Vec3(0, 0, 1), 0.2), 0.0);
  EXPECT_DOUBLE_EQ(contribution(g, Vec3(0, 0, -0.1), Vec3(0, 0, 1), 0.2), 0.0);
  EXPECT_DOUBLE_EQ(contribution(g, Vec3(0, 0, -0.2), Vec3(0, 0, 1), 0.2), 1.0);
}

TEST(RayGaussian, ContributionMatchesCovarianceMaximum) {
  std::mt19937_64 rng(43);
  for (int i = 0; i < 100; ++i) {
    const Gaussian3D g = oracle::random_gaussian(rng);
    const Vec3 o = 5.0 * oracle::random_unit(rng);
    const Vec3 d = (g.center - o).normalized() + 0.1 * oracle::random_unit(rng);
    const double t = oracle::covariance_t_star(g, o, d);
    const double e = contribution(g, o, d, 0.2);
    if (t < 0.2) {
      EXPECT_EQ(e, 0.0);
    } else {
      EXPECT_NEAR(e, oracle::response(g, o + t * d), 1e-6);
    }
  }
}

TEST(RayGaussian, TinyScaleIsClampedAndFlagged) {
  Gaussian3D g;
  g.scale = Vec3(1, 1e-12, 1);
  const RayLocal r = to_local(g, Vec3(0, 0, -5), Vec3(0, 0, 1));
  EXPECT_TRUE(r.scale_clamped);
  EXPECT_TRUE(r.origin.allFinite());
  EXPECT_TRUE(make_frame(g).scale_clamped);
  EXPECT_DOUBLE_EQ(make_frame(g).inv_scale.y(), 1.0 / kMinScale);
}

TEST(RayGaussian, QuaternionMatrixIsRotation) {
  std::mt19937_64 rng(47);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int i = 0; i < 50; ++i) {
    const Vec4 q(n(rng), n(rng), n(rng), n(rng));
    const Mat3 r = quaternion_to_matrix(q);
    EXPECT_LT((r * r.transpose() - Mat3::Identity()).norm(), 1e-12);
    EXPECT_NEAR(r.determinant(), 1.0, 1e-12);
    EXPECT_LT((quaternion_to_matrix(3.0 * q) - r).norm(), 1e-12);
  }
}

TEST(RayGaussian, QuaternionBackwardMatchesFiniteDifferences) {
  std::mt19937_64 rng(53);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int i = 0; i < 20; ++i) {
    const Vec4 q(n(rng), n(rng), n(rng), n(rng));
    Mat3 w;
    for (int k = 0; k < 9; ++k) w.data()[k] = n(rng);
    const Vec4 grad = quaternion_matrix_backward(q, w);
    for (int k = 0; k < 4; ++k) {
      const double fd = oracle::central_difference(
          [&](double h) {
            Vec4 p = q;
            p[k] += h;
            return (quaternion_to_matrix(p).array() * w.array()).sum();
          },
          1e-6);
      EXPECT_LT(oracle::relative_error(grad[k], fd, 1e-7), 1e-5);
    }
  }
}

TEST(RayGaussian, ChainRuleMatchesFiniteDifferences) {
  oracle::GradCheck all;
  for (int i = 0; i < 25; ++i) all.merge(oracle::check_ray_chain(700 + i));
  EXPECT_TRUE(all.ok()) << all.worst << " " << all.max_rel_error;
  EXPECT_GT(all.compared, 100u);
}

TEST(RayGaussian, FaultHookFlipsTStar) {
  RayLocal r;
  r.origin = Vec3(0, 0, -5);
  r.direction = Vec3(0, 0, 1);
  r.a = 1.0;
  r.b = -5.0;
  fault::inject(fault::Fault::kFlipTStarSign);
  const double flipped = intersect(r).t_star;
  fault::inject(fault::Fault::kNone);
  EXPECT_DOUBLE_EQ(flipped, -5.0);
  EXPECT_DOUBLE_EQ(intersect(r).t_star, 5.0);
}

}  // namespace
}  // namespace gof
