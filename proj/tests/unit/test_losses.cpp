// SPDX-License-Identifier: Apache-2.0
#include <random>

#include <gtest/gtest.h>

#include "gof/losses.hpp"
#include "gof/oracles/gradcheck.hpp"

namespace gof {
namespace {

Image random_image(std::mt19937_64& rng, int w, int h) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Image img(w, h, 3);
  for (double& v : img.data) v = u(rng);
  return img;
}

TEST(Losses, IdenticalImagesCostNothing) {
  std::mt19937_64 rng(191);
  const Image a = random_image(rng, 16, 12);
  EXPECT_EQ(l1_loss(a, a).value, 0.0);
  EXPECT_NEAR(ssim(a, a).value, 1.0, 1e-12);
  EXPECT_NEAR(photometric_loss(a, a).value, 0.0, 1e-12);
}

TEST(Losses, InvertedBinaryImage) {
  Image a(8, 8, 3), b(8, 8, 3);
  for (size_t i = 0; i < a.data.size(); ++i) {
    a.data[i] = (i / 3 + i / 24) % 2 ? 1.0 : 0.0;
    b.data[i] = 1.0 - a.data[i];
  }
  EXPECT_DOUBLE_EQ(l1_loss(a, b).value, 1.0);
  const double s = ssim(a, b).value;
  EXPECT_NEAR(photometric_loss(a, b).value, 0.8 + 0.2 * (1.0 - s), 1e-12);
}

TEST(Losses, PhotometricGradient) {
  oracle::GradCheck all;
  for (int i = 0; i < 20; ++i) all.merge(oracle::check_photometric(800 + i, 1e-4));
  EXPECT_TRUE(all.ok()) << all.worst << " " << all.max_rel_error;
}

TEST(Losses, SsimGradientOnNonSquareImage) {
  std::mt19937_64 rng(193);
  const Image a = random_image(rng, 13, 7), b = random_image(rng, 13, 7);
  const ImageLoss s = ssim(a, b);
  for (size_t i = 0; i < a.data.size(); i += 5) {
    const double fd = oracle::central_difference(
        [&](double h) {
          Image p = a;
          p.data[i] += h;
          return ssim(p, b).value;
        },
        1e-6);
    EXPECT_LT(oracle::relative_error(s.gradient.data[i], fd, 1e-7), 1e-4) << i;
  }
}

TEST(Losses, DistortionExamples) {
  const std::vector<double> one_w = {0.7}, one_t = {3.0};
  EXPECT_EQ(distortion_loss(one_w, one_t), 0.0);
  const std::vector<double> w = {0.5, 0.5}, t = {1.0, 2.0};
  std::vector<double> grad;
  EXPECT_DOUBLE_EQ(distortion_loss(w, t, &grad), 0.5);
  ASSERT_EQ(grad.size(), 2u);
  EXPECT_DOUBLE_EQ(grad[0], -0.5);
  EXPECT_DOUBLE_EQ(grad[1], 0.5);
}

TEST(Losses, DistortionDepthGradient) {
  std::mt19937_64 rng(197);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> w(6), t(6);
    for (int k = 0; k < 6; ++k) {
      w[k] = 0.2 * u(rng);
      t[k] = 1.0 + 4.0 * u(rng);
    }
    std::vector<double> grad;
    distortion_loss(w, t, &grad);
    for (int k = 0; k < 6; ++k) {
      const double fd = oracle::central_difference(
          [&](double h) {
            std::vector<double> p = t;
            p[k] += h;
            return distortion_loss(w, p);
          },
          1e-6);
      EXPECT_LT(oracle::relative_error(grad[k], fd, 1e-7), 1e-4);
    }
  }
}

TEST(Losses, DistortionThroughGeometryAndDetachment) {
  oracle::GradCheck all;
  for (int i = 0; i < 20; ++i) all.merge(oracle::check_distortion(900 + i, 1e-4));
  EXPECT_TRUE(all.ok()) << all.worst << " " << all.max_rel_error;
}

TEST(Losses, NormalLossExamples) {
  const std::vector<double> w = {0.3, 0.6};
  const std::vector<Vec3> aligned = {Vec3(0, 0, -1), Vec3(0, 0, -1)};
  EXPECT_DOUBLE_EQ(normal_loss(w, aligned, Vec3(0, 0, -1)), 0.0);
  const std::vector<double> one = {1.0};
  const std::vector<Vec3> perp = {Vec3(1, 0, 0)};
  EXPECT_DOUBLE_EQ(normal_loss(one, perp, Vec3(0, 0, -1)), 1.0);
}

TEST(Losses, NormalConsistencyGradient) {
  oracle::GradCheck attached, detached;
  for (int i = 0; i < 10; ++i) {
    attached.merge(oracle::check_normal(1100 + i, false));
    detached.merge(oracle::check_normal(1200 + i, true));
  }
  EXPECT_TRUE(attached.ok()) << attached.worst << " " << attached.max_rel_error;
  EXPECT_TRUE(detached.ok()) << detached.worst << " " << detached.max_rel_error;
}

}  // namespace
}  // namespace gof
