// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <vector>

#include "gof/renderer.hpp"
#include "gof/types.hpp"

namespace gof {

/// Loss value together with its gradient with respect to the rendered image.
struct ImageLoss {
  double value = 0.0;
  Image gradient;  // same shape as the rendered image
};

/// Mean absolute difference over all pixels and channels.
ImageLoss l1_loss(const Image& rendered, const Image& reference);

/// Mean single-scale SSIM with an 11x11 Gaussian window (sigma 1.5), zero
/// padding and the usual C1 = 0.01^2, C2 = 0.03^2 constants. The gradient is
/// d(mean SSIM)/d(rendered).
ImageLoss ssim(const Image& rendered, const Image& reference);

/// (1 - lambda) * L1 + lambda * (1 - SSIM); lambda = 0.2 by default.
ImageLoss photometric_loss(const Image& rendered, const Image& reference, double lambda = 0.2);

/// Sum over ordered pairs of w_i w_j |t_i - t_j| for one ray. When `grad_t` is
/// given it receives d/dt_i with the weights held constant.
double distortion_loss(std::span<const double> weights, std::span<const double> depths,
                       std::vector<double>* grad_t = nullptr);
double distortion_loss(const RaySample& sample, std::vector<double>* grad_t = nullptr);

/// Sum of w_i (1 - n_i . N) for one ray.
double normal_loss(std::span<const double> weights, std::span<const Vec3> normals, const Vec3& target);

}  // namespace gof
