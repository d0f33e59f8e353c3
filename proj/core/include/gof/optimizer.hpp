// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "gof/ray_gaussian.hpp"
#include "gof/renderer.hpp"
#include "gof/types.hpp"

namespace gof {

struct LossBundle {
  double L_c = 0.0;  // photometric
  double L_d = 0.0;  // depth distortion
  double L_n = 0.0;  // normal consistency
  double l1 = 0.0;   // L1 part of L_c, for reporting
  double total = 0.0;
};

/// Gradient of the total loss with respect to the raw parameters of one
/// Gaussian: center, log-scale, stored quaternion, opacity logit and SH.
struct GaussianGrad {
  GeometryGrad geometry;
  double logit_opacity = 0.0;
  std::array<Vec3, kShCoefficients> sh{};

  GaussianGrad() {
    for (auto& c : sh) c.setZero();
  }
};

/// Number of raw scalar parameters per Gaussian.
inline constexpr int kParamsPerGaussian = 3 + 3 + 4 + 1 + 3 * kShCoefficients;

std::array<double, kParamsPerGaussian> flatten(const GaussianGrad& g);

struct TrainConfig {
  SceneConfig scene;  // alpha_distortion, beta_normal, sh_degree, prune_alpha
  double lambda_dssim = 0.2;
  bool detach_depth_normal = false;  // stop gradients into depth through N
  /// The distortion loss sees depth mapped to [0, 1] over [near_clip, far]:
  /// far / (far - near) * (1 - near / t).
  double distortion_far = 100.0;

  double position_lr_init = 1.6e-4;  // times the scene extent
  double position_lr_final = 1.6e-6;
  double sh_dc_lr = 0.0025;
  double sh_rest_lr = 0.0025 / 20.0;
  double opacity_lr = 0.05;
  double scale_lr = 0.005;
  double rotation_lr = 0.001;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-15;

  int sh_degree_interval = 1000;  // active SH degree grows by one per interval
  int densify_from = 100;
  int densify_until = 500;        // exclusive; iterations past this never densify
  int densify_interval = 100;
  double densify_threshold = 0.0002 * 2.14;  // on the mean of M
  double percent_dense = 0.01;
  size_t max_gaussians = 4000;

  uint64_t seed = 0;
};

/// Everything the backward pass of one view produces.
struct ViewGradients {
  LossBundle loss;
  std::vector<GaussianGrad> gradients;
  /// Per Gaussian, the view-space (NDC) center gradient contributed by each
  /// pixel it touched, in pixel order.
  std::vector<std::vector<Vec2>> pixel_gradients;
  RenderBuffers buffers;
};

/// Renders `view`, evaluates the loss against `reference` and back-propagates
/// to every Gaussian. Deterministic: pixel partials are reduced in fixed order.
ViewGradients view_backward(std::span<const Gaussian3D> gaussians, const CameraView& view,
                            const Image& reference, const TrainConfig& config);

/// Forward-only loss of one view, matching view_backward's value.
LossBundle view_loss(std::span<const Gaussian3D> gaussians, const CameraView& view,
                     const Image& reference, const TrainConfig& config);

struct DensifyStats {
  std::vector<double> M;        // sum over pixels of per-pixel gradient norms
  std::vector<double> classic;  // sum over views of the norm of the per-view pixel sum
  std::vector<int> count;       // views in which the Gaussian received a gradient

  explicit DensifyStats(size_t n = 0) : M(n, 0.0), classic(n, 0.0), count(n, 0) {}
  size_t size() const { return M.size(); }
  void reset(size_t n) { *this = DensifyStats(n); }
};

/// Adds one view's per-pixel gradients to the running statistics.
void accumulate_densify(DensifyStats& stats, const std::vector<std::vector<Vec2>>& pixel_gradients);

/// Gaussians whose mean M exceeds `threshold`.
std::vector<uint8_t> densify_candidates(const DensifyStats& stats, double threshold);

struct DensifyResult {
  size_t cloned = 0;
  size_t split = 0;
  size_t pruned = 0;
  /// For every output Gaussian, the input it came from, and whether it is a
  /// new child (clone copy or split child) rather than a surviving original.
  std::vector<size_t> parent;
  std::vector<uint8_t> fresh;
};

/// Candidates with max scale <= percent_dense * extent are cloned with the
/// copy's center drawn from the parent's distribution; larger ones are
/// replaced by two sampled children with scales divided by 1.6. Afterwards
/// Gaussians with opacity below config.scene.prune_alpha are removed.
DensifyResult densify_step(std::vector<Gaussian3D>& scene, const DensifyStats& stats,
                           const TrainConfig& config, double extent, uint64_t seed);

/// 1.1 times the largest camera distance from the mean camera center.
double scene_extent(std::span<const CameraView> views);

struct IterationLog {
  int iteration = 0;
  LossBundle loss;
  size_t gaussians = 0;
};

using IterationCallback = std::function<void(const IterationLog&)>;

/// Adam on all raw parameters for `iterations` steps, one view per step drawn
/// from a seeded shuffle. Quaternions are renormalized after every step.
/// Throws NumericalError naming the iteration if the loss becomes non-finite.
std::vector<Gaussian3D> fit(std::vector<Gaussian3D> scene, std::span<const CameraView> views,
                            int iterations, const TrainConfig& config,
                            const IterationCallback& on_iteration = {});

/// Mean L1 between renders and reference images over all views.
double mean_l1(std::span<const Gaussian3D> gaussians, std::span<const CameraView> views,
               const SceneConfig& config);

}  // namespace gof
