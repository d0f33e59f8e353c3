// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <span>
#include <vector>

#include "gof/ray_gaussian.hpp"
#include "gof/types.hpp"

namespace gof {

/// Per-sample alpha is clamped to this value before compositing.
inline constexpr double kMaxSampleAlpha = 0.999;

/// Immutable scene with per-Gaussian frames precomputed.
class PreparedScene {
 public:
  PreparedScene() = default;
  explicit PreparedScene(std::vector<Gaussian3D> gaussians);

  size_t size() const { return gaussians_.size(); }
  bool empty() const { return gaussians_.empty(); }
  const Gaussian3D& gaussian(size_t i) const { return gaussians_[i]; }
  const GaussianFrame& frame(size_t i) const { return frames_[i]; }
  std::span<const Gaussian3D> gaussians() const { return gaussians_; }

 private:
  std::vector<Gaussian3D> gaussians_;
  std::vector<GaussianFrame> frames_;
};

struct RayEntry {
  int id = 0;
  double t_star = 0.0;
  double peak = 0.0;    // contribution E
  double alpha = 0.0;   // min(opacity * E, kMaxSampleAlpha)
  double weight = 0.0;  // blend weight
};

/// Contributors along one ray in ascending t* order together with the
/// transmittance left after the last one.
struct RaySample {
  std::vector<RayEntry> entries;
  double transmittance = 1.0;

  double accumulation() const { return 1.0 - transmittance; }
};

/// Gathers every candidate with t* >= near_clip and alpha >= the contribution
/// cutoff, sorts by (t*, id) and composites front to back. Compositing stops
/// before the sample that would push transmittance below the floor.
RaySample gather_ray(const PreparedScene& scene, const Vec3& origin, const Vec3& direction,
                     const SceneConfig& config, std::span<const int> candidates);
RaySample gather_ray(const PreparedScene& scene, const Vec3& origin, const Vec3& direction,
                     const SceneConfig& config);
RaySample gather_ray(const PreparedScene& scene, const CameraView& view, int px, int py,
                     const SceneConfig& config);

/// Conservative image-space bounds of the rays that can receive a sample from
/// one Gaussian under the contribution cutoff.
struct ScreenRect {
  double u0 = 0.0, u1 = 0.0, v0 = 0.0, v1 = 0.0;
};

/// Returns nullopt when the Gaussian cannot contribute to any ray of `view`.
std::optional<ScreenRect> screen_footprint(const PreparedScene& scene, size_t index,
                                           const CameraView& view, const SceneConfig& config);

/// Gaussian ids binned into square image tiles by their screen footprint.
class TileBins {
 public:
  static constexpr int kTileSize = 16;

  TileBins(const PreparedScene& scene, const CameraView& view, const SceneConfig& config);

  int tiles_x() const { return tiles_x_; }
  int tiles_y() const { return tiles_y_; }
  std::span<const int> tile(int tx, int ty) const {
    return bins_[static_cast<size_t>(ty) * tiles_x_ + tx];
  }
  std::span<const int> tile_of_pixel(int px, int py) const {
    return tile(px / kTileSize, py / kTileSize);
  }
  /// Tile list restricted to Gaussians whose footprint overlaps pixel (px, py).
  void pixel_candidates(int px, int py, std::vector<int>& out) const;

 private:
  int tiles_x_ = 0;
  int tiles_y_ = 0;
  std::vector<std::vector<int>> bins_;
  std::vector<ScreenRect> rects_;  // indexed by Gaussian id
};

struct RenderBuffers {
  Image color;         // 3 channels
  Image depth;         // weighted mean t*, normalized by accumulation
  Image normal;        // weighted plane normals, world frame
  Image accumulation;  // sum of weights
  std::vector<int> contributors;
};

/// Per-pixel samples and per-Gaussian colors retained for the backward pass.
struct RenderCache {
  std::vector<RaySample> samples;  // row-major pixels
  std::vector<Vec3> colors;        // per Gaussian, for this view
};

RenderBuffers render_view(const PreparedScene& scene, const CameraView& view,
                          const SceneConfig& config, RenderCache* cache = nullptr);

/// Normals estimated from the depth buffer, camera frame.
struct DepthNormals {
  Image normal;                // 3 channels, zero where invalid
  std::vector<uint8_t> valid;  // row-major
  size_t valid_count = 0;
};

/// Central-difference normals of back-projected depth. A pixel is valid when
/// it is not on the border and it and its four neighbours have accumulation
/// >= 0.5. Normals face the camera.
DepthNormals depth_to_normal(const Image& depth, const Image& accumulation, const CameraView& view);

/// Chain rule through depth_to_normal: adds dL/ddepth given dL/dnormal (camera
/// frame) at valid pixels.
void depth_to_normal_backward(const Image& depth, const DepthNormals& normals,
                              const CameraView& view, const Image& grad_normal, Image& grad_depth);

}  // namespace gof
