// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <string>
#include <vector>

#include "gof/renderer.hpp"
#include "gof/types.hpp"

namespace gof {

/// Opacity of a single Gaussian at depth t along a ray: the 1D Gaussian up to
/// its peak, constant afterwards.
double partial_opacity(const RayLocal& ray, const Intersection& hit, double t);
double partial_opacity(const Gaussian3D& g, const Vec3& origin, const Vec3& direction, double t);

/// Blended opacity at depth t over an already gathered ray. The contributing
/// set comes from the gather; each member contributes its partial opacity.
double ray_opacity(const PreparedScene& scene, const RaySample& gathered, const Vec3& origin,
                   const Vec3& direction, double t);

/// Gathers over every Gaussian with the renderer's cutoffs, then blends.
double ray_opacity(const PreparedScene& scene, const Vec3& origin, const Vec3& direction, double t,
                   const SceneConfig& config);

/// Where a world point lands in a view, if it is inside the frustum
/// (depth >= near_clip, inside the image; no far clip).
struct PointProjection {
  int px = 0;
  int py = 0;
  bool visible = false;
};

PointProjection project_point(const CameraView& view, const Vec3& point, const SceneConfig& config);

/// Opacity of `point` seen from `view`: ray from the camera center through the
/// point with unit direction, evaluated at the metric distance.
double point_opacity(const PreparedScene& scene, const CameraView& view, const Vec3& point,
                     const SceneConfig& config, std::span<const int> candidates);

struct ViewOpacity {
  std::vector<double> opacity;   // 1 where not visited
  std::vector<uint8_t> visited;  // 0 when outside the frustum
};

/// Tile-style single-view evaluation: points are grouped by the pixel they
/// project into and every point in a pixel reuses that pixel's candidate list.
ViewOpacity batch_evaluate(const PreparedScene& scene, const CameraView& view,
                           std::span<const Vec3> points, const SceneConfig& config);

struct FieldResult {
  std::vector<double> opacity;
  std::vector<uint8_t> visited;  // seen by at least one view
};

/// Minimum over views of the single-view opacity. Points outside every
/// frustum keep opacity 1. Throws InputError when `views` is empty.
FieldResult field_opacity(const PreparedScene& scene, std::span<const CameraView> views,
                          std::span<const Vec3> points, const SceneConfig& config);

/// Writes points and field values as a binary little-endian PLY with float
/// x, y, z, opacity and uchar visited properties.
void save_field_ply(const std::string& path, std::span<const Vec3> points,
                    const FieldResult& field);

}  // namespace gof
