// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace gof {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Mat3 = Eigen::Matrix3d;

inline constexpr int kShCoefficients = 16;  // degree 3
inline constexpr int kShRestFloats = 45;    // 15 coefficients x 3 channels
inline constexpr double kShC0 = 0.28209479177387814;

/// One anisotropic primitive with activated parameters.
///
/// `rotation` is a unit quaternion in (w, x, y, z) order. The matrix built from
/// it maps the Gaussian's local frame to world, so the covariance is
/// R diag(scale)^2 R^T. `sh[k]` holds the RGB coefficients of basis function k;
/// `sh[0]` is the DC term.
struct Gaussian3D {
  Vec3 center = Vec3::Zero();
  Vec3 scale = Vec3::Ones();
  Vec4 rotation = Vec4(1.0, 0.0, 0.0, 0.0);
  double opacity = 0.5;
  std::array<Vec3, kShCoefficients> sh{};

  Gaussian3D() {
    for (auto& c : sh) c.setZero();
  }
};

/// Local-to-world rotation matrix of a (w, x, y, z) quaternion. The quaternion
/// is normalized internally.
Mat3 quaternion_to_matrix(const Vec4& q);

/// Row-major, channel-interleaved image with values nominally in [0, 1].
struct Image {
  int width = 0;
  int height = 0;
  int channels = 0;
  std::vector<double> data;

  Image() = default;
  Image(int w, int h, int c, double fill = 0.0)
      : width(w), height(h), channels(c), data(static_cast<size_t>(w) * h * c, fill) {}

  double& at(int x, int y, int c = 0) {
    return data[(static_cast<size_t>(y) * width + x) * channels + c];
  }
  double at(int x, int y, int c = 0) const {
    return data[(static_cast<size_t>(y) * width + x) * channels + c];
  }
  size_t pixel_count() const { return static_cast<size_t>(width) * height; }
  bool empty() const { return data.empty(); }
};

/// Pinhole camera. `rotation`/`translation` map world to camera:
/// x_cam = rotation * x_world + translation. The camera looks down +z.
struct CameraView {
  int id = 0;
  int width = 0;
  int height = 0;
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.5;
  double cy = 0.5;
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();
  std::optional<Image> image;

  Vec3 center() const { return -rotation.transpose() * translation; }

  /// Camera-frame direction (z = 1) through continuous pixel coordinate (u, v).
  Vec3 camera_direction(double u, double v) const {
    return Vec3((u - cx) / fx, (v - cy) / fy, 1.0);
  }
  /// World-frame direction through (u, v); its camera-frame z component is 1,
  /// so the ray parameter equals camera-space depth.
  Vec3 world_direction(double u, double v) const {
    return rotation.transpose() * camera_direction(u, v);
  }
  /// Direction through the center of pixel (px, py).
  Vec3 pixel_direction(int px, int py) const { return world_direction(px + 0.5, py + 0.5); }

  Vec3 to_camera(const Vec3& world) const { return rotation * world + translation; }
};

/// Tunables shared by rendering, field evaluation and mesh extraction.
struct SceneConfig {
  double level = 0.5;
  int binary_steps = 8;
  double near_clip = 0.2;
  double prune_alpha = 0.05;
  double contribution_cutoff = 1.0 / 255.0;  // 0 disables the cutoff
  double transmittance_floor = 1e-4;          // 0 disables early termination
  double box_sigma = 3.0;
  double alpha_distortion = 1000.0;
  double beta_normal = 0.05;
  int sh_degree = 3;

  /// Throws InputError when a value is out of its valid range.
  void validate() const;
};

struct TriangleMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> triangles;
  std::vector<double> values;  // field value at each vertex, diagnostic
};

}  // namespace gof
