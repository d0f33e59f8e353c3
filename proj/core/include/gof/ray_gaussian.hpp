// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>

#include "gof/types.hpp"

namespace gof {

inline constexpr double kMinScale = 1e-8;

/// World-to-local transform of one Gaussian, cached so per-ray work is a
/// matrix-vector product.
struct GaussianFrame {
  Vec3 center = Vec3::Zero();
  Mat3 world_to_local = Mat3::Identity();  // transpose of the quaternion matrix
  Vec3 inv_scale = Vec3::Ones();
  bool scale_clamped = false;  // some scale was below kMinScale
};

GaussianFrame make_frame(const Gaussian3D& g);

/// A ray expressed in the scale-normalized frame of one Gaussian.
/// `direction` is generally not unit length.
struct RayLocal {
  Vec3 origin = Vec3::Zero();
  Vec3 direction = Vec3::UnitZ();
  double a = 1.0;  // direction . direction
  double b = 0.0;  // origin . direction
  bool scale_clamped = false;
};

RayLocal to_local(const GaussianFrame& frame, const Vec3& origin, const Vec3& direction);
RayLocal to_local(const Gaussian3D& g, const Vec3& origin, const Vec3& direction);

struct Intersection {
  double t_star = 0.0;
  double peak = 0.0;  // 1D Gaussian value at t_star
};

/// Depth of maximal response along the ray, t* = -b / a, and the response there.
Intersection intersect(const RayLocal& ray);

/// The Gaussian restricted to the ray, exp(-|o + t r|^2 / 2) in local units.
inline double gaussian_1d(const RayLocal& ray, double t) {
  const Vec3 x = ray.origin + t * ray.direction;
  return std::exp(-0.5 * x.squaredNorm());
}

/// World-space unit normal of the ray-Gaussian intersection plane, oriented so
/// that it faces the ray origin (n . direction < 0).
Vec3 plane_normal(const GaussianFrame& frame, const RayLocal& ray, const Vec3& world_direction);
Vec3 plane_normal(const Gaussian3D& g, const RayLocal& ray, const Vec3& world_direction);

/// Peak response when the intersection lies at or beyond `near_clip`, else 0.
double contribution(const Gaussian3D& g, const Vec3& origin, const Vec3& direction,
                    double near_clip);

/// Gradient of a loss with respect to one Gaussian's geometry parameters.
/// `rotation` is with respect to the quaternion exactly as stored in
/// Gaussian3D::rotation (which need not be unit length; normalization is part
/// of the chain).
struct GeometryGrad {
  Vec3 center = Vec3::Zero();
  Vec3 log_scale = Vec3::Zero();
  Vec4 rotation = Vec4::Zero();

  GeometryGrad& operator+=(const GeometryGrad& o) {
    center += o.center;
    log_scale += o.log_scale;
    rotation += o.rotation;
    return *this;
  }
};

/// Accumulates into `out` the chain rule from (dL/dt*, dL/dpeak, dL/dnormal)
/// back to center, log-scale and quaternion for the ray (origin, direction).
void backprop_ray_gaussian(const Gaussian3D& g, const Vec3& origin, const Vec3& direction,
                           double grad_t_star, double grad_peak, const Vec3& grad_normal,
                           GeometryGrad& out);

/// Chain rule from dL/dR (R = quaternion_to_matrix(q)) to dL/dq for a possibly
/// non-unit quaternion q.
Vec4 quaternion_matrix_backward(const Vec4& q, const Mat3& grad_matrix);

namespace fault {

/// Mutation hooks used by the self-check command to prove the oracle suite
/// catches real defects. Never enabled in normal operation.
enum class Fault { kNone, kFlipTStarSign };

void inject(Fault f);
Fault active();

}  // namespace fault

}  // namespace gof
