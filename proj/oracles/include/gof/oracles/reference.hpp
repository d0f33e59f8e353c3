// SPDX-License-Identifier: Apache-2.0
#pragma once

// Independent reference implementations. Nothing here calls into the
// production ray-Gaussian code; everything is written against the
// covariance form of a Gaussian.

#include <span>
#include <vector>

#include "gof/opacity_field.hpp"
#include "gof/types.hpp"

namespace gof::oracle {

/// Covariance R diag(s)^2 R^T from the quaternion, built without
/// quaternion_to_matrix.
Mat3 covariance(const Gaussian3D& g);

/// exp(-1/2 (x - mu)^T Sigma^-1 (x - mu)).
double response(const Gaussian3D& g, const Vec3& x);

struct DenseMax {
  double t = 0.0;
  double value = 0.0;
};

/// Argmax of response along o + t d over a uniform grid on [t0, t1].
DenseMax dense_argmax(const Gaussian3D& g, const Vec3& o, const Vec3& d, double t0, double t1,
                      double spacing);

/// t* from the normal equations of the covariance form.
double covariance_t_star(const Gaussian3D& g, const Vec3& o, const Vec3& d);

struct ReferenceSample {
  int id = 0;
  double t_star = 0.0;
  double alpha = 0.0;
  double weight = 0.0;
};

/// Every Gaussian with t* >= near_clip, sorted, composited with no cutoff and
/// no early termination. Alpha is still clamped to 0.999.
std::vector<ReferenceSample> composite_all(std::span<const Gaussian3D> scene, const Vec3& o,
                                           const Vec3& d, double near_clip);

/// Blended opacity at t with the same contributor set as composite_all.
double reference_ray_opacity(std::span<const Gaussian3D> scene, const Vec3& o, const Vec3& d,
                             double t, double near_clip);

/// Minimum over views of the reference opacity of each point; points no view
/// sees are 1.
std::vector<double> reference_field(std::span<const Gaussian3D> scene,
                                    std::span<const CameraView> views, std::span<const Vec3> points,
                                    const SceneConfig& config);

/// The per-point loop the tiled evaluator must reproduce exactly: for every
/// point and view, point_opacity over the full Gaussian list.
FieldResult naive_field(const PreparedScene& scene, std::span<const CameraView> views,
                        std::span<const Vec3> points, const SceneConfig& config);

/// Closed form of the opacity field of one isotropic Gaussian seen from
/// outside: alpha * exp(-rho^2 / 2) for Mahalanobis radius rho.
inline double single_gaussian_field(double alpha, double rho) {
  return alpha * std::exp(-0.5 * rho * rho);
}

/// Radius of the closed level set of single_gaussian_field.
inline double single_gaussian_level_radius(double alpha, double level) {
  return std::sqrt(2.0 * std::log(alpha / level));
}

}  // namespace gof::oracle
