// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <string>

#include "gof/optimizer.hpp"
#include "gof/types.hpp"

namespace gof::oracle {

/// (f(+h) - f(-h)) / 2h.
double central_difference(const std::function<double(double)>& f, double h);

/// |a - b| / max(|a|, |b|, floor).
double relative_error(double analytic, double numeric, double floor);

/// Adds `delta` to raw parameter `index` of g in the layout of
/// gof::flatten(GaussianGrad): center, log-scale, stored quaternion, opacity
/// logit, SH.
void perturb_raw(Gaussian3D& g, int index, double delta);

struct GradCheck {
  size_t compared = 0;
  size_t failures = 0;
  double max_rel_error = 0.0;
  std::string worst;  // description of the worst component

  void record(double analytic, double numeric, double tolerance, double floor, const std::string& what);
  void merge(const GradCheck& o);
  bool ok() const { return failures == 0 && compared > 0; }
};

/// (t*, peak, normal) chain on one random Gaussian and ray.
GradCheck check_ray_chain(uint64_t seed, double tolerance = 1e-3);

/// Photometric loss gradient with respect to pixel values on a random 8x8
/// pair.
GradCheck check_photometric(uint64_t seed, double tolerance = 1e-4);

/// Distortion loss on one ray through a random cluster: gradient to geometry
/// with weights frozen, center moves along the ray, and the detachment
/// contract (opacity gradients unchanged by the distortion weight, bitwise).
GradCheck check_distortion(uint64_t seed, double tolerance = 1e-3);

/// Full rendered-view gradient of L_c + beta * L_n (distortion off) against
/// finite differences of the loss, on rotation, scale, center and opacity.
/// With `detach` the depth-derived normal is frozen in the numerical loss.
GradCheck check_normal(uint64_t seed, bool detach = false, double tolerance = 1e-3);

/// Small camera and cluster used by check_normal.
struct ViewFixture {
  CameraView view;
  std::vector<Gaussian3D> gaussians;
  Image reference;
  TrainConfig config;
};

ViewFixture make_view_fixture(uint64_t seed, int size = 16);

}  // namespace gof::oracle
