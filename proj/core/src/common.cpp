// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <iostream>
#include <mutex>

#include "gof/errors.hpp"
#include "gof/types.hpp"

namespace gof {

namespace {
std::mutex g_warning_mutex;
WarningHandler g_warning_handler;
}  // namespace

WarningHandler set_warning_handler(WarningHandler handler) {
  std::lock_guard lock(g_warning_mutex);
  std::swap(g_warning_handler, handler);
  return handler;
}

void warn(std::string_view message) {
  std::lock_guard lock(g_warning_mutex);
  if (g_warning_handler) {
    g_warning_handler(message);
  } else {
    std::cerr << "warning: " << message << '\n';
  }
}

Mat3 quaternion_to_matrix(const Vec4& q_in) {
  const Vec4 q = q_in.normalized();
  const double r = q[0], x = q[1], y = q[2], z = q[3];
  Mat3 m;
  m << 1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - r * z), 2.0 * (x * z + r * y),
      2.0 * (x * y + r * z), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - r * x),
      2.0 * (x * z - r * y), 2.0 * (y * z + r * x), 1.0 - 2.0 * (x * x + y * y);
  return m;
}

void SceneConfig::validate() const {
  auto fail = [](const std::string& what) { throw InputError("invalid config: " + what); };
  if (!(level > 0.0 && level < 1.0)) fail("level must lie in (0, 1)");
  if (binary_steps < 0) fail("binary_steps must be >= 0");
  if (!(near_clip > 0.0)) fail("near_clip must be positive");
  if (!(prune_alpha > 0.0)) fail("prune_alpha must be positive");
  if (!(contribution_cutoff >= 0.0 && contribution_cutoff < 0.999)) {
    fail("contribution_cutoff must lie in [0, 0.999)");
  }
  if (!(transmittance_floor >= 0.0 && transmittance_floor < 1.0)) {
    fail("transmittance_floor must lie in [0, 1)");
  }
  if (!(box_sigma > 0.0)) fail("box_sigma must be positive");
  if (!(alpha_distortion >= 0.0)) fail("alpha_distortion must be >= 0");
  if (!(beta_normal >= 0.0)) fail("beta_normal must be >= 0");
  if (sh_degree < 0 || sh_degree > 3) fail("sh_degree must lie in [0, 3]");
}

}  // namespace gof
