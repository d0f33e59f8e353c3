// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>

#include "gof/types.hpp"

namespace gof {

/// Real spherical harmonics basis up to degree 3 in the ordering and sign
/// convention of the public 3DGS checkpoints.
std::array<double, kShCoefficients> sh_basis(const Vec3& unit_dir);

/// Basis values together with their derivatives with respect to the (unit)
/// direction components.
void sh_basis_with_gradient(const Vec3& unit_dir, std::array<double, kShCoefficients>& values,
                            std::array<Vec3, kShCoefficients>& gradients);

inline int sh_coefficient_count(int degree) { return (degree + 1) * (degree + 1); }

/// Color of a Gaussian seen along `view_dir` (not necessarily unit): the SH
/// sum plus 0.5, clamped to [0, 1] per channel. `clamped` reports per channel
/// whether the clamp was active.
Vec3 sh_color(const Gaussian3D& g, const Vec3& view_dir, int degree,
              std::array<bool, 3>* clamped = nullptr);

/// Back-propagates dL/dcolor into SH coefficients and the Gaussian center (the
/// view direction runs from `camera_center` to the Gaussian center).
void sh_color_backward(const Gaussian3D& g, const Vec3& camera_center, int degree,
                       const Vec3& grad_color, std::array<Vec3, kShCoefficients>& grad_sh,
                       Vec3& grad_center);

}  // namespace gof
