// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "gof/types.hpp"

namespace gof::predicates {

// Adaptive-precision geometric predicates. Each returns a value whose sign is
// exact: a floating-point evaluation is accepted when it clears a forward error
// bound, otherwise the determinant is recomputed exactly with floating-point
// expansions. Magnitudes are only meaningful as approximations.

/// Positive when (a, b, c, d) is right-handed, i.e. det[b-a, c-a, d-a] > 0.
double orient3d(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d);

/// Positive when e lies strictly inside the circumsphere of the right-handed
/// tetrahedron (a, b, c, d); zero when cospherical.
double insphere(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d, const Vec3& e);

/// Exact orientation of (a, b, c) in 2D (counterclockwise positive).
double orient2d(double ax, double ay, double bx, double by, double cx, double cy);

/// True when a, b and c lie on one line (exact).
bool collinear(const Vec3& a, const Vec3& b, const Vec3& c);

/// Number of predicate calls that fell through to exact arithmetic since
/// start-up (diagnostic).
unsigned long long exact_fallback_count();

}  // namespace gof::predicates
