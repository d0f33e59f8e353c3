// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <vector>

#include "gof/delaunay.hpp"
#include "gof/types.hpp"

namespace gof::oracle {

/// Sign of det[b - a, c - a, d - a] in rational arithmetic.
int exact_orientation(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d);

/// +1 when e is strictly inside the circumsphere of (a, b, c, d), -1 outside,
/// 0 on it; rational arithmetic, independent of tet orientation.
int exact_in_circumsphere(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d, const Vec3& e);

struct DelaunayAudit {
  size_t tets = 0;
  size_t negative_or_flat = 0;     // tets without strictly positive orientation
  size_t sphere_violations = 0;    // (tet, point) pairs with the point strictly inside
  size_t exact_tests = 0;          // insphere tests decided in rational arithmetic
  size_t unused_points = 0;        // points referenced by no tet
};

/// Checks every tet against every point. Circumcenters are solved exactly and
/// rounded; only points within a generous band of the rounded sphere go to
/// the rational test, which is the sole arbiter of a violation.
DelaunayAudit audit_delaunay(std::span<const Vec3> points, std::span<const Tet> tets);

}  // namespace gof::oracle
