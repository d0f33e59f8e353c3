// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <span>
#include <vector>

#include "gof/types.hpp"

namespace gof {

using Tet = std::array<int, 4>;

/// Delaunay tetrahedralization by incremental Bowyer-Watson insertion with
/// exact predicates.
///
/// Returned tets index into `points` and are right-handed
/// (predicates::orient3d > 0). Exact duplicates are inserted once (the lowest
/// index wins). Points are inserted in a canonical spatial order, so the
/// result does not depend on the order of `points` beyond relabelling.
///
/// Throws InputError when fewer than 4 distinct points are given or all points
/// are coplanar.
std::vector<Tet> delaunay(std::span<const Vec3> points);

/// Signed volume of a tetrahedron, det[b-a, c-a, d-a] / 6.
double tet_volume(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d);

}  // namespace gof
