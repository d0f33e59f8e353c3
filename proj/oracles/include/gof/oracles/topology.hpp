// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>

#include "gof/types.hpp"

namespace gof::oracle {

struct MeshTopology {
  size_t vertices = 0;  // referenced by at least one triangle
  size_t edges = 0;
  size_t faces = 0;
  size_t boundary_edges = 0;     // bordering one triangle
  size_t nonmanifold_edges = 0;  // bordering more than two
  size_t inconsistent_edges = 0; // both neighbours traverse it the same way
  long euler = 0;

  bool closed() const { return faces > 0 && boundary_edges == 0 && nonmanifold_edges == 0; }
};

MeshTopology mesh_topology(const TriangleMesh& mesh);

struct RadialStats {
  double mean = 0.0;
  double min = 0.0;
  double max = 0.0;
  double rms_error = 0.0;  // against `expected`
};

/// Distances of mesh vertices from `center`.
RadialStats radial_stats(const TriangleMesh& mesh, const Vec3& center, double expected);

}  // namespace gof::oracle
