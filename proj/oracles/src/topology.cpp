// SPDX-License-Identifier: Apache-2.0
#include "gof/oracles/topology.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <utility>

namespace gof::oracle {

MeshTopology mesh_topology(const TriangleMesh& mesh) {
  MeshTopology out;
  out.faces = mesh.triangles.size();
  // +1 per a->b traversal with a < b, -1 otherwise
  std::map<std::pair<int, int>, std::pair<int, int>> edges;  // count, orientation sum
  std::set<int> used;
  for (const auto& t : mesh.triangles) {
    for (int k = 0; k < 3; ++k) {
      const int a = t[k];
      const int b = t[(k + 1) % 3];
      used.insert(a);
      auto& e = edges[{std::min(a, b), std::max(a, b)}];
      e.first += 1;
      e.second += a < b ? 1 : -1;
    }
  }
  out.vertices = used.size();
  out.edges = edges.size();
  for (const auto& [key, e] : edges) {
    if (e.first == 1) ++out.boundary_edges;
    if (e.first > 2) ++out.nonmanifold_edges;
    if (e.first == 2 && e.second != 0) ++out.inconsistent_edges;
  }
  out.euler = static_cast<long>(out.vertices) - static_cast<long>(out.edges) +
              static_cast<long>(out.faces);
  return out;
}

RadialStats radial_stats(const TriangleMesh& mesh, const Vec3& center, double expected) {
  RadialStats s;
  if (mesh.vertices.empty()) {
    s.rms_error = std::numeric_limits<double>::infinity();
    return s;
  }
  s.min = std::numeric_limits<double>::infinity();
  s.max = 0.0;
  double sum = 0.0, se = 0.0;
  for (const Vec3& v : mesh.vertices) {
    const double r = (v - center).norm();
    sum += r;
    se += (r - expected) * (r - expected);
    s.min = std::min(s.min, r);
    s.max = std::max(s.max, r);
  }
  const double n = static_cast<double>(mesh.vertices.size());
  s.mean = sum / n;
  s.rms_error = std::sqrt(se / n);
  return s;
}

}  // namespace gof::oracle
