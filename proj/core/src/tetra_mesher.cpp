// SPDX-License-Identifier: Apache-2.0
#include "gof/tetra_mesher.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <unordered_map>

#include <tbb/parallel_for.h>

#include "gof/errors.hpp"
#include "gof/opacity_field.hpp"

namespace gof {

std::vector<Gaussian3D> prune_by_opacity(std::span<const Gaussian3D> gaussians, double threshold) {
  std::vector<Gaussian3D> out;
  out.reserve(gaussians.size());
  for (const Gaussian3D& g : gaussians) {
    if (g.opacity >= threshold) out.push_back(g);
  }
  return out;
}

GridVertices generate_vertices(std::span<const Gaussian3D> gaussians, const SceneConfig& config) {
  struct Raw {
    Vec3 p;
    int gaussian;
  };
  std::vector<Raw> raw(gaussians.size() * 9);
  std::vector<double> extents(gaussians.size());
  tbb::parallel_for(size_t{0}, gaussians.size(), [&](size_t i) {
    const Gaussian3D& g = gaussians[i];
    const Mat3 R = quaternion_to_matrix(g.rotation);
    const Vec3 half = config.box_sigma * g.scale;
    extents[i] = half.maxCoeff();
    raw[9 * i] = {g.center, static_cast<int>(i)};
    for (int c = 0; c < 8; ++c) {
      const Vec3 offset((c & 1 ? 1.0 : -1.0) * half[0], (c & 2 ? 1.0 : -1.0) * half[1],
                        (c & 4 ? 1.0 : -1.0) * half[2]);
      raw[9 * i + 1 + c] = {g.center + R * offset, static_cast<int>(i)};
    }
  });

  GridVertices out;
  if (raw.empty()) return out;
  Vec3 lo = raw[0].p, hi = raw[0].p;
  for (const Raw& r : raw) {
    lo = lo.cwiseMin(r.p);
    hi = hi.cwiseMax(r.p);
  }
  const double extent = (hi - lo).maxCoeff();
  out.quantum = 1e-6 * (extent > 0.0 ? extent : 1.0);

  using Key = std::array<int64_t, 3>;
  auto key_of = [&](const Vec3& p) {
    Key k;
    for (int a = 0; a < 3; ++a) k[a] = std::llround((p[a] - lo[a]) / out.quantum);
    return k;
  };
  std::vector<std::pair<Key, size_t>> keyed(raw.size());
  for (size_t i = 0; i < raw.size(); ++i) keyed[i] = {key_of(raw[i].p), i};
  std::sort(keyed.begin(), keyed.end(), [&](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first < b.first;
    const Vec3& pa = raw[a.second].p;
    const Vec3& pb = raw[b.second].p;
    for (int k = 0; k < 3; ++k) {
      if (pa[k] != pb[k]) return pa[k] < pb[k];
    }
    return a.second < b.second;
  });

  for (size_t i = 0; i < keyed.size(); ++i) {
    const Raw& r = raw[keyed[i].second];
    if (i == 0 || keyed[i].first != keyed[i - 1].first) {
      out.points.push_back(r.p);
      out.spawners.push_back({});
      out.extent.push_back(0.0);
    }
    out.spawners.back().push_back(r.gaussian);
    out.extent.back() = std::max(out.extent.back(), extents[r.gaussian]);
  }
  for (auto& s : out.spawners) {
    std::sort(s.begin(), s.end());
    s.erase(std::unique(s.begin(), s.end()), s.end());
  }
  return out;
}

TetrahedralGrid build_grid(GridVertices vertices) {
  TetrahedralGrid grid;
  grid.tets = delaunay(vertices.points);
  grid.vertices = std::move(vertices.points);
  grid.spawners = std::move(vertices.spawners);
  grid.extent = std::move(vertices.extent);
  grid.values.assign(grid.vertices.size(), 0.0);
  grid.visited.assign(grid.vertices.size(), 0);
  return grid;
}

namespace {

bool share_gaussian(const std::vector<int>& a, const std::vector<int>& b) {
  size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] == b[j]) return true;
    if (a[i] < b[j]) {
      ++i;
    } else {
      ++j;
    }
  }
  return false;
}

constexpr int kTetEdges[6][2] = {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}};

}  // namespace

size_t filter_cells(TetrahedralGrid& grid) {
  if (grid.spawners.size() != grid.vertices.size() || grid.extent.size() != grid.vertices.size()) {
    throw InputError("filter_cells: grid has no provenance");
  }
  std::vector<uint8_t> keep(grid.tets.size(), 1);
  tbb::parallel_for(size_t{0}, grid.tets.size(), [&](size_t t) {
    const Tet& tet = grid.tets[t];
    for (const auto& e : kTetEdges) {
      const int a = tet[e[0]];
      const int b = tet[e[1]];
      if (share_gaussian(grid.spawners[a], grid.spawners[b])) continue;
      const double length = (grid.vertices[a] - grid.vertices[b]).norm();
      if (length > grid.extent[a] + grid.extent[b]) {
        keep[t] = 0;
        return;
      }
    }
  });
  std::vector<Tet> kept;
  kept.reserve(grid.tets.size());
  for (size_t t = 0; t < grid.tets.size(); ++t) {
    if (keep[t]) kept.push_back(grid.tets[t]);
  }
  const size_t dropped = grid.tets.size() - kept.size();
  grid.tets = std::move(kept);
  return dropped;
}

namespace {

double tie_broken(double value, double level) { return value == level ? value + kLevelTieBreak : value; }

// Parity of a permutation of (0, 1, 2, 3).
bool is_even(const std::array<int, 4>& p) {
  int inversions = 0;
  for (int a = 0; a < 4; ++a) {
    for (int b = a + 1; b < 4; ++b) inversions += p[a] > p[b];
  }
  return inversions % 2 == 0;
}

}  // namespace

MarchResult marching_tetrahedra(const TetrahedralGrid& grid, double level) {
  if (grid.values.size() != grid.vertices.size()) {
    throw InputError("marching_tetrahedra: vertex values are missing");
  }
  MarchResult out;
  std::unordered_map<uint64_t, int> edge_ids;
  std::vector<double> values(grid.values.size());
  for (size_t i = 0; i < values.size(); ++i) values[i] = tie_broken(grid.values[i], level);

  auto crossing = [&](int a, int b) {
    const int lo = std::min(a, b), hi = std::max(a, b);
    const uint64_t key = (static_cast<uint64_t>(lo) << 32) | static_cast<uint32_t>(hi);
    auto [it, inserted] = edge_ids.try_emplace(key, static_cast<int>(out.crossings.size()));
    if (inserted) {
      const bool a_in = values[a] > level;
      const int in = a_in ? a : b;
      const int outv = a_in ? b : a;
      out.crossings.push_back({lo, hi, grid.vertices[in], grid.vertices[outv], values[in], values[outv]});
    }
    return it->second;
  };

  for (const Tet& tet : grid.tets) {
    std::array<int, 4> in_idx{}, out_idx{};
    int n_in = 0, n_out = 0;
    for (int k = 0; k < 4; ++k) {
      if (values[tet[k]] > level) {
        in_idx[n_in++] = k;
      } else {
        out_idx[n_out++] = k;
      }
    }
    if (n_in == 0 || n_in == 4) continue;
    if (n_in == 1 || n_in == 3) {
      const int lone = n_in == 1 ? in_idx[0] : out_idx[0];
      std::array<int, 4> perm{lone, 0, 0, 0};
      int m = 1;
      for (int k = 0; k < 4; ++k) {
        if (k != lone) perm[m++] = k;
      }
      if (!is_even(perm)) std::swap(perm[2], perm[3]);
      // Face (perm[1], perm[2], perm[3]) has its normal pointing away from perm[0].
      const int e1 = crossing(tet[perm[0]], tet[perm[1]]);
      const int e2 = crossing(tet[perm[0]], tet[perm[2]]);
      const int e3 = crossing(tet[perm[0]], tet[perm[3]]);
      if (n_in == 1) {
        out.triangles.push_back({e1, e2, e3});
      } else {
        out.triangles.push_back({e1, e3, e2});
      }
      continue;
    }
    std::array<int, 4> perm{in_idx[0], in_idx[1], out_idx[0], out_idx[1]};
    if (!is_even(perm)) std::swap(perm[2], perm[3]);
    const int ik = crossing(tet[perm[0]], tet[perm[2]]);
    const int il = crossing(tet[perm[0]], tet[perm[3]]);
    const int jl = crossing(tet[perm[1]], tet[perm[3]]);
    const int jk = crossing(tet[perm[1]], tet[perm[2]]);
    out.triangles.push_back({ik, il, jl});
    out.triangles.push_back({ik, jl, jk});
  }
  return out;
}

RefineResult binary_search_refine(const FieldFunction& field, std::span<const Crossing> crossings,
                                  double level, int steps) {
  if (steps < 0) throw InputError("binary_search_refine: negative step count");
  const size_t n = crossings.size();
  for (size_t i = 0; i < n; ++i) {
    const Crossing& c = crossings[i];
    if (!(c.inside_value > level && c.outside_value < level)) {
      throw NumericalError("binary_search_refine: edge " + std::to_string(i) + " (" +
                           std::to_string(c.edge_a) + ", " + std::to_string(c.edge_b) +
                           ") does not bracket the level");
    }
  }
  // Bracket endpoints as fractions of the original edge from the inside end,
  // so each round halves the bracket exactly.
  std::vector<double> s_in(n, 0.0), s_out(n, 1.0);
  std::vector<double> v_in(n), v_out(n);
  for (size_t i = 0; i < n; ++i) {
    v_in[i] = crossings[i].inside_value;
    v_out[i] = crossings[i].outside_value;
  }
  auto at = [&](size_t i, double s) {
    const Crossing& c = crossings[i];
    return Vec3(c.inside + s * (c.outside - c.inside));
  };

  RefineResult result;
  std::vector<Vec3> mids(n);
  std::vector<double> s_mid(n);
  for (int round = 0; round < steps && n > 0; ++round) {
    for (size_t i = 0; i < n; ++i) {
      s_mid[i] = 0.5 * (s_in[i] + s_out[i]);
      mids[i] = at(i, s_mid[i]);
    }
    std::vector<double> values = field(mids);
    if (values.size() != n) throw NumericalError("binary_search_refine: field returned wrong size");
    for (size_t i = 0; i < n; ++i) {
      const double v = tie_broken(values[i], level);
      if (!std::isfinite(v)) {
        throw NumericalError("binary_search_refine: non-finite field value on edge " + std::to_string(i));
      }
      if (v > level) {
        s_in[i] = s_mid[i];
        v_in[i] = v;
      } else {
        s_out[i] = s_mid[i];
        v_out[i] = v;
      }
    }
    ++result.rounds;
  }
  result.positions.resize(n);
  result.bracket_lengths.resize(n);
  for (size_t i = 0; i < n; ++i) {
    const double w = (v_in[i] - level) / (v_in[i] - v_out[i]);
    result.positions[i] = at(i, s_in[i] + w * (s_out[i] - s_in[i]));
    result.bracket_lengths[i] =
        (s_out[i] - s_in[i]) * (crossings[i].outside - crossings[i].inside).norm();
  }
  return result;
}

RefineResult binary_search_refine(const PreparedScene& scene, std::span<const CameraView> views,
                                  std::span<const Crossing> crossings, const SceneConfig& config) {
  const FieldFunction field = [&](std::span<const Vec3> points) {
    return field_opacity(scene, views, points, config).opacity;
  };
  return binary_search_refine(field, crossings, config.level, config.binary_steps);
}

namespace {

template <typename Fn>
auto stage(const char* name, Fn&& fn) {
  try {
    return fn();
  } catch (const FormatError&) {
    throw;
  } catch (const InputError& e) {
    throw InputError(std::string(name) + ": " + e.what());
  } catch (const NumericalError& e) {
    throw NumericalError(std::string(name) + ": " + e.what());
  }
}

}  // namespace

ExtractionResult extract_mesh(std::span<const Gaussian3D> gaussians,
                              std::span<const CameraView> views, const SceneConfig& config) {
  config.validate();
  if (views.empty()) throw InputError("extract: at least one view is required");
  ExtractionResult result;
  const std::vector<Gaussian3D> kept = prune_by_opacity(gaussians, config.prune_alpha);
  result.stats.gaussians_used = kept.size();
  if (kept.empty()) {
    warn("extract: no Gaussian passes the opacity threshold; mesh is empty");
    return result;
  }

  GridVertices verts = stage("grid vertices", [&] { return generate_vertices(kept, config); });
  result.stats.grid_vertices = verts.points.size();
  TetrahedralGrid grid = stage("tetrahedralization", [&] { return build_grid(std::move(verts)); });
  result.stats.tets_total = grid.tets.size();
  result.stats.tets_dropped = stage("cell filter", [&] { return filter_cells(grid); });
  result.stats.tets_kept = grid.tets.size();

  const PreparedScene scene{std::vector<Gaussian3D>(gaussians.begin(), gaussians.end())};
  stage("field evaluation", [&] {
    FieldResult f = field_opacity(scene, views, grid.vertices, config);
    grid.values = std::move(f.opacity);
    grid.visited = std::move(f.visited);
    return 0;
  });
  if (grid.tets.empty()) {
    warn("extract: every tetrahedron was filtered; mesh is empty");
    return result;
  }

  const MarchResult march = stage("marching tetrahedra", [&] { return marching_tetrahedra(grid, config.level); });
  result.stats.crossings = march.crossings.size();
  for (const Crossing& c : march.crossings) {
    if (!grid.visited[c.edge_a] || !grid.visited[c.edge_b]) ++result.stats.unvisited_crossings;
  }
  const RefineResult refined =
      stage("binary search", [&] { return binary_search_refine(scene, views, march.crossings, config); });
  result.stats.refine_rounds = refined.rounds;

  result.mesh.vertices = refined.positions;
  result.mesh.triangles = march.triangles;
  if (!result.mesh.vertices.empty()) {
    result.mesh.values = stage("field evaluation", [&] {
      return field_opacity(scene, views, result.mesh.vertices, config).opacity;
    });
  }
  if (result.mesh.triangles.empty()) warn("extract: the level set does not cross the grid; mesh is empty");
  return result;
}

}  // namespace gof
