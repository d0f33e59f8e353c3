// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <functional>
#include <span>
#include <vector>

#include "gof/delaunay.hpp"
#include "gof/renderer.hpp"
#include "gof/types.hpp"

namespace gof {

/// Gaussians with opacity >= threshold, in input order.
std::vector<Gaussian3D> prune_by_opacity(std::span<const Gaussian3D> gaussians, double threshold);

/// Deduplicated grid vertices with the Gaussians that produced them.
struct GridVertices {
  std::vector<Vec3> points;
  std::vector<std::vector<int>> spawners;  // sorted Gaussian indices per point
  std::vector<double> extent;              // largest box half-extent among spawners
  double quantum = 0.0;                    // dedup cell size
};

/// Center plus the 8 oriented box corners p + R (+-k s) of every Gaussian,
/// merged when their coordinates quantize to the same cell of size
/// 1e-6 * scene extent. Points come out in a canonical order that does not
/// depend on the order of `gaussians`.
GridVertices generate_vertices(std::span<const Gaussian3D> gaussians, const SceneConfig& config);

struct TetrahedralGrid {
  std::vector<Vec3> vertices;
  std::vector<Tet> tets;  // right-handed
  std::vector<double> values;
  std::vector<uint8_t> visited;  // vertex seen by at least one view
  std::vector<std::vector<int>> spawners;
  std::vector<double> extent;
};

TetrahedralGrid build_grid(GridVertices vertices);

/// Removes tets with an edge between vertices of disjoint Gaussians whose
/// length exceeds the sum of the endpoints' extents. Returns the number of
/// tets removed.
size_t filter_cells(TetrahedralGrid& grid);

/// A grid edge whose endpoints lie on opposite sides of the level.
/// `inside` is strictly above the level, `outside` at or below it.
struct Crossing {
  int edge_a = 0;  // grid vertex ids, edge_a < edge_b
  int edge_b = 0;
  Vec3 inside = Vec3::Zero();
  Vec3 outside = Vec3::Zero();
  double inside_value = 0.0;
  double outside_value = 0.0;
};

struct MarchResult {
  std::vector<Crossing> crossings;             // one per welded mesh vertex
  std::vector<std::array<int, 3>> triangles;  // indices into crossings
};

/// Values exactly equal to the level are nudged up by this amount before
/// classification.
inline constexpr double kLevelTieBreak = 1e-9;

/// Marching tetrahedra over `grid.values` with inside = value > level.
/// Triangles are oriented with normals pointing from inside to outside.
MarchResult marching_tetrahedra(const TetrahedralGrid& grid, double level);

/// Batched scalar field: values at many points in one call.
using FieldFunction = std::function<std::vector<double>(std::span<const Vec3>)>;

struct RefineResult {
  std::vector<Vec3> positions;
  std::vector<double> bracket_lengths;  // final |inside - outside| per crossing
  int rounds = 0;
};

/// `steps` rounds of bisection, each evaluating `field` once at the midpoints
/// of all brackets, followed by linear interpolation to `level` inside the
/// final bracket. Throws NumericalError naming the edge when an input
/// crossing does not bracket the level.
RefineResult binary_search_refine(const FieldFunction& field, std::span<const Crossing> crossings,
                                  double level, int steps);

/// Same, with the field given by min-over-views opacity.
RefineResult binary_search_refine(const PreparedScene& scene, std::span<const CameraView> views,
                                  std::span<const Crossing> crossings, const SceneConfig& config);

struct ExtractionStats {
  size_t gaussians_used = 0;
  size_t grid_vertices = 0;
  size_t tets_total = 0;
  size_t tets_kept = 0;
  size_t tets_dropped = 0;
  size_t crossings = 0;
  size_t unvisited_crossings = 0;  // crossings touching a never-seen vertex
  int refine_rounds = 0;
};

struct ExtractionResult {
  TriangleMesh mesh;
  ExtractionStats stats;
};

/// Full pipeline: prune, grid vertices, Delaunay, cell filter, field values,
/// marching tetrahedra and bisection refinement. Mesh vertex values hold the
/// field evaluated at the final positions.
ExtractionResult extract_mesh(std::span<const Gaussian3D> gaussians,
                              std::span<const CameraView> views, const SceneConfig& config);

}  // namespace gof
