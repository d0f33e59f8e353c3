// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "gof/oracles/exact.hpp"
#include "gof/oracles/gradcheck.hpp"
#include "gof/types.hpp"

namespace gof::oracle {

struct IntersectionStats {
  size_t cases = 0;
  double max_t_error = 0.0;      // closed-form t* vs dense argmax
  double max_peak_error = 0.0;   // closed-form peak vs covariance form at t*
  double max_dense_excess = 0.0; // dense maximum above the closed-form peak
};

/// Random (Gaussian, ray) pairs against a 1e-3 spaced dense search.
IntersectionStats intersection_oracle(int cases, uint64_t seed, double spacing = 1e-3);

/// Largest |n . (M u)| with M the local-to-world map R S and u orthogonal to
/// the local ray direction.
double plane_normal_oracle(int cases, uint64_t seed);

struct MonotonicityStats {
  size_t rays = 0;
  size_t violations = 0;  // decreases larger than 1e-9
  double max_drop = 0.0;
};

MonotonicityStats monotonicity_oracle(int scenes, int rays_per_scene, int grid, uint64_t seed);

struct FieldEquivalence {
  size_t points = 0;
  size_t bitwise_mismatches = 0;       // tiled vs naive, same cutoffs
  double max_diff_no_cutoff = 0.0;     // both without cutoffs vs covariance reference
  double max_diff_default = 0.0;       // default cutoffs vs reference without cutoffs
};

FieldEquivalence field_equivalence(int points, int views, uint64_t seed);

struct DelaunaySummary {
  DelaunayAudit audit;
  int instances = 0;
  double cube_volume_error = 0.0;
};

DelaunaySummary delaunay_oracle(int instances, int max_points, uint64_t seed);

struct DensifySummary {
  size_t gaussians = 0;
  size_t violations = 0;  // M below the norm of the accumulated gradient
  double cancellation_classic = 0.0;
  double cancellation_M = 0.0;
  double cancellation_expected = 0.0;
  double mean_ratio = 0.0;  // mean of M / classic over observed Gaussians
};

/// Backward passes over a few views of a random scene, plus the (g, -g)
/// cancellation case.
DensifySummary densify_oracle(uint64_t seed);

struct SuiteResult {
  std::string name;
  bool passed = false;
  double seconds = 0.0;
  std::string detail;
};

/// The embedded self-check: intersect, plane-normal, monotonic, field,
/// delaunay, gradients, densify. `quick` trims case counts.
std::vector<SuiteResult> run_self_check(bool quick, std::ostream* progress = nullptr);

}  // namespace gof::oracle
