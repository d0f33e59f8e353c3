// SPDX-License-Identifier: Apache-2.0
#include "gof/oracles/suites.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <ostream>
#include <random>
#include <sstream>

#include "gof/delaunay.hpp"
#include "gof/opacity_field.hpp"
#include "gof/optimizer.hpp"
#include "gof/oracles/fixtures.hpp"
#include "gof/oracles/reference.hpp"
#include "gof/ray_gaussian.hpp"
#include "gof/renderer.hpp"

namespace gof::oracle {

namespace {

struct Ray {
  Vec3 o;
  Vec3 d;
};

// Unit ray from distance 5 aimed close to the Gaussian center.
Ray ray_towards(const Gaussian3D& g, std::mt19937_64& rng) {
  const Vec3 o = g.center + 5.0 * random_unit(rng);
  const Vec3 aim = g.center + 0.5 * g.scale.maxCoeff() * random_unit(rng);
  return {o, (aim - o).normalized()};
}

Mat3 local_to_world_scaled(const Gaussian3D& g) {
  const Vec4 q = g.rotation.normalized();
  const Eigen::Quaterniond quat(q[0], q[1], q[2], q[3]);
  Mat3 M;
  for (int i = 0; i < 3; ++i) M.col(i) = (quat * Vec3::Unit(i)) * g.scale[i];
  return M;
}

}  // namespace

IntersectionStats intersection_oracle(int cases, uint64_t seed, double spacing) {
  std::mt19937_64 rng(seed);
  IntersectionStats s;
  for (int i = 0; i < cases; ++i) {
    const Gaussian3D g = random_gaussian(rng, 1.0, 0.05, 0.5);
    const Ray r = ray_towards(g, rng);
    const Intersection hit = intersect(to_local(g, r.o, r.d));
    const DenseMax dense = dense_argmax(g, r.o, r.d, 0.0, 10.0, spacing);
    ++s.cases;
    s.max_t_error = std::max(s.max_t_error, std::abs(hit.t_star - dense.t));
    s.max_peak_error = std::max(s.max_peak_error, std::abs(hit.peak - response(g, r.o + hit.t_star * r.d)));
    s.max_dense_excess = std::max(s.max_dense_excess, dense.value - hit.peak);
  }
  return s;
}

double plane_normal_oracle(int cases, uint64_t seed) {
  std::mt19937_64 rng(seed);
  double worst = 0.0;
  for (int i = 0; i < cases; ++i) {
    const Gaussian3D g = random_gaussian(rng, 1.0, 0.05, 0.5);
    const Ray r = ray_towards(g, rng);
    const Mat3 M = local_to_world_scaled(g);
    const Vec3 rg = M.inverse() * r.d;
    Vec3 u = random_unit(rng);
    u -= rg * (u.dot(rg) / rg.squaredNorm());
    u.normalize();
    const Vec3 n = plane_normal(g, to_local(g, r.o, r.d), r.d);
    worst = std::max(worst, std::abs(n.dot(M * u)));
  }
  return worst;
}

MonotonicityStats monotonicity_oracle(int scenes, int rays_per_scene, int grid, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  const SceneConfig cfg;
  MonotonicityStats s;
  for (int k = 0; k < scenes; ++k) {
    const PreparedScene scene(random_scene(rng, 20));
    for (int r = 0; r < rays_per_scene; ++r) {
      const Vec3 o = 4.0 * random_unit(rng);
      const Vec3 d = (Vec3(u(rng), u(rng), u(rng)) - o).normalized();
      const RaySample sample = gather_ray(scene, o, d, cfg);
      double prev = -1.0;
      for (int i = 0; i < grid; ++i) {
        const double t = 8.0 * i / (grid - 1);
        const double v = ray_opacity(scene, sample, o, d, t);
        if (v < prev - 1e-9) ++s.violations;
        s.max_drop = std::max(s.max_drop, prev - v);
        prev = std::max(prev, v);
      }
      ++s.rays;
    }
  }
  return s;
}

FieldEquivalence field_equivalence(int points, int views, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.2, 1.2);
  const std::vector<Gaussian3D> gaussians = random_scene(rng, 30);
  const PreparedScene scene(gaussians);
  const std::vector<CameraView> rig = orbit_rig(views, 4.0, Vec3::Zero(), 64, 64, 50.0);
  std::vector<Vec3> pts;
  for (int i = 0; i < points; ++i) pts.emplace_back(u(rng), u(rng), u(rng));

  FieldEquivalence out;
  out.points = pts.size();
  const SceneConfig def;
  const FieldResult tiled = field_opacity(scene, rig, pts, def);
  const FieldResult naive = naive_field(scene, rig, pts, def);
  for (size_t i = 0; i < pts.size(); ++i) {
    if (std::memcmp(&tiled.opacity[i], &naive.opacity[i], sizeof(double)) != 0 ||
        tiled.visited[i] != naive.visited[i]) {
      ++out.bitwise_mismatches;
    }
  }
  SceneConfig none = def;
  none.contribution_cutoff = 0.0;
  none.transmittance_floor = 0.0;
  const FieldResult open = field_opacity(scene, rig, pts, none);
  const std::vector<double> ref = reference_field(gaussians, rig, pts, none);
  for (size_t i = 0; i < pts.size(); ++i) {
    out.max_diff_no_cutoff = std::max(out.max_diff_no_cutoff, std::abs(open.opacity[i] - ref[i]));
    out.max_diff_default = std::max(out.max_diff_default, std::abs(tiled.opacity[i] - ref[i]));
  }
  return out;
}

DelaunaySummary delaunay_oracle(int instances, int max_points, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  DelaunaySummary s;
  for (int k = 0; k < instances; ++k) {
    const int n = std::max(8, max_points - (k * max_points) / (2 * std::max(instances, 1)));
    std::vector<Vec3> pts;
    for (int i = 0; i < n; ++i) pts.emplace_back(u(rng), u(rng), u(rng));
    const auto tets = delaunay(pts);
    const DelaunayAudit a = audit_delaunay(pts, tets);
    s.audit.tets += a.tets;
    s.audit.negative_or_flat += a.negative_or_flat;
    s.audit.sphere_violations += a.sphere_violations;
    s.audit.exact_tests += a.exact_tests;
    s.audit.unused_points += a.unused_points;
    ++s.instances;
  }
  // Unit cube corners plus interior points: the hull is the cube.
  std::vector<Vec3> cube;
  for (int c = 0; c < 8; ++c) cube.emplace_back(c & 1, (c >> 1) & 1, (c >> 2) & 1);
  std::uniform_real_distribution<double> in(0.05, 0.95);
  for (int i = 0; i < 40; ++i) cube.emplace_back(in(rng), in(rng), in(rng));
  double volume = 0.0;
  for (const Tet& t : delaunay(cube)) volume += tet_volume(cube[t[0]], cube[t[1]], cube[t[2]], cube[t[3]]);
  s.cube_volume_error = std::abs(volume - 1.0);
  return s;
}

DensifySummary densify_oracle(uint64_t seed) {
  DensifySummary out;
  SphereFixture fx = textured_sphere_fixture(seed, 4, 32, 60);
  TrainConfig cfg;
  DensifyStats stats(fx.initial.size());
  for (const CameraView& v : fx.views) {
    const ViewGradients vg = view_backward(fx.initial, v, *v.image, cfg);
    accumulate_densify(stats, vg.pixel_gradients);
  }
  out.gaussians = stats.size();
  double ratio_sum = 0.0;
  size_t ratio_n = 0;
  for (size_t i = 0; i < stats.size(); ++i) {
    if (stats.M[i] < stats.classic[i]) ++out.violations;
    if (stats.classic[i] > 0.0) {
      ratio_sum += stats.M[i] / stats.classic[i];
      ++ratio_n;
    }
  }
  out.mean_ratio = ratio_n ? ratio_sum / static_cast<double>(ratio_n) : 0.0;

  const Vec2 g(0.75, -1.0);
  DensifyStats cancel(1);
  accumulate_densify(cancel, {{g, Vec2(-g)}});
  out.cancellation_classic = cancel.classic[0];
  out.cancellation_M = cancel.M[0];
  out.cancellation_expected = 2.0 * g.norm();
  return out;
}

namespace {

template <typename F>
SuiteResult timed(const std::string& name, F&& body) {
  SuiteResult r;
  r.name = name;
  const auto start = std::chrono::steady_clock::now();
  try {
    body(r);
  } catch (const std::exception& e) {
    r.passed = false;
    r.detail = std::string("exception: ") + e.what();
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(3);
  os << std::scientific << v;
  return os.str();
}

}  // namespace

std::vector<SuiteResult> run_self_check(bool quick, std::ostream* progress) {
  const int scale = quick ? 10 : 1;
  std::vector<SuiteResult> results;
  auto push = [&](SuiteResult r) {
    if (progress) {
      *progress << (r.passed ? "PASS " : "FAIL ") << r.name << " (" << std::fixed;
      progress->precision(2);
      *progress << r.seconds << " s) " << r.detail << '\n';
    }
    results.push_back(std::move(r));
  };

  push(timed("intersect", [&](SuiteResult& r) {
    const IntersectionStats s = intersection_oracle(1000 / scale, 101);
    r.passed = s.max_t_error <= 1e-3 && s.max_peak_error <= 1e-6 && s.max_dense_excess <= 1e-12;
    r.detail = "max |dt| " + fmt(s.max_t_error) + ", max |dpeak| " + fmt(s.max_peak_error);
  }));
  push(timed("plane-normal", [&](SuiteResult& r) {
    const double worst = plane_normal_oracle(1000 / scale, 202);
    r.passed = worst < 1e-6;
    r.detail = "max |n.(RSu)| " + fmt(worst);
  }));
  push(timed("monotonic", [&](SuiteResult& r) {
    const MonotonicityStats s = monotonicity_oracle(100 / scale, 100 / scale, 512, 303);
    r.passed = s.violations == 0;
    r.detail = std::to_string(s.rays) + " rays, " + std::to_string(s.violations) + " violations";
  }));
  push(timed("field", [&](SuiteResult& r) {
    const FieldEquivalence s = field_equivalence(10000 / scale, 4, 404);
    r.passed = s.bitwise_mismatches == 0 && s.max_diff_no_cutoff <= 2e-3;
    r.detail = std::to_string(s.bitwise_mismatches) + " mismatches, reference max diff " +
               fmt(s.max_diff_no_cutoff);
  }));
  push(timed("delaunay", [&](SuiteResult& r) {
    const DelaunaySummary s = delaunay_oracle(20 / scale, quick ? 500 : 2000, 505);
    r.passed = s.audit.sphere_violations == 0 && s.audit.negative_or_flat == 0 &&
               s.audit.unused_points == 0 && s.cube_volume_error <= 1e-9;
    r.detail = std::to_string(s.audit.tets) + " tets, " + std::to_string(s.audit.sphere_violations) +
               " violations, cube volume error " + fmt(s.cube_volume_error);
  }));
  push(timed("gradients", [&](SuiteResult& r) {
    GradCheck all;
    const int n = 50 / scale;
    for (int i = 0; i < n; ++i) {
      all.merge(check_ray_chain(1000 + i));
      all.merge(check_photometric(2000 + i));
      all.merge(check_distortion(3000 + i));
      all.merge(check_normal(4000 + i, false));
      all.merge(check_normal(5000 + i, true));
    }
    r.passed = all.ok();
    r.detail = std::to_string(all.compared) + " components, " + std::to_string(all.failures) +
               " failures, worst " + fmt(all.max_rel_error) + (all.failures ? " (" + all.worst + ")" : "");
  }));
  push(timed("densify", [&](SuiteResult& r) {
    const DensifySummary s = densify_oracle(606);
    r.passed = s.violations == 0 && s.cancellation_classic == 0.0 &&
               s.cancellation_M == s.cancellation_expected;
    r.detail = std::to_string(s.violations) + " violations over " + std::to_string(s.gaussians) +
               " Gaussians, mean M/classic " + fmt(s.mean_ratio);
  }));
  return results;
}

}  // namespace gof::oracle
