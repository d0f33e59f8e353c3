// SPDX-License-Identifier: Apache-2.0
#include "gof/opacity_field.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <numeric>

#include <tbb/parallel_for.h>

#include "gof/errors.hpp"

namespace gof {

double partial_opacity(const RayLocal& ray, const Intersection& hit, double t) {
  return t <= hit.t_star ? gaussian_1d(ray, t) : hit.peak;
}

double partial_opacity(const Gaussian3D& g, const Vec3& origin, const Vec3& direction, double t) {
  const RayLocal local = to_local(g, origin, direction);
  return partial_opacity(local, intersect(local), t);
}

double ray_opacity(const PreparedScene& scene, const RaySample& gathered, const Vec3& origin,
                   const Vec3& direction, double t) {
  double T = 1.0;
  double opacity = 0.0;
  for (const RayEntry& e : gathered.entries) {
    double a = e.alpha;
    if (t <= e.t_star) {
      const RayLocal local = to_local(scene.frame(e.id), origin, direction);
      a = std::min(scene.gaussian(e.id).opacity * gaussian_1d(local, t), kMaxSampleAlpha);
    }
    opacity += a * T;
    T *= 1.0 - a;
  }
  return opacity;
}

double ray_opacity(const PreparedScene& scene, const Vec3& origin, const Vec3& direction, double t,
                   const SceneConfig& config) {
  return ray_opacity(scene, gather_ray(scene, origin, direction, config), origin, direction, t);
}

PointProjection project_point(const CameraView& view, const Vec3& point, const SceneConfig& config) {
  PointProjection p;
  const Vec3 pc = view.to_camera(point);
  if (!(pc.z() >= config.near_clip)) return p;
  const double u = view.fx * pc.x() / pc.z() + view.cx;
  const double v = view.fy * pc.y() / pc.z() + view.cy;
  if (!(u >= 0.0 && u < view.width && v >= 0.0 && v < view.height)) return p;
  p.px = std::min(static_cast<int>(u), view.width - 1);
  p.py = std::min(static_cast<int>(v), view.height - 1);
  p.visible = true;
  return p;
}

double point_opacity(const PreparedScene& scene, const CameraView& view, const Vec3& point,
                     const SceneConfig& config, std::span<const int> candidates) {
  const Vec3 origin = view.center();
  const Vec3 offset = point - origin;
  const double t = offset.norm();
  const Vec3 dir = offset / t;
  const RaySample sample = gather_ray(scene, origin, dir, config, candidates);
  return ray_opacity(scene, sample, origin, dir, t);
}

ViewOpacity batch_evaluate(const PreparedScene& scene, const CameraView& view,
                           std::span<const Vec3> points, const SceneConfig& config) {
  ViewOpacity out;
  out.opacity.assign(points.size(), 1.0);
  out.visited.assign(points.size(), 0);

  // Key every visible point by its pixel and sort so each pixel's points are
  // contiguous.
  std::vector<std::pair<int64_t, int>> keyed;
  keyed.reserve(points.size());
  for (size_t i = 0; i < points.size(); ++i) {
    const PointProjection p = project_point(view, points[i], config);
    if (!p.visible) continue;
    keyed.emplace_back(static_cast<int64_t>(p.py) * view.width + p.px, static_cast<int>(i));
  }
  if (keyed.empty()) return out;
  std::sort(keyed.begin(), keyed.end());

  std::vector<size_t> group_begin;
  for (size_t i = 0; i < keyed.size(); ++i) {
    if (i == 0 || keyed[i].first != keyed[i - 1].first) group_begin.push_back(i);
  }
  group_begin.push_back(keyed.size());

  const TileBins bins(scene, view, config);
  tbb::parallel_for(tbb::blocked_range<size_t>(0, group_begin.size() - 1),
                    [&](const tbb::blocked_range<size_t>& range) {
    std::vector<int> candidates;
    for (size_t gi = range.begin(); gi != range.end(); ++gi) {
      const int64_t pixel = keyed[group_begin[gi]].first;
      const int px = static_cast<int>(pixel % view.width);
      const int py = static_cast<int>(pixel / view.width);
      bins.pixel_candidates(px, py, candidates);
      for (size_t k = group_begin[gi]; k < group_begin[gi + 1]; ++k) {
        const int idx = keyed[k].second;
        out.opacity[idx] = point_opacity(scene, view, points[idx], config, candidates);
        out.visited[idx] = 1;
      }
    }
  });
  return out;
}

FieldResult field_opacity(const PreparedScene& scene, std::span<const CameraView> views,
                          std::span<const Vec3> points, const SceneConfig& config) {
  if (views.empty()) throw InputError("field_opacity: at least one view is required");
  FieldResult out;
  out.opacity.assign(points.size(), 1.0);
  out.visited.assign(points.size(), 0);
  for (const CameraView& view : views) {
    const ViewOpacity v = batch_evaluate(scene, view, points, config);
    for (size_t i = 0; i < points.size(); ++i) {
      if (!v.visited[i]) continue;
      out.opacity[i] = std::min(out.opacity[i], v.opacity[i]);
      out.visited[i] = 1;
    }
  }
  return out;
}

void save_field_ply(const std::string& path, std::span<const Vec3> points,
                    const FieldResult& field) {
  static_assert(std::endian::native == std::endian::little);
  std::ofstream os(path, std::ios::binary);
  if (!os) throw InputError("cannot open '" + path + "' for writing");
  os << "ply\nformat binary_little_endian 1.0\n"
     << "element vertex " << points.size() << "\n"
     << "property float x\nproperty float y\nproperty float z\n"
     << "property float opacity\nproperty uchar visited\nend_header\n";
  for (size_t i = 0; i < points.size(); ++i) {
    const float rec[4] = {static_cast<float>(points[i].x()), static_cast<float>(points[i].y()),
                          static_cast<float>(points[i].z()), static_cast<float>(field.opacity[i])};
    os.write(reinterpret_cast<const char*>(rec), sizeof(rec));
    const unsigned char visited = field.visited[i];
    os.put(static_cast<char>(visited));
  }
  if (!os) throw InputError("failed writing '" + path + "'");
}

}  // namespace gof
