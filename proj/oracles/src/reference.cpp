// SPDX-License-Identifier: Apache-2.0
#include "gof/oracles/reference.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

namespace gof::oracle {

namespace {

// Rotation of v by the unit quaternion q via q v q*.
Vec3 rotate(const Vec4& q_raw, const Vec3& v) {
  const Vec4 q = q_raw.normalized();
  const Eigen::Quaterniond quat(q[0], q[1], q[2], q[3]);
  return quat * v;
}

Mat3 inverse_covariance(const Gaussian3D& g) {
  return covariance(g).inverse();
}

}  // namespace

Mat3 covariance(const Gaussian3D& g) {
  Mat3 M;
  for (int i = 0; i < 3; ++i) M.col(i) = rotate(g.rotation, Vec3::Unit(i)) * g.scale[i];
  return M * M.transpose();
}

double response(const Gaussian3D& g, const Vec3& x) {
  const Vec3 d = x - g.center;
  return std::exp(-0.5 * d.dot(inverse_covariance(g) * d));
}

DenseMax dense_argmax(const Gaussian3D& g, const Vec3& o, const Vec3& d, double t0, double t1,
                      double spacing) {
  const Mat3 P = inverse_covariance(g);
  DenseMax best{t0, -1.0};
  const long steps = static_cast<long>(std::ceil((t1 - t0) / spacing));
  for (long i = 0; i <= steps; ++i) {
    const double t = t0 + spacing * static_cast<double>(i);
    const Vec3 x = o + t * d - g.center;
    const double v = std::exp(-0.5 * x.dot(P * x));
    if (v > best.value) best = {t, v};
  }
  return best;
}

double covariance_t_star(const Gaussian3D& g, const Vec3& o, const Vec3& d) {
  const Mat3 P = inverse_covariance(g);
  return d.dot(P * (g.center - o)) / d.dot(P * d);
}

std::vector<ReferenceSample> composite_all(std::span<const Gaussian3D> scene, const Vec3& o,
                                           const Vec3& d, double near_clip) {
  std::vector<ReferenceSample> out;
  for (size_t i = 0; i < scene.size(); ++i) {
    const double t = covariance_t_star(scene[i], o, d);
    if (!(t >= near_clip)) continue;
    const double a = std::min(scene[i].opacity * response(scene[i], o + t * d), 0.999);
    if (!(a > 0.0)) continue;
    out.push_back({static_cast<int>(i), t, a, 0.0});
  }
  std::sort(out.begin(), out.end(), [](const ReferenceSample& a, const ReferenceSample& b) {
    return a.t_star < b.t_star || (a.t_star == b.t_star && a.id < b.id);
  });
  double T = 1.0;
  for (auto& s : out) {
    s.weight = s.alpha * T;
    T *= 1.0 - s.alpha;
  }
  return out;
}

double reference_ray_opacity(std::span<const Gaussian3D> scene, const Vec3& o, const Vec3& d,
                             double t, double near_clip) {
  double T = 1.0;
  double opacity = 0.0;
  for (const ReferenceSample& s : composite_all(scene, o, d, near_clip)) {
    const Gaussian3D& g = scene[s.id];
    const double a = t <= s.t_star ? std::min(g.opacity * response(g, o + t * d), 0.999) : s.alpha;
    opacity += a * T;
    T *= 1.0 - a;
  }
  return opacity;
}

std::vector<double> reference_field(std::span<const Gaussian3D> scene,
                                    std::span<const CameraView> views, std::span<const Vec3> points,
                                    const SceneConfig& config) {
  std::vector<double> out(points.size(), 1.0);
  for (size_t i = 0; i < points.size(); ++i) {
    for (const CameraView& v : views) {
      if (!project_point(v, points[i], config).visible) continue;
      const Vec3 o = v.center();
      const double t = (points[i] - o).norm();
      const Vec3 d = (points[i] - o) / t;
      out[i] = std::min(out[i], reference_ray_opacity(scene, o, d, t, config.near_clip));
    }
  }
  return out;
}

FieldResult naive_field(const PreparedScene& scene, std::span<const CameraView> views,
                        std::span<const Vec3> points, const SceneConfig& config) {
  std::vector<int> all(scene.size());
  for (size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
  FieldResult out;
  out.opacity.assign(points.size(), 1.0);
  out.visited.assign(points.size(), 0);
  for (size_t i = 0; i < points.size(); ++i) {
    for (const CameraView& v : views) {
      if (!project_point(v, points[i], config).visible) continue;
      out.opacity[i] = std::min(out.opacity[i], point_opacity(scene, v, points[i], config, all));
      out.visited[i] = 1;
    }
  }
  return out;
}

}  // namespace gof::oracle
