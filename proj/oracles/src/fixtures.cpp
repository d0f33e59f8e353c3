// SPDX-License-Identifier: Apache-2.0
#include "gof/oracles/fixtures.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace gof::oracle {

CameraView look_at(const Vec3& eye, const Vec3& target, const Vec3& up, int width, int height,
                   double fov_y_degrees, int id) {
  const Vec3 z = (target - eye).normalized();
  Vec3 x = z.cross(up);
  if (x.norm() < 1e-9) x = z.cross(std::abs(z.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY());
  x.normalize();
  const Vec3 y = z.cross(x);
  CameraView v;
  v.id = id;
  v.width = width;
  v.height = height;
  v.fy = 0.5 * height / std::tan(0.5 * fov_y_degrees * std::numbers::pi / 180.0);
  v.fx = v.fy;
  v.cx = 0.5 * width;
  v.cy = 0.5 * height;
  v.rotation.row(0) = x.transpose();
  v.rotation.row(1) = y.transpose();
  v.rotation.row(2) = z.transpose();
  v.translation = -v.rotation * eye;
  return v;
}

std::vector<CameraView> orbit_rig(int count, double radius, const Vec3& target, int width,
                                  int height, double fov_y_degrees) {
  std::vector<Vec3> dirs;
  if (count == 26) {
    for (int i = -1; i <= 1; ++i) {
      for (int j = -1; j <= 1; ++j) {
        for (int k = -1; k <= 1; ++k) {
          if (i || j || k) dirs.push_back(Vec3(i, j, k).normalized());
        }
      }
    }
  } else {
    const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
    for (int i = 0; i < count; ++i) {
      const double y = 1.0 - 2.0 * (i + 0.5) / count;
      const double r = std::sqrt(std::max(0.0, 1.0 - y * y));
      dirs.emplace_back(r * std::cos(golden * i), y, r * std::sin(golden * i));
    }
  }
  std::vector<CameraView> views;
  for (size_t i = 0; i < dirs.size(); ++i) {
    const Vec3 up = std::abs(dirs[i].z()) > 0.99 ? Vec3::UnitY() : Vec3::UnitZ();
    views.push_back(look_at(target + radius * dirs[i], target, up, width, height, fov_y_degrees,
                            static_cast<int>(i)));
  }
  return views;
}

Gaussian3D unit_gaussian(double opacity) {
  Gaussian3D g;
  g.opacity = opacity;
  return g;
}

std::vector<CameraView> single_gaussian_rig() {
  return orbit_rig(26, 10.0, Vec3::Zero(), 64, 64, 40.0);
}

Vec3 random_unit(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Vec3 v;
  do {
    v = Vec3(n(rng), n(rng), n(rng));
  } while (v.norm() < 1e-6);
  return v.normalized();
}

Gaussian3D random_gaussian(std::mt19937_64& rng, double extent, double min_scale, double max_scale) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_real_distribution<double> logs(std::log(min_scale), std::log(max_scale));
  std::uniform_real_distribution<double> op(0.05, 0.95);
  std::normal_distribution<double> n(0.0, 1.0);
  Gaussian3D g;
  g.center = extent * Vec3(u(rng), u(rng), u(rng));
  g.scale = Vec3(std::exp(logs(rng)), std::exp(logs(rng)), std::exp(logs(rng)));
  Vec4 q(n(rng), n(rng), n(rng), n(rng));
  g.rotation = q.normalized();
  g.opacity = op(rng);
  for (auto& c : g.sh) c = 0.1 * Vec3(n(rng), n(rng), n(rng));
  g.sh[0] = Vec3(u(rng), u(rng), u(rng));
  return g;
}

std::vector<Gaussian3D> random_scene(std::mt19937_64& rng, int count, double extent,
                                     double min_scale, double max_scale) {
  std::vector<Gaussian3D> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i) out.push_back(random_gaussian(rng, extent, min_scale, max_scale));
  return out;
}

Vec3 sphere_texture(const Vec3& p) {
  const double lon = std::atan2(p.y(), p.x());
  const double lat = std::asin(std::clamp(p.z(), -1.0, 1.0));
  const double checker = std::sin(4.0 * lon) * std::sin(4.0 * lat);
  return Vec3(0.55 + 0.35 * checker, 0.45 + 0.3 * std::sin(3.0 * lat + 1.0),
              0.5 + 0.3 * std::cos(2.0 * lon + 2.0 * lat));
}

Image render_textured_sphere(const CameraView& view) {
  Image img(view.width, view.height, 3);
  const Vec3 o = view.center();
  for (int py = 0; py < view.height; ++py) {
    for (int px = 0; px < view.width; ++px) {
      const Vec3 d = view.pixel_direction(px, py);
      const double a = d.squaredNorm();
      const double b = o.dot(d);
      const double c = o.squaredNorm() - 1.0;
      const double disc = b * b - a * c;
      if (disc < 0.0) continue;
      const double t = (-b - std::sqrt(disc)) / a;
      if (t <= 0.0) continue;
      const Vec3 col = sphere_texture((o + t * d).normalized());
      for (int ch = 0; ch < 3; ++ch) img.at(px, py, ch) = col[ch];
    }
  }
  return img;
}

SphereFixture textured_sphere_fixture(uint64_t seed, int views, int size, int gaussians) {
  SphereFixture f;
  f.views = orbit_rig(views, 3.5, Vec3::Zero(), size, size, 40.0);
  for (auto& v : f.views) v.image = render_textured_sphere(v);

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> jitter(0.0, 0.05);
  std::vector<Vec3> pts;
  for (int i = 0; i < gaussians; ++i) pts.push_back(random_unit(rng) * (1.0 + jitter(rng)));
  for (size_t i = 0; i < pts.size(); ++i) {
    double nn = std::numeric_limits<double>::infinity();
    for (size_t j = 0; j < pts.size(); ++j) {
      if (i != j) nn = std::min(nn, (pts[i] - pts[j]).norm());
    }
    Gaussian3D g;
    g.center = pts[i];
    g.scale = Vec3::Constant(std::max(nn, 1e-3));
    g.opacity = 0.1;
    g.sh[0] = (sphere_texture(pts[i].normalized()) - Vec3::Constant(0.5)) / kShC0;
    f.initial.push_back(g);
  }
  return f;
}

}  // namespace gof::oracle
