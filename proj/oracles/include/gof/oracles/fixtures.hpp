// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "gof/types.hpp"

namespace gof::oracle {

/// Camera at `eye` looking at `target`, image y pointing along -up.
CameraView look_at(const Vec3& eye, const Vec3& target, const Vec3& up, int width, int height,
                   double fov_y_degrees, int id = 0);

/// Cameras on a sphere of `radius` around `target`. Count 26 uses the
/// face/edge/corner directions of a cube; other counts use a Fibonacci
/// spiral.
std::vector<CameraView> orbit_rig(int count, double radius, const Vec3& target, int width,
                                  int height, double fov_y_degrees);

/// Isotropic unit-scale Gaussian at the origin with identity rotation.
Gaussian3D unit_gaussian(double opacity);

/// 26 cube-direction views at radius 10 around the origin, 64x64, 40 deg.
std::vector<CameraView> single_gaussian_rig();

/// Gaussian with center in [-extent, extent]^3, log-uniform scales in
/// [min_scale, max_scale], uniform random rotation, opacity in [0.05, 0.95]
/// and small random SH.
Gaussian3D random_gaussian(std::mt19937_64& rng, double extent = 1.0, double min_scale = 0.05,
                           double max_scale = 0.5);

std::vector<Gaussian3D> random_scene(std::mt19937_64& rng, int count, double extent = 1.0,
                                     double min_scale = 0.05, double max_scale = 0.5);

Vec3 random_unit(std::mt19937_64& rng);

/// Procedural albedo on the unit sphere.
Vec3 sphere_texture(const Vec3& unit_point);

/// Analytic render of the textured unit sphere on black.
Image render_textured_sphere(const CameraView& view);

struct SphereFixture {
  std::vector<CameraView> views;  // with reference images
  std::vector<Gaussian3D> initial;
};

/// 16 views at 64x64 around the textured unit sphere and 200 low-opacity
/// Gaussians scattered near its surface, colored like a point cloud with the
/// texture at their radial projection.
SphereFixture textured_sphere_fixture(uint64_t seed = 7, int views = 16, int size = 64,
                                      int gaussians = 200);

}  // namespace gof::oracle
