// SPDX-License-Identifier: Apache-2.0
#include "gof/sh.hpp"

#include <algorithm>

namespace gof {

namespace {

constexpr double kC1 = 0.4886025119029199;
constexpr double kC2[] = {1.0925484305920792, -1.0925484305920792, 0.31539156525252005,
                          -1.0925484305920792, 0.5462742152960396};
constexpr double kC3[] = {-0.5900435899266435, 2.890611442640554, -0.4570457994644658,
                          0.3731763325901154,  -0.4570457994644658, 1.445305721320277,
                          -0.5900435899266435};

}  // namespace

std::array<double, kShCoefficients> sh_basis(const Vec3& d) {
  const double x = d.x(), y = d.y(), z = d.z();
  const double xx = x * x, yy = y * y, zz = z * z;
  return {kShC0,
          -kC1 * y,
          kC1 * z,
          -kC1 * x,
          kC2[0] * x * y,
          kC2[1] * y * z,
          kC2[2] * (2.0 * zz - xx - yy),
          kC2[3] * x * z,
          kC2[4] * (xx - yy),
          kC3[0] * y * (3.0 * xx - yy),
          kC3[1] * x * y * z,
          kC3[2] * y * (4.0 * zz - xx - yy),
          kC3[3] * z * (2.0 * zz - 3.0 * xx - 3.0 * yy),
          kC3[4] * x * (4.0 * zz - xx - yy),
          kC3[5] * z * (xx - yy),
          kC3[6] * x * (xx - 3.0 * yy)};
}

void sh_basis_with_gradient(const Vec3& d, std::array<double, kShCoefficients>& values,
                            std::array<Vec3, kShCoefficients>& grads) {
  values = sh_basis(d);
  const double x = d.x(), y = d.y(), z = d.z();
  const double xx = x * x, yy = y * y, zz = z * z;
  grads[0] = Vec3::Zero();
  grads[1] = Vec3(0.0, -kC1, 0.0);
  grads[2] = Vec3(0.0, 0.0, kC1);
  grads[3] = Vec3(-kC1, 0.0, 0.0);
  grads[4] = kC2[0] * Vec3(y, x, 0.0);
  grads[5] = kC2[1] * Vec3(0.0, z, y);
  grads[6] = kC2[2] * Vec3(-2.0 * x, -2.0 * y, 4.0 * z);
  grads[7] = kC2[3] * Vec3(z, 0.0, x);
  grads[8] = kC2[4] * Vec3(2.0 * x, -2.0 * y, 0.0);
  grads[9] = kC3[0] * Vec3(6.0 * x * y, 3.0 * xx - 3.0 * yy, 0.0);
  grads[10] = kC3[1] * Vec3(y * z, x * z, x * y);
  grads[11] = kC3[2] * Vec3(-2.0 * x * y, 4.0 * zz - xx - 3.0 * yy, 8.0 * y * z);
  grads[12] = kC3[3] * Vec3(-6.0 * x * z, -6.0 * y * z, 6.0 * zz - 3.0 * xx - 3.0 * yy);
  grads[13] = kC3[4] * Vec3(4.0 * zz - 3.0 * xx - yy, -2.0 * x * y, 8.0 * x * z);
  grads[14] = kC3[5] * Vec3(2.0 * x * z, -2.0 * y * z, xx - yy);
  grads[15] = kC3[6] * Vec3(3.0 * xx - 3.0 * yy, -6.0 * x * y, 0.0);
}

Vec3 sh_color(const Gaussian3D& g, const Vec3& view_dir, int degree, std::array<bool, 3>* clamped) {
  const int count = sh_coefficient_count(std::clamp(degree, 0, 3));
  const double len = view_dir.norm();
  const Vec3 d = len > 0.0 ? Vec3(view_dir / len) : Vec3::UnitZ();
  const auto basis = sh_basis(d);
  Vec3 c = Vec3::Constant(0.5);
  for (int k = 0; k < count; ++k) c += basis[k] * g.sh[k];
  for (int i = 0; i < 3; ++i) {
    const bool out = c[i] < 0.0 || c[i] > 1.0;
    if (clamped) (*clamped)[i] = out;
    c[i] = std::clamp(c[i], 0.0, 1.0);
  }
  return c;
}

void sh_color_backward(const Gaussian3D& g, const Vec3& camera_center, int degree,
                       const Vec3& grad_color, std::array<Vec3, kShCoefficients>& grad_sh,
                       Vec3& grad_center) {
  const Vec3 view = g.center - camera_center;
  std::array<bool, 3> clamped{};
  sh_color(g, view, degree, &clamped);
  Vec3 gc = grad_color;
  for (int i = 0; i < 3; ++i) {
    if (clamped[i]) gc[i] = 0.0;
  }
  if (gc.squaredNorm() == 0.0) return;

  const int count = sh_coefficient_count(std::clamp(degree, 0, 3));
  const double len = view.norm();
  if (!(len > 0.0)) return;
  const Vec3 d = view / len;
  std::array<double, kShCoefficients> basis{};
  std::array<Vec3, kShCoefficients> dbasis{};
  sh_basis_with_gradient(d, basis, dbasis);
  Vec3 g_dir = Vec3::Zero();
  for (int k = 0; k < count; ++k) {
    grad_sh[k] += basis[k] * gc;
    g_dir += g.sh[k].dot(gc) * dbasis[k];
  }
  grad_center += (g_dir - d * d.dot(g_dir)) / len;
}

}  // namespace gof
