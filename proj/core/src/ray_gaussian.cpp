// SPDX-License-Identifier: Apache-2.0
#include "gof/ray_gaussian.hpp"

#include <atomic>
#include <cmath>

namespace gof {

namespace fault {
namespace {
std::atomic<Fault> g_fault{Fault::kNone};
}
void inject(Fault f) { g_fault.store(f, std::memory_order_relaxed); }
Fault active() { return g_fault.load(std::memory_order_relaxed); }
}  // namespace fault

GaussianFrame make_frame(const Gaussian3D& g) {
  GaussianFrame f;
  f.center = g.center;
  f.world_to_local = quaternion_to_matrix(g.rotation).transpose();
  for (int i = 0; i < 3; ++i) {
    double s = g.scale[i];
    if (!(s >= kMinScale)) {
      s = kMinScale;
      f.scale_clamped = true;
    }
    f.inv_scale[i] = 1.0 / s;
  }
  return f;
}

RayLocal to_local(const GaussianFrame& frame, const Vec3& origin, const Vec3& direction) {
  RayLocal r;
  r.origin = (frame.world_to_local * (origin - frame.center)).cwiseProduct(frame.inv_scale);
  r.direction = (frame.world_to_local * direction).cwiseProduct(frame.inv_scale);
  r.a = r.direction.squaredNorm();
  r.b = r.origin.dot(r.direction);
  r.scale_clamped = frame.scale_clamped;
  return r;
}

RayLocal to_local(const Gaussian3D& g, const Vec3& origin, const Vec3& direction) {
  return to_local(make_frame(g), origin, direction);
}

Intersection intersect(const RayLocal& ray) {
  Intersection hit;
  hit.t_star = -ray.b / ray.a;
  if (fault::active() == fault::Fault::kFlipTStarSign) hit.t_star = -hit.t_star;
  hit.peak = gaussian_1d(ray, hit.t_star);
  return hit;
}

Vec3 plane_normal(const GaussianFrame& frame, const RayLocal& ray, const Vec3& world_direction) {
  // -R^T S^-1 r_g where R is world-to-local: the local plane normal (-r_g) with
  // the scale normalization undone, rotated back to world.
  const Vec3 m = -(frame.world_to_local.transpose() * ray.direction.cwiseProduct(frame.inv_scale));
  Vec3 n = m.normalized();
  if (n.dot(world_direction) > 0.0) n = -n;
  return n;
}

Vec3 plane_normal(const Gaussian3D& g, const RayLocal& ray, const Vec3& world_direction) {
  return plane_normal(make_frame(g), ray, world_direction);
}

double contribution(const Gaussian3D& g, const Vec3& origin, const Vec3& direction,
                    double near_clip) {
  const Intersection hit = intersect(to_local(g, origin, direction));
  return hit.t_star >= near_clip ? hit.peak : 0.0;
}

Vec4 quaternion_matrix_backward(const Vec4& q_raw, const Mat3& G) {
  const double norm = q_raw.norm();
  const Vec4 q = q_raw / norm;
  const double r = q[0], x = q[1], y = q[2], z = q[3];
  Vec4 gu;
  gu[0] = 2.0 * (-z * G(0, 1) + y * G(0, 2) + z * G(1, 0) - x * G(1, 2) - y * G(2, 0) +
                 x * G(2, 1));
  gu[1] = 2.0 * (y * G(0, 1) + z * G(0, 2) + y * G(1, 0) - 2.0 * x * G(1, 1) - r * G(1, 2) +
                 z * G(2, 0) + r * G(2, 1) - 2.0 * x * G(2, 2));
  gu[2] = 2.0 * (-2.0 * y * G(0, 0) + x * G(0, 1) + r * G(0, 2) + x * G(1, 0) + z * G(1, 2) -
                 r * G(2, 0) + z * G(2, 1) - 2.0 * y * G(2, 2));
  gu[3] = 2.0 * (-2.0 * z * G(0, 0) - r * G(0, 1) + x * G(0, 2) + r * G(1, 0) -
                 2.0 * z * G(1, 1) + y * G(1, 2) + x * G(2, 0) + y * G(2, 1));
  return (gu - q * q.dot(gu)) / norm;
}

void backprop_ray_gaussian(const Gaussian3D& g, const Vec3& origin, const Vec3& direction,
                           double grad_t_star, double grad_peak, const Vec3& grad_normal,
                           GeometryGrad& out) {
  const GaussianFrame frame = make_frame(g);
  const Mat3& W = frame.world_to_local;
  const Vec3& inv_s = frame.inv_scale;
  const Vec3 d = origin - g.center;
  const Vec3 u = W * d;
  const Vec3 v = W * direction;
  const Vec3 og = u.cwiseProduct(inv_s);
  const Vec3 rg = v.cwiseProduct(inv_s);
  const double A = rg.squaredNorm();
  const double B = og.dot(rg);
  const double t = -B / A;
  const Vec3 xs = og + t * rg;
  const double peak = std::exp(-0.5 * xs.squaredNorm());

  Vec3 g_og = Vec3::Zero();
  Vec3 g_rg = Vec3::Zero();
  if (grad_peak != 0.0) {
    g_og += grad_peak * (-peak) * xs;
    g_rg += grad_peak * (-peak * t) * xs;
  }
  if (grad_t_star != 0.0) {
    g_og += grad_t_star * (-rg / A);
    g_rg += grad_t_star * (-(og + 2.0 * t * rg) / A);
  }

  Mat3 g_W = Mat3::Zero();
  Vec3 g_log_s = Vec3::Zero();

  // o_g = inv_s * (W (o - p)), r_g = inv_s * (W r)
  const Vec3 g_u = g_og.cwiseProduct(inv_s);
  const Vec3 g_v = g_rg.cwiseProduct(inv_s);
  g_W += g_u * d.transpose() + g_v * direction.transpose();
  out.center += -(W.transpose() * g_u);
  Vec3 g_log_local = -(g_og.cwiseProduct(og) + g_rg.cwiseProduct(rg));

  if (grad_normal.squaredNorm() > 0.0) {
    // m = -W^T D W r with D = diag(inv_s^2); n = sign * m / |m|
    const Vec3 Dv = v.cwiseProduct(inv_s).cwiseProduct(inv_s);
    const Vec3 m = -(W.transpose() * Dv);
    const double m_norm = m.norm();
    const Vec3 m_hat = m / m_norm;
    const double sign = m_hat.dot(direction) > 0.0 ? -1.0 : 1.0;
    const Vec3 g_m = sign * (grad_normal - m_hat * m_hat.dot(grad_normal)) / m_norm;
    const Vec3 DWg = (W * g_m).cwiseProduct(inv_s).cwiseProduct(inv_s);
    g_W += -(Dv * g_m.transpose()) - DWg * direction.transpose();
    const Vec3 Wg = W * g_m;
    for (int i = 0; i < 3; ++i) {
      g_log_local[i] += 2.0 * inv_s[i] * inv_s[i] * v[i] * Wg[i];
    }
  }

  for (int i = 0; i < 3; ++i) {
    if (!(g.scale[i] >= kMinScale)) g_log_local[i] = 0.0;
  }
  g_log_s += g_log_local;
  out.log_scale += g_log_s;
  out.rotation += quaternion_matrix_backward(g.rotation, g_W.transpose());
}

}  // namespace gof
