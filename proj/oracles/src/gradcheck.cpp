// SPDX-License-Identifier: Apache-2.0
#include "gof/oracles/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <Eigen/Dense>

#include "gof/losses.hpp"
#include "gof/oracles/fixtures.hpp"
#include "gof/oracles/reference.hpp"
#include "gof/renderer.hpp"

namespace gof::oracle {

double central_difference(const std::function<double(double)>& f, double h) {
  return (f(h) - f(-h)) / (2.0 * h);
}

double relative_error(double analytic, double numeric, double floor) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / denom;
}

void perturb_raw(Gaussian3D& g, int index, double delta) {
  if (index < 3) {
    g.center[index] += delta;
  } else if (index < 6) {
    g.scale[index - 3] *= std::exp(delta);
  } else if (index < 10) {
    g.rotation[index - 6] += delta;
  } else if (index == 10) {
    const double y = g.opacity;
    const double logit = std::log(y) - std::log1p(-y);
    g.opacity = 1.0 / (1.0 + std::exp(-(logit + delta)));
  } else {
    const int k = (index - 11) / 3;
    const int c = (index - 11) % 3;
    g.sh[k][c] += delta;
  }
}

void GradCheck::record(double analytic, double numeric, double tolerance, double floor,
                       const std::string& what) {
  ++compared;
  const double err = relative_error(analytic, numeric, floor);
  if (!(err <= tolerance)) ++failures;
  if (!(err <= max_rel_error)) {
    max_rel_error = err;
    worst = what + ": analytic " + std::to_string(analytic) + " numeric " + std::to_string(numeric);
  }
}

void GradCheck::merge(const GradCheck& o) {
  compared += o.compared;
  failures += o.failures;
  if (o.max_rel_error > max_rel_error) {
    max_rel_error = o.max_rel_error;
    worst = o.worst;
  }
}

namespace {

constexpr double kStep = 1e-6;
constexpr const char* kParamNames[] = {"cx", "cy", "cz", "ls0", "ls1", "ls2", "qw", "qx", "qy", "qz", "logit"};

std::string param_name(int i) {
  if (i < 11) return kParamNames[i];
  return "sh" + std::to_string((i - 11) / 3) + "." + std::to_string((i - 11) % 3);
}

// Covariance-form t*, peak and intersection-plane normal facing the origin.
struct OracleHit {
  double t_star;
  double peak;
  Vec3 normal;
};

OracleHit oracle_hit(const Gaussian3D& g, const Vec3& o, const Vec3& d) {
  const Mat3 P = covariance(g).inverse();
  OracleHit h;
  h.t_star = covariance_t_star(g, o, d);
  h.peak = response(g, o + h.t_star * d);
  h.normal = -(P * d).normalized();
  return h;
}

SceneConfig exact_config() {
  SceneConfig c;
  c.contribution_cutoff = 0.0;
  c.transmittance_floor = 0.0;
  c.near_clip = 0.2;
  return c;
}

}  // namespace

GradCheck check_ray_chain(uint64_t seed, double tolerance) {
  std::mt19937_64 rng(seed);
  Gaussian3D g = random_gaussian(rng, 0.5, 0.1, 1.0);
  const Vec3 o = g.center + 4.0 * random_unit(rng);
  const Vec3 aim = g.center + 0.3 * random_unit(rng);
  const Vec3 d = (aim - o) * std::uniform_real_distribution<double>(0.2, 1.0)(rng);
  std::normal_distribution<double> n(0.0, 1.0);
  const double wt = n(rng), wp = n(rng);
  const Vec3 wn(n(rng), n(rng), n(rng));

  auto f = [&](const Gaussian3D& gg) {
    const OracleHit h = oracle_hit(gg, o, d);
    return wt * h.t_star + wp * h.peak + wn.dot(h.normal);
  };
  GeometryGrad analytic;
  backprop_ray_gaussian(g, o, d, wt, wp, wn, analytic);
  GaussianGrad gg;
  gg.geometry = analytic;
  const auto flat = flatten(gg);

  GradCheck out;
  for (int i = 0; i < 10; ++i) {
    const double num = central_difference(
        [&](double h) {
          Gaussian3D p = g;
          perturb_raw(p, i, h);
          return f(p);
        },
        kStep);
    out.record(flat[i], num, tolerance, 1e-7, "ray chain " + param_name(i));
  }
  return out;
}

GradCheck check_photometric(uint64_t seed, double tolerance) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Image a(8, 8, 3), b(8, 8, 3);
  for (double& v : a.data) v = u(rng);
  for (double& v : b.data) v = u(rng);
  const ImageLoss loss = photometric_loss(a, b);
  GradCheck out;
  for (size_t i = 0; i < a.data.size(); ++i) {
    const double num = central_difference(
        [&](double h) {
          Image p = a;
          p.data[i] += h;
          return photometric_loss(p, b).value;
        },
        kStep);
    out.record(loss.gradient.data[i], num, tolerance, 1e-7, "photometric pixel " + std::to_string(i));
  }
  return out;
}

GradCheck check_distortion(uint64_t seed, double tolerance) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const Vec3 o(0.0, 0.0, -4.0);
  const Vec3 d(0.05 * u(rng), 0.05 * u(rng), 1.0);
  std::vector<Gaussian3D> scene;
  for (int i = 0; i < 5; ++i) {
    Gaussian3D g = random_gaussian(rng, 1.0, 0.15, 0.5);
    g.center = o + (4.0 + u(rng)) * d + Vec3(0.2 * u(rng), 0.2 * u(rng), 0.0);
    scene.push_back(g);
  }
  const SceneConfig cfg = exact_config();
  const PreparedScene prepared(scene);
  const RaySample sample = gather_ray(prepared, o, d, cfg);
  GradCheck out;
  if (sample.entries.size() < 2) {
    out.record(0.0, 0.0, tolerance, 1.0, "distortion fixture");
    return out;
  }
  std::vector<double> w, grad_t;
  std::vector<int> ids;
  for (const RayEntry& e : sample.entries) {
    w.push_back(e.weight);
    ids.push_back(e.id);
  }
  distortion_loss(sample, &grad_t);

  // Frozen weights, oracle t*.
  auto frozen = [&](const std::vector<Gaussian3D>& s) {
    std::vector<double> t;
    for (int id : ids) t.push_back(covariance_t_star(s[id], o, d));
    return distortion_loss(w, t);
  };
  for (size_t k = 0; k < ids.size(); ++k) {
    GeometryGrad analytic;
    backprop_ray_gaussian(scene[ids[k]], o, d, grad_t[k], 0.0, Vec3::Zero(), analytic);
    GaussianGrad gg;
    gg.geometry = analytic;
    const auto flat = flatten(gg);
    for (int i = 0; i < 10; ++i) {
      const double num = central_difference(
          [&](double h) {
            auto s = scene;
            perturb_raw(s[ids[k]], i, h);
            return frozen(s);
          },
          kStep);
      out.record(flat[i], num, tolerance, 1e-7, "distortion " + param_name(i));
    }
    // Moving the center along the ray shifts t* by the same amount and leaves
    // every weight unchanged, so the live loss must agree too.
    const double along = central_difference(
        [&](double h) {
          auto s = scene;
          s[ids[k]].center += h * d;
          return distortion_loss(gather_ray(PreparedScene(s), o, d, cfg));
        },
        kStep);
    out.record(grad_t[k], along, tolerance, 1e-7, "distortion along-ray");
  }

  // Detachment: the distortion weight must not change opacity or color
  // gradients at all.
  ViewFixture fx = make_view_fixture(seed);
  fx.config.scene.beta_normal = 0.0;
  fx.config.scene.alpha_distortion = 0.0;
  const ViewGradients base = view_backward(fx.gaussians, fx.view, fx.reference, fx.config);
  fx.config.scene.alpha_distortion = 1000.0;
  const ViewGradients with = view_backward(fx.gaussians, fx.view, fx.reference, fx.config);
  for (size_t i = 0; i < fx.gaussians.size(); ++i) {
    out.record(with.gradients[i].logit_opacity, base.gradients[i].logit_opacity, 0.0, 1.0,
               "distortion detachment logit");
    for (int c = 0; c < 3; ++c) {
      out.record(with.gradients[i].sh[0][c], base.gradients[i].sh[0][c], 0.0, 1.0,
                 "distortion detachment sh");
    }
  }
  return out;
}

ViewFixture make_view_fixture(uint64_t seed, int size) {
  std::mt19937_64 rng(seed * 7919 + 17);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  ViewFixture fx;
  fx.view = look_at(Vec3(0.3 * u(rng), 0.3 * u(rng), -4.0), Vec3::Zero(), Vec3::UnitY(), size, size, 30.0);
  for (int i = 0; i < 4; ++i) {
    Gaussian3D g = random_gaussian(rng, 0.4, 0.25, 0.6);
    g.opacity = 0.5 + 0.45 * u(rng);
    fx.gaussians.push_back(g);
  }
  fx.reference = Image(size, size, 3);
  for (double& v : fx.reference.data) v = u(rng);
  fx.config.scene = exact_config();
  fx.config.scene.alpha_distortion = 0.0;
  fx.config.scene.beta_normal = 0.5;
  return fx;
}

GradCheck check_normal(uint64_t seed, bool detach, double tolerance) {
  ViewFixture fx = make_view_fixture(seed);
  fx.config.detach_depth_normal = detach;
  const ViewGradients vg = view_backward(fx.gaussians, fx.view, fx.reference, fx.config);

  // Frozen target normals for the detached variant.
  const DepthNormals base_normals = depth_to_normal(vg.buffers.depth, vg.buffers.accumulation, fx.view);
  const Mat3 Rt = fx.view.rotation.transpose();
  auto loss = [&](const std::vector<Gaussian3D>& s) {
    if (!detach) return view_loss(s, fx.view, fx.reference, fx.config).total;
    TrainConfig photo_only = fx.config;
    photo_only.scene.beta_normal = 0.0;
    const double lc = view_loss(s, fx.view, fx.reference, photo_only).total;
    const PreparedScene prepared(s);
    RenderCache cache;
    render_view(prepared, fx.view, fx.config.scene, &cache);
    const Vec3 origin = fx.view.center();
    double ln = 0.0;
    for (int py = 0; py < fx.view.height; ++py) {
      for (int px = 0; px < fx.view.width; ++px) {
        const size_t pix = static_cast<size_t>(py) * fx.view.width + px;
        if (!base_normals.valid[pix]) continue;
        const Vec3 N = Rt * Vec3(base_normals.normal.at(px, py, 0), base_normals.normal.at(px, py, 1),
                                 base_normals.normal.at(px, py, 2));
        const Vec3 dir = fx.view.pixel_direction(px, py);
        for (const RayEntry& e : cache.samples[pix].entries) {
          const RayLocal local = to_local(prepared.frame(e.id), origin, dir);
          ln += e.weight * (1.0 - plane_normal(prepared.frame(e.id), local, dir).dot(N));
        }
      }
    }
    if (base_normals.valid_count > 0) ln /= static_cast<double>(base_normals.valid_count);
    return lc + fx.config.scene.beta_normal * ln;
  };

  GradCheck out;
  const int params[] = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13};
  for (size_t k = 0; k < fx.gaussians.size(); ++k) {
    const auto flat = flatten(vg.gradients[k]);
    for (int i : params) {
      const double num = central_difference(
          [&](double h) {
            auto s = fx.gaussians;
            perturb_raw(s[k], i, h);
            return loss(s);
          },
          kStep);
      out.record(flat[i], num, tolerance, 1e-7,
                 std::string(detach ? "normal (detached) " : "normal ") + param_name(i));
    }
  }
  return out;
}

}  // namespace gof::oracle
