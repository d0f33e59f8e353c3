// SPDX-License-Identifier: Apache-2.0
#include "gof/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include <tbb/parallel_for.h>

#include "gof/errors.hpp"
#include "gof/losses.hpp"
#include "gof/sh.hpp"

namespace gof {

std::array<double, kParamsPerGaussian> flatten(const GaussianGrad& g) {
  std::array<double, kParamsPerGaussian> out{};
  for (int i = 0; i < 3; ++i) out[i] = g.geometry.center[i];
  for (int i = 0; i < 3; ++i) out[3 + i] = g.geometry.log_scale[i];
  for (int i = 0; i < 4; ++i) out[6 + i] = g.geometry.rotation[i];
  out[10] = g.logit_opacity;
  for (int k = 0; k < kShCoefficients; ++k) {
    for (int c = 0; c < 3; ++c) out[11 + 3 * k + c] = g.sh[k][c];
  }
  return out;
}

namespace {

constexpr int kRowsPerBlock = 4;

// Per-block dense partials, reduced in block order.
struct BlockPartial {
  std::vector<GeometryGrad> geometry;
  std::vector<Vec3> color;
  std::vector<double> opacity;
  std::vector<std::vector<Vec2>> pixel_gradients;
  double distortion = 0.0;
  double normal = 0.0;
};

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double logit(double y) {
  y = std::clamp(y, 1e-12, 1.0 - 1e-12);
  return std::log(y) - std::log1p(-y);
}

Vec3 pixel_vec(const Image& img, int px, int py) {
  return Vec3(img.at(px, py, 0), img.at(px, py, 1), img.at(px, py, 2));
}

struct DepthMap {
  double near;
  double far;

  double operator()(double t) const { return far / (far - near) * (1.0 - near / t); }
  double derivative(double t) const { return far * near / ((far - near) * t * t); }
};

// Distortion over mapped depths; `grad_t` is with respect to the raw t*.
double mapped_distortion(const RaySample& s, const DepthMap& map, std::vector<double>* grad_t) {
  std::vector<double> w, m;
  w.reserve(s.entries.size());
  m.reserve(s.entries.size());
  for (const RayEntry& e : s.entries) {
    w.push_back(e.weight);
    m.push_back(map(e.t_star));
  }
  const double value = distortion_loss(w, m, grad_t);
  if (grad_t) {
    for (size_t k = 0; k < s.entries.size(); ++k) (*grad_t)[k] *= map.derivative(s.entries[k].t_star);
  }
  return value;
}

ViewGradients evaluate_view(std::span<const Gaussian3D> gaussians, const CameraView& view,
                            const Image& reference, const TrainConfig& config, bool backward) {
  const SceneConfig& sc = config.scene;
  if (reference.width != view.width || reference.height != view.height || reference.channels != 3) {
    throw InputError("reference image for camera " + std::to_string(view.id) +
                     " does not match the camera size");
  }
  const PreparedScene scene(std::vector<Gaussian3D>(gaussians.begin(), gaussians.end()));
  const size_t n = scene.size();
  const int W = view.width;
  const int H = view.height;
  const double npix = static_cast<double>(static_cast<size_t>(W) * H);
  const Vec3 origin = view.center();

  ViewGradients out;
  RenderCache cache;
  out.buffers = render_view(scene, view, sc, &cache);
  const RenderBuffers& buf = out.buffers;

  const ImageLoss photo = photometric_loss(buf.color, reference, config.lambda_dssim);
  out.loss.L_c = photo.value;
  out.loss.l1 = l1_loss(buf.color, reference).value;

  const DepthNormals dn = depth_to_normal(buf.depth, buf.accumulation, view);
  const bool use_normal = sc.beta_normal != 0.0 && dn.valid_count > 0;
  const double ln_scale = use_normal ? sc.beta_normal / static_cast<double>(dn.valid_count) : 0.0;
  const double ld_scale = sc.alpha_distortion / npix;
  const Mat3 Rt = view.rotation.transpose();

  auto world_target = [&](int px, int py) -> Vec3 {
    return Rt * pixel_vec(dn.normal, px, py);
  };
  auto is_valid = [&](int px, int py) {
    return dn.valid[static_cast<size_t>(py) * W + px] != 0;
  };

  const DepthMap depth_map{sc.near_clip, config.distortion_far};
  const int blocks = (H + kRowsPerBlock - 1) / kRowsPerBlock;
  std::vector<BlockPartial> partials(static_cast<size_t>(std::max(blocks, 0)));

  // Pass 1: regularizer values and, per valid pixel, dL/dN in the camera frame.
  Image grad_n_cam(W, H, 3);
  tbb::parallel_for(0, blocks, [&](int b) {
    BlockPartial& part = partials[b];
    std::vector<double> w;
    std::vector<Vec3> normals;
    for (int py = b * kRowsPerBlock; py < std::min(H, (b + 1) * kRowsPerBlock); ++py) {
      for (int px = 0; px < W; ++px) {
        const RaySample& s = cache.samples[static_cast<size_t>(py) * W + px];
        if (s.entries.empty()) continue;
        part.distortion += mapped_distortion(s, depth_map, nullptr);
        if (!use_normal || !is_valid(px, py)) continue;
        const Vec3 dir = view.pixel_direction(px, py);
        const Vec3 N = world_target(px, py);
        w.clear();
        normals.clear();
        Vec3 g_world = Vec3::Zero();
        for (const RayEntry& e : s.entries) {
          const RayLocal local = to_local(scene.frame(e.id), origin, dir);
          const Vec3 nk = plane_normal(scene.frame(e.id), local, dir);
          w.push_back(e.weight);
          normals.push_back(nk);
          g_world -= e.weight * nk;
        }
        part.normal += normal_loss(w, normals, N);
        const Vec3 g_cam = view.rotation * (ln_scale * g_world);
        for (int c = 0; c < 3; ++c) grad_n_cam.at(px, py, c) = g_cam[c];
      }
    }
  });
  double distortion = 0.0, normal = 0.0;
  for (const BlockPartial& p : partials) {
    distortion += p.distortion;
    normal += p.normal;
  }
  out.loss.L_d = distortion / npix;
  out.loss.L_n = use_normal ? normal / static_cast<double>(dn.valid_count) : 0.0;
  out.loss.total = out.loss.L_c + sc.alpha_distortion * out.loss.L_d + sc.beta_normal * out.loss.L_n;
  if (!backward) return out;

  Image grad_depth(W, H, 1);
  if (use_normal && !config.detach_depth_normal) {
    depth_to_normal_backward(buf.depth, dn, view, grad_n_cam, grad_depth);
  }

  // Pass 2: per-pixel backward through compositing and the ray-Gaussian chain.
  tbb::parallel_for(0, blocks, [&](int b) {
    BlockPartial& part = partials[b];
    part.geometry.assign(n, GeometryGrad{});
    part.color.assign(n, Vec3::Zero());
    part.opacity.assign(n, 0.0);
    part.pixel_gradients.assign(n, {});
    std::vector<double> G, T, dt, grad_ld;
    for (int py = b * kRowsPerBlock; py < std::min(H, (b + 1) * kRowsPerBlock); ++py) {
      for (int px = 0; px < W; ++px) {
        const RaySample& s = cache.samples[static_cast<size_t>(py) * W + px];
        const size_t m = s.entries.size();
        if (m == 0) continue;
        const Vec3 dir = view.pixel_direction(px, py);
        const Vec3 gC = pixel_vec(photo.gradient, px, py);
        const double A = buf.accumulation.at(px, py);
        const double D = buf.depth.at(px, py);
        const bool normalized = A > 1e-6;
        const double gD = grad_depth.at(px, py);
        const bool valid = use_normal && is_valid(px, py);
        const Vec3 N = valid ? world_target(px, py) : Vec3::Zero();
        mapped_distortion(s, depth_map, &grad_ld);

        G.assign(m, 0.0);
        T.assign(m, 0.0);
        dt.assign(m, 0.0);
        std::vector<Vec3> nk(m, Vec3::Zero());
        double trans = 1.0;
        for (size_t k = 0; k < m; ++k) {
          const RayEntry& e = s.entries[k];
          T[k] = trans;
          trans *= 1.0 - e.alpha;
          const double dD_dw = normalized ? (e.t_star - D) / A : e.t_star;
          const double dD_dt = normalized ? e.weight / A : e.weight;
          G[k] = gC.dot(cache.colors[e.id]) + gD * dD_dw;
          dt[k] = gD * dD_dt + ld_scale * grad_ld[k];
          if (valid) {
            const RayLocal local = to_local(scene.frame(e.id), origin, dir);
            nk[k] = plane_normal(scene.frame(e.id), local, dir);
            G[k] += ln_scale * (1.0 - nk[k].dot(N));
          }
        }
        double suffix = 0.0;  // sum over j > k of G_j w_j
        for (size_t kk = m; kk-- > 0;) {
          const RayEntry& e = s.entries[kk];
          const Gaussian3D& g = scene.gaussian(e.id);
          double da = G[kk] * T[kk] - suffix / (1.0 - e.alpha);
          suffix += G[kk] * e.weight;
          if (g.opacity * e.peak > kMaxSampleAlpha) da = 0.0;
          const double dE = da * g.opacity;
          part.opacity[e.id] += da * e.peak;
          part.color[e.id] += e.weight * gC;
          const Vec3 dn_k = valid ? Vec3(-ln_scale * e.weight * N) : Vec3::Zero();
          GeometryGrad local;
          backprop_ray_gaussian(g, origin, dir, dt[kk], dE, dn_k, local);
          part.geometry[e.id] += local;
          const Vec3 g_cam = view.rotation * local.center;
          const double z = view.to_camera(g.center).z();
          part.pixel_gradients[e.id].emplace_back(g_cam.x() * z / view.fx * 0.5 * W,
                                                  g_cam.y() * z / view.fy * 0.5 * H);
        }
      }
    }
  });

  out.gradients.assign(n, GaussianGrad{});
  out.pixel_gradients.assign(n, {});
  std::vector<Vec3> color(n, Vec3::Zero());
  std::vector<double> d_opacity(n, 0.0);
  for (const BlockPartial& p : partials) {
    for (size_t i = 0; i < n; ++i) {
      out.gradients[i].geometry += p.geometry[i];
      color[i] += p.color[i];
      d_opacity[i] += p.opacity[i];
      auto& dst = out.pixel_gradients[i];
      dst.insert(dst.end(), p.pixel_gradients[i].begin(), p.pixel_gradients[i].end());
    }
  }
  for (size_t i = 0; i < n; ++i) {
    const Gaussian3D& g = scene.gaussian(i);
    sh_color_backward(g, origin, sc.sh_degree, color[i], out.gradients[i].sh,
                      out.gradients[i].geometry.center);
    out.gradients[i].logit_opacity = d_opacity[i] * g.opacity * (1.0 - g.opacity);
  }
  return out;
}

}  // namespace

ViewGradients view_backward(std::span<const Gaussian3D> gaussians, const CameraView& view,
                            const Image& reference, const TrainConfig& config) {
  return evaluate_view(gaussians, view, reference, config, true);
}

LossBundle view_loss(std::span<const Gaussian3D> gaussians, const CameraView& view,
                     const Image& reference, const TrainConfig& config) {
  return evaluate_view(gaussians, view, reference, config, false).loss;
}

void accumulate_densify(DensifyStats& stats, const std::vector<std::vector<Vec2>>& pixel_gradients) {
  if (pixel_gradients.size() != stats.size()) {
    throw InputError("accumulate_densify: statistics and gradients cover different scenes");
  }
  for (size_t i = 0; i < pixel_gradients.size(); ++i) {
    const auto& list = pixel_gradients[i];
    if (list.empty()) continue;
    Vec2 sum = Vec2::Zero();
    double norms = 0.0;
    for (const Vec2& g : list) {
      sum += g;
      norms += g.norm();
    }
    stats.M[i] += norms;
    stats.classic[i] += sum.norm();
    stats.count[i] += 1;
  }
}

std::vector<uint8_t> densify_candidates(const DensifyStats& stats, double threshold) {
  std::vector<uint8_t> out(stats.size(), 0);
  for (size_t i = 0; i < stats.size(); ++i) {
    if (stats.count[i] > 0 && stats.M[i] / stats.count[i] > threshold) out[i] = 1;
  }
  return out;
}

namespace {

Vec3 sample_in(const Gaussian3D& g, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vec3 z;
  for (int i = 0; i < 3; ++i) z[i] = normal(rng);
  return g.center + quaternion_to_matrix(g.rotation) * g.scale.cwiseProduct(z);
}

}  // namespace

DensifyResult densify_step(std::vector<Gaussian3D>& scene, const DensifyStats& stats,
                           const TrainConfig& config, double extent, uint64_t seed) {
  if (stats.size() != scene.size()) {
    throw InputError("densify_step: statistics and scene have different sizes");
  }
  std::mt19937_64 rng(seed);
  const std::vector<uint8_t> candidates = densify_candidates(stats, config.densify_threshold);
  DensifyResult res;
  std::vector<Gaussian3D> next;
  std::vector<size_t> parent;
  std::vector<uint8_t> fresh;
  std::vector<Gaussian3D> added;
  std::vector<size_t> added_parent;
  size_t budget = config.max_gaussians > scene.size() ? config.max_gaussians - scene.size() : 0;
  for (size_t i = 0; i < scene.size(); ++i) {
    const Gaussian3D& g = scene[i];
    if (candidates[i] && budget > 0) {
      if (g.scale.maxCoeff() <= config.percent_dense * extent) {
        Gaussian3D child = g;
        child.center = sample_in(g, rng);
        added.push_back(child);
        added_parent.push_back(i);
        next.push_back(g);
        parent.push_back(i);
        fresh.push_back(0);
        ++res.cloned;
        --budget;
        continue;
      }
      for (int c = 0; c < 2; ++c) {
        Gaussian3D child = g;
        child.center = sample_in(g, rng);
        child.scale = g.scale / 1.6;
        added.push_back(child);
        added_parent.push_back(i);
      }
      ++res.split;
      --budget;
      continue;
    }
    next.push_back(g);
    parent.push_back(i);
    fresh.push_back(0);
  }
  for (size_t k = 0; k < added.size(); ++k) {
    next.push_back(added[k]);
    parent.push_back(added_parent[k]);
    fresh.push_back(1);
  }
  scene.clear();
  for (size_t k = 0; k < next.size(); ++k) {
    if (next[k].opacity < config.scene.prune_alpha) {
      ++res.pruned;
      continue;
    }
    scene.push_back(next[k]);
    res.parent.push_back(parent[k]);
    res.fresh.push_back(fresh[k]);
  }
  return res;
}

double scene_extent(std::span<const CameraView> views) {
  if (views.empty()) return 1.0;
  Vec3 mean = Vec3::Zero();
  for (const CameraView& v : views) mean += v.center();
  mean /= static_cast<double>(views.size());
  double r = 0.0;
  for (const CameraView& v : views) r = std::max(r, (v.center() - mean).norm());
  return r > 0.0 ? 1.1 * r : 1.0;
}

namespace {

using Params = std::array<double, kParamsPerGaussian>;

Params raw_params(const Gaussian3D& g) {
  Params p{};
  for (int i = 0; i < 3; ++i) p[i] = g.center[i];
  for (int i = 0; i < 3; ++i) p[3 + i] = std::log(g.scale[i]);
  for (int i = 0; i < 4; ++i) p[6 + i] = g.rotation[i];
  p[10] = logit(g.opacity);
  for (int k = 0; k < kShCoefficients; ++k) {
    for (int c = 0; c < 3; ++c) p[11 + 3 * k + c] = g.sh[k][c];
  }
  return p;
}

void assign_params(Gaussian3D& g, const Params& p) {
  for (int i = 0; i < 3; ++i) g.center[i] = p[i];
  for (int i = 0; i < 3; ++i) g.scale[i] = std::exp(p[3 + i]);
  Vec4 q(p[6], p[7], p[8], p[9]);
  const double len = q.norm();
  g.rotation = len > 0.0 ? Vec4(q / len) : Vec4(1.0, 0.0, 0.0, 0.0);
  g.opacity = sigmoid(p[10]);
  for (int k = 0; k < kShCoefficients; ++k) {
    for (int c = 0; c < 3; ++c) g.sh[k][c] = p[11 + 3 * k + c];
  }
}

Params learning_rates(const TrainConfig& config, double position_lr) {
  Params lr{};
  for (int i = 0; i < 3; ++i) lr[i] = position_lr;
  for (int i = 3; i < 6; ++i) lr[i] = config.scale_lr;
  for (int i = 6; i < 10; ++i) lr[i] = config.rotation_lr;
  lr[10] = config.opacity_lr;
  for (int i = 11; i < 14; ++i) lr[i] = config.sh_dc_lr;
  for (int i = 14; i < kParamsPerGaussian; ++i) lr[i] = config.sh_rest_lr;
  return lr;
}

struct AdamState {
  std::vector<Params> m;
  std::vector<Params> v;
  std::vector<int> steps;
};

}  // namespace

std::vector<Gaussian3D> fit(std::vector<Gaussian3D> scene, std::span<const CameraView> views,
                            int iterations, const TrainConfig& config,
                            const IterationCallback& on_iteration) {
  config.scene.validate();
  if (iterations < 0) throw InputError("fit: iteration count must be non-negative");
  if (!(config.distortion_far > config.scene.near_clip)) {
    throw InputError("fit: distortion_far must exceed near_clip");
  }
  if (views.empty()) throw InputError("fit: no training views");
  for (const CameraView& v : views) {
    if (!v.image) throw InputError("fit: camera " + std::to_string(v.id) + " has no reference image");
  }
  if (iterations == 0) return scene;

  const double extent = scene_extent(views);
  std::mt19937_64 rng(config.seed);
  std::vector<size_t> order;
  size_t cursor = 0;

  AdamState adam;
  adam.m.assign(scene.size(), Params{});
  adam.v.assign(scene.size(), Params{});
  adam.steps.assign(scene.size(), 0);
  DensifyStats stats(scene.size());

  for (int it = 0; it < iterations; ++it) {
    if (cursor == order.size()) {
      order.resize(views.size());
      std::iota(order.begin(), order.end(), size_t{0});
      std::shuffle(order.begin(), order.end(), rng);
      cursor = 0;
    }
    const CameraView& view = views[order[cursor++]];

    TrainConfig cfg = config;
    const int interval = std::max(config.sh_degree_interval, 1);
    cfg.scene.sh_degree = std::min(config.scene.sh_degree, it / interval);

    ViewGradients vg = view_backward(scene, view, *view.image, cfg);
    if (!std::isfinite(vg.loss.total)) {
      throw NumericalError("training diverged at iteration " + std::to_string(it) +
                           ": loss is not finite");
    }
    if (on_iteration) on_iteration(IterationLog{it, vg.loss, scene.size()});
    if (it < config.densify_until) accumulate_densify(stats, vg.pixel_gradients);

    const double frac = static_cast<double>(it) / std::max(iterations - 1, 1);
    const double position_lr =
        extent * std::exp((1.0 - frac) * std::log(config.position_lr_init) +
                          frac * std::log(config.position_lr_final));
    const Params lr = learning_rates(config, position_lr);
    for (size_t i = 0; i < scene.size(); ++i) {
      const Params g = flatten(vg.gradients[i]);
      Params p = raw_params(scene[i]);
      const int step = ++adam.steps[i];
      const double bc1 = 1.0 - std::pow(config.adam_beta1, step);
      const double bc2 = 1.0 - std::pow(config.adam_beta2, step);
      for (int k = 0; k < kParamsPerGaussian; ++k) {
        double& m = adam.m[i][k];
        double& v = adam.v[i][k];
        m = config.adam_beta1 * m + (1.0 - config.adam_beta1) * g[k];
        v = config.adam_beta2 * v + (1.0 - config.adam_beta2) * g[k] * g[k];
        p[k] -= lr[k] * (m / bc1) / (std::sqrt(v / bc2) + config.adam_eps);
      }
      assign_params(scene[i], p);
    }

    const int done = it + 1;
    if (done >= config.densify_from && done < config.densify_until && config.densify_interval > 0 &&
        done % config.densify_interval == 0) {
      const DensifyResult res = densify_step(scene, stats, config, extent, config.seed + done);
      AdamState next;
      for (size_t k = 0; k < res.parent.size(); ++k) {
        if (res.fresh[k]) {
          next.m.push_back(Params{});
          next.v.push_back(Params{});
          next.steps.push_back(0);
        } else {
          next.m.push_back(adam.m[res.parent[k]]);
          next.v.push_back(adam.v[res.parent[k]]);
          next.steps.push_back(adam.steps[res.parent[k]]);
        }
      }
      adam = std::move(next);
      stats.reset(scene.size());
    }
  }
  return scene;
}

double mean_l1(std::span<const Gaussian3D> gaussians, std::span<const CameraView> views,
               const SceneConfig& config) {
  if (views.empty()) throw InputError("mean_l1: no views");
  const PreparedScene scene(std::vector<Gaussian3D>(gaussians.begin(), gaussians.end()));
  double sum = 0.0;
  for (const CameraView& v : views) {
    if (!v.image) throw InputError("mean_l1: camera " + std::to_string(v.id) + " has no reference image");
    sum += l1_loss(render_view(scene, v, config).color, *v.image).value;
  }
  return sum / static_cast<double>(views.size());
}

}  // namespace gof
