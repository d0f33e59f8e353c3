// SPDX-License-Identifier: Apache-2.0
#include "gof/renderer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <tbb/blocked_range2d.h>
#include <tbb/parallel_for.h>

#include "gof/sh.hpp"

namespace gof {

PreparedScene::PreparedScene(std::vector<Gaussian3D> gaussians) : gaussians_(std::move(gaussians)) {
  frames_.reserve(gaussians_.size());
  for (const auto& g : gaussians_) frames_.push_back(make_frame(g));
}

namespace {

void composite(std::vector<RayEntry>& entries, double transmittance_floor, double& transmittance) {
  std::sort(entries.begin(), entries.end(), [](const RayEntry& a, const RayEntry& b) {
    return a.t_star < b.t_star || (a.t_star == b.t_star && a.id < b.id);
  });
  double T = 1.0;
  size_t kept = 0;
  for (; kept < entries.size(); ++kept) {
    RayEntry& e = entries[kept];
    const double next = T * (1.0 - e.alpha);
    if (next < transmittance_floor) break;
    e.weight = e.alpha * T;
    T = next;
  }
  entries.resize(kept);
  transmittance = T;
}

template <typename Ids>
RaySample gather_impl(const PreparedScene& scene, const Vec3& origin, const Vec3& direction,
                      const SceneConfig& config, const Ids& ids) {
  RaySample sample;
  for (const int id : ids) {
    const RayLocal local = to_local(scene.frame(id), origin, direction);
    const Intersection hit = intersect(local);
    if (!(hit.t_star >= config.near_clip)) continue;
    const double alpha = std::min(scene.gaussian(id).opacity * hit.peak, kMaxSampleAlpha);
    if (!(alpha >= config.contribution_cutoff) || alpha <= 0.0) continue;
    sample.entries.push_back({id, hit.t_star, hit.peak, alpha, 0.0});
  }
  composite(sample.entries, config.transmittance_floor, sample.transmittance);
  return sample;
}

struct IotaRange {
  int n;
  struct It {
    int i;
    int operator*() const { return i; }
    It& operator++() {
      ++i;
      return *this;
    }
    bool operator!=(const It& o) const { return i != o.i; }
  };
  It begin() const { return {0}; }
  It end() const { return {n}; }
};

}  // namespace

RaySample gather_ray(const PreparedScene& scene, const Vec3& origin, const Vec3& direction,
                     const SceneConfig& config, std::span<const int> candidates) {
  return gather_impl(scene, origin, direction, config, candidates);
}

RaySample gather_ray(const PreparedScene& scene, const Vec3& origin, const Vec3& direction,
                     const SceneConfig& config) {
  return gather_impl(scene, origin, direction, config, IotaRange{static_cast<int>(scene.size())});
}

RaySample gather_ray(const PreparedScene& scene, const CameraView& view, int px, int py,
                     const SceneConfig& config) {
  return gather_ray(scene, view.center(), view.pixel_direction(px, py), config);
}

std::optional<ScreenRect> screen_footprint(const PreparedScene& scene, size_t index,
                                           const CameraView& view, const SceneConfig& config) {
  const Gaussian3D& g = scene.gaussian(index);
  const double alpha = std::min(g.opacity, 1.0);
  const ScreenRect full{-1.0, view.width + 1.0, -1.0, view.height + 1.0};
  if (config.contribution_cutoff <= 0.0) return full;
  if (!(alpha >= config.contribution_cutoff)) return std::nullopt;
  // alpha * E >= cutoff  <=>  squared Mahalanobis distance of the ray <= 2 ln(alpha / cutoff)
  const double k = std::sqrt(2.0 * std::log(alpha / config.contribution_cutoff)) * (1.0 + 1e-6) + 1e-9;
  const GaussianFrame& f = scene.frame(index);
  const Mat3 local_to_world = f.world_to_local.transpose();
  Vec3 half;
  for (int i = 0; i < 3; ++i) half[i] = k / f.inv_scale[i];

  ScreenRect rect{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity(),
                  std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  bool all_behind = true;
  for (int c = 0; c < 8; ++c) {
    const Vec3 offset((c & 1 ? 1.0 : -1.0) * half[0], (c & 2 ? 1.0 : -1.0) * half[1],
                      (c & 4 ? 1.0 : -1.0) * half[2]);
    const Vec3 pc = view.to_camera(g.center + local_to_world * offset);
    if (pc.z() > 0.0) all_behind = false;
    if (!(pc.z() > 1e-12)) {
      rect.u0 = -std::numeric_limits<double>::infinity();
      continue;
    }
    const double u = view.fx * pc.x() / pc.z() + view.cx;
    const double v = view.fy * pc.y() / pc.z() + view.cy;
    rect.u0 = std::min(rect.u0, u);
    rect.u1 = std::max(rect.u1, u);
    rect.v0 = std::min(rect.v0, v);
    rect.v1 = std::max(rect.v1, v);
  }
  if (all_behind) return std::nullopt;
  if (!std::isfinite(rect.u0)) return full;  // box straddles the camera plane
  if (rect.u1 < 0.0 || rect.v1 < 0.0 || rect.u0 > view.width || rect.v0 > view.height) {
    return std::nullopt;
  }
  return rect;
}

TileBins::TileBins(const PreparedScene& scene, const CameraView& view, const SceneConfig& config) {
  tiles_x_ = (view.width + kTileSize - 1) / kTileSize;
  tiles_y_ = (view.height + kTileSize - 1) / kTileSize;
  bins_.resize(static_cast<size_t>(tiles_x_) * tiles_y_);
  rects_.resize(scene.size());
  for (size_t i = 0; i < scene.size(); ++i) {
    const auto rect = screen_footprint(scene, i, view, config);
    if (!rect) {
      rects_[i] = {1.0, -1.0, 1.0, -1.0};  // empty
      continue;
    }
    rects_[i] = *rect;
    const int tx0 = std::clamp(static_cast<int>(std::floor(rect->u0 / kTileSize)), 0, tiles_x_ - 1);
    const int tx1 = std::clamp(static_cast<int>(std::floor(rect->u1 / kTileSize)), 0, tiles_x_ - 1);
    const int ty0 = std::clamp(static_cast<int>(std::floor(rect->v0 / kTileSize)), 0, tiles_y_ - 1);
    const int ty1 = std::clamp(static_cast<int>(std::floor(rect->v1 / kTileSize)), 0, tiles_y_ - 1);
    for (int ty = ty0; ty <= ty1; ++ty) {
      for (int tx = tx0; tx <= tx1; ++tx) {
        bins_[static_cast<size_t>(ty) * tiles_x_ + tx].push_back(static_cast<int>(i));
      }
    }
  }
}

void TileBins::pixel_candidates(int px, int py, std::vector<int>& out) const {
  out.clear();
  for (const int id : tile_of_pixel(px, py)) {
    const ScreenRect& r = rects_[id];
    if (r.u1 >= px && r.u0 <= px + 1.0 && r.v1 >= py && r.v0 <= py + 1.0) out.push_back(id);
  }
}

RenderBuffers render_view(const PreparedScene& scene, const CameraView& view,
                          const SceneConfig& config, RenderCache* cache) {
  const int W = view.width;
  const int H = view.height;
  RenderBuffers out;
  out.color = Image(W, H, 3);
  out.depth = Image(W, H, 1);
  out.normal = Image(W, H, 3);
  out.accumulation = Image(W, H, 1);
  out.contributors.assign(static_cast<size_t>(W) * H, 0);

  const Vec3 origin = view.center();
  std::vector<Vec3> colors(scene.size());
  for (size_t i = 0; i < scene.size(); ++i) {
    colors[i] = sh_color(scene.gaussian(i), scene.gaussian(i).center - origin, config.sh_degree);
  }
  if (cache) {
    cache->samples.assign(static_cast<size_t>(W) * H, RaySample{});
  }

  const TileBins bins(scene, view, config);
  tbb::parallel_for(tbb::blocked_range2d<int>(0, bins.tiles_y(), 0, bins.tiles_x()),
                    [&](const tbb::blocked_range2d<int>& range) {
    for (int ty = range.rows().begin(); ty != range.rows().end(); ++ty) {
      for (int tx = range.cols().begin(); tx != range.cols().end(); ++tx) {
        const auto candidates = bins.tile(tx, ty);
        const int y_end = std::min(H, (ty + 1) * TileBins::kTileSize);
        const int x_end = std::min(W, (tx + 1) * TileBins::kTileSize);
        for (int py = ty * TileBins::kTileSize; py < y_end; ++py) {
          for (int px = tx * TileBins::kTileSize; px < x_end; ++px) {
            const Vec3 dir = view.pixel_direction(px, py);
            RaySample sample = gather_ray(scene, origin, dir, config, candidates);
            Vec3 color = Vec3::Zero();
            Vec3 normal = Vec3::Zero();
            double depth = 0.0;
            double acc = 0.0;
            for (const RayEntry& e : sample.entries) {
              color += e.weight * colors[e.id];
              depth += e.weight * e.t_star;
              acc += e.weight;
              const RayLocal local = to_local(scene.frame(e.id), origin, dir);
              normal += e.weight * plane_normal(scene.frame(e.id), local, dir);
            }
            if (acc > 1e-6) depth /= acc;
            for (int c = 0; c < 3; ++c) {
              out.color.at(px, py, c) = color[c];
              out.normal.at(px, py, c) = normal[c];
            }
            out.depth.at(px, py) = depth;
            out.accumulation.at(px, py) = acc;
            const size_t pix = static_cast<size_t>(py) * W + px;
            out.contributors[pix] = static_cast<int>(sample.entries.size());
            if (cache) cache->samples[pix] = std::move(sample);
          }
        }
      }
    }
  });
  if (cache) cache->colors = std::move(colors);
  return out;
}

namespace {

Vec3 back_project(const Image& depth, const CameraView& view, int px, int py) {
  return depth.at(px, py) * view.camera_direction(px + 0.5, py + 0.5);
}

}  // namespace

DepthNormals depth_to_normal(const Image& depth, const Image& accumulation, const CameraView& view) {
  const int W = depth.width;
  const int H = depth.height;
  DepthNormals out;
  out.normal = Image(W, H, 3);
  out.valid.assign(static_cast<size_t>(W) * H, 0);
  for (int py = 1; py + 1 < H; ++py) {
    for (int px = 1; px + 1 < W; ++px) {
      if (accumulation.at(px, py) < 0.5 || accumulation.at(px - 1, py) < 0.5 ||
          accumulation.at(px + 1, py) < 0.5 || accumulation.at(px, py - 1) < 0.5 ||
          accumulation.at(px, py + 1) < 0.5) {
        continue;
      }
      const Vec3 dx = back_project(depth, view, px + 1, py) - back_project(depth, view, px - 1, py);
      const Vec3 dy = back_project(depth, view, px, py + 1) - back_project(depth, view, px, py - 1);
      const Vec3 c = dx.cross(dy);
      const double len = c.norm();
      if (!(len > 1e-30)) continue;
      Vec3 n = c / len;
      if (n.dot(back_project(depth, view, px, py)) > 0.0) n = -n;
      for (int k = 0; k < 3; ++k) out.normal.at(px, py, k) = n[k];
      out.valid[static_cast<size_t>(py) * W + px] = 1;
      ++out.valid_count;
    }
  }
  return out;
}

void depth_to_normal_backward(const Image& depth, const DepthNormals& normals,
                              const CameraView& view, const Image& grad_normal, Image& grad_depth) {
  const int W = depth.width;
  const int H = depth.height;
  auto add = [&](int px, int py, const Vec3& g_point) {
    grad_depth.at(px, py) += view.camera_direction(px + 0.5, py + 0.5).dot(g_point);
  };
  for (int py = 1; py + 1 < H; ++py) {
    for (int px = 1; px + 1 < W; ++px) {
      if (!normals.valid[static_cast<size_t>(py) * W + px]) continue;
      const Vec3 gn(grad_normal.at(px, py, 0), grad_normal.at(px, py, 1), grad_normal.at(px, py, 2));
      if (gn.squaredNorm() == 0.0) continue;
      const Vec3 dx = back_project(depth, view, px + 1, py) - back_project(depth, view, px - 1, py);
      const Vec3 dy = back_project(depth, view, px, py + 1) - back_project(depth, view, px, py - 1);
      const Vec3 c = dx.cross(dy);
      const double len = c.norm();
      const Vec3 c_hat = c / len;
      const double sign = c_hat.dot(back_project(depth, view, px, py)) > 0.0 ? -1.0 : 1.0;
      const Vec3 g_c = sign * (gn - c_hat * c_hat.dot(gn)) / len;
      const Vec3 g_dx = dy.cross(g_c);
      const Vec3 g_dy = g_c.cross(dx);
      add(px + 1, py, g_dx);
      add(px - 1, py, -g_dx);
      add(px, py + 1, g_dy);
      add(px, py - 1, -g_dy);
    }
  }
}

}  // namespace gof
