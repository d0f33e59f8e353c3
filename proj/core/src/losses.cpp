// SPDX-License-Identifier: Apache-2.0
#include "gof/losses.hpp"

#include <array>
#include <cmath>

#include "gof/errors.hpp"

namespace gof {

namespace {

void require_same_shape(const Image& a, const Image& b, const char* what) {
  if (a.width != b.width || a.height != b.height || a.channels != b.channels) {
    throw InputError(std::string(what) + ": image shapes differ");
  }
}

constexpr int kWindow = 11;
constexpr int kRadius = kWindow / 2;

std::array<double, kWindow> gaussian_window() {
  std::array<double, kWindow> w{};
  double sum = 0.0;
  for (int i = 0; i < kWindow; ++i) {
    const double x = i - kRadius;
    w[i] = std::exp(-x * x / (2.0 * 1.5 * 1.5));
    sum += w[i];
  }
  for (double& v : w) v /= sum;
  return w;
}

// Separable "same" convolution of one plane with zero padding. The kernel is
// symmetric, so the operator is self-adjoint.
std::vector<double> blur(const std::vector<double>& in, int W, int H) {
  static const std::array<double, kWindow> w = gaussian_window();
  std::vector<double> tmp(in.size(), 0.0), out(in.size(), 0.0);
  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      double s = 0.0;
      for (int k = -kRadius; k <= kRadius; ++k) {
        const int xx = x + k;
        if (xx >= 0 && xx < W) s += w[k + kRadius] * in[static_cast<size_t>(y) * W + xx];
      }
      tmp[static_cast<size_t>(y) * W + x] = s;
    }
  }
  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      double s = 0.0;
      for (int k = -kRadius; k <= kRadius; ++k) {
        const int yy = y + k;
        if (yy >= 0 && yy < H) s += w[k + kRadius] * tmp[static_cast<size_t>(yy) * W + x];
      }
      out[static_cast<size_t>(y) * W + x] = s;
    }
  }
  return out;
}

}  // namespace

ImageLoss l1_loss(const Image& rendered, const Image& reference) {
  require_same_shape(rendered, reference, "l1_loss");
  ImageLoss out;
  out.gradient = Image(rendered.width, rendered.height, rendered.channels);
  const double n = static_cast<double>(rendered.data.size());
  if (n == 0) return out;
  double sum = 0.0;
  for (size_t i = 0; i < rendered.data.size(); ++i) {
    const double d = rendered.data[i] - reference.data[i];
    sum += std::abs(d);
    out.gradient.data[i] = (d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0)) / n;
  }
  out.value = sum / n;
  return out;
}

ImageLoss ssim(const Image& rendered, const Image& reference) {
  require_same_shape(rendered, reference, "ssim");
  constexpr double C1 = 0.01 * 0.01;
  constexpr double C2 = 0.03 * 0.03;
  const int W = rendered.width;
  const int H = rendered.height;
  const int C = rendered.channels;
  const size_t np = rendered.pixel_count();
  ImageLoss out;
  out.gradient = Image(W, H, C);
  if (np == 0 || C == 0) return out;
  const double norm = 1.0 / static_cast<double>(np * C);

  std::vector<double> x(np), y(np), xx(np), yy(np), xy(np);
  double total = 0.0;
  for (int c = 0; c < C; ++c) {
    for (size_t p = 0; p < np; ++p) {
      x[p] = rendered.data[p * C + c];
      y[p] = reference.data[p * C + c];
      xx[p] = x[p] * x[p];
      yy[p] = y[p] * y[p];
      xy[p] = x[p] * y[p];
    }
    const auto mu1 = blur(x, W, H);
    const auto mu2 = blur(y, W, H);
    const auto m11 = blur(xx, W, H);
    const auto m22 = blur(yy, W, H);
    const auto m12 = blur(xy, W, H);
    std::vector<double> dmu(np), dm11(np), dm12(np);
    for (size_t p = 0; p < np; ++p) {
      const double s11 = m11[p] - mu1[p] * mu1[p];
      const double s22 = m22[p] - mu2[p] * mu2[p];
      const double s12 = m12[p] - mu1[p] * mu2[p];
      const double n1 = 2.0 * mu1[p] * mu2[p] + C1;
      const double n2 = 2.0 * s12 + C2;
      const double d1 = mu1[p] * mu1[p] + mu2[p] * mu2[p] + C1;
      const double d2 = s11 + s22 + C2;
      const double s = n1 * n2 / (d1 * d2);
      total += s;
      // Partials of s with m11 = E[x^2] and m12 = E[xy] held as independent
      // variables next to mu1.
      dmu[p] = norm * s *
               (2.0 * mu2[p] / n1 - 2.0 * mu2[p] / n2 - 2.0 * mu1[p] / d1 + 2.0 * mu1[p] / d2);
      dm11[p] = norm * s * (-1.0 / d2);
      dm12[p] = norm * s * (2.0 / n2);
    }
    const auto a = blur(dmu, W, H);
    const auto b = blur(dm11, W, H);
    const auto g = blur(dm12, W, H);
    for (size_t p = 0; p < np; ++p) {
      out.gradient.data[p * C + c] = a[p] + 2.0 * x[p] * b[p] + y[p] * g[p];
    }
  }
  out.value = total * norm;
  return out;
}

ImageLoss photometric_loss(const Image& rendered, const Image& reference, double lambda) {
  const ImageLoss l1 = l1_loss(rendered, reference);
  const ImageLoss s = ssim(rendered, reference);
  ImageLoss out;
  out.value = (1.0 - lambda) * l1.value + lambda * (1.0 - s.value);
  out.gradient = Image(rendered.width, rendered.height, rendered.channels);
  for (size_t i = 0; i < out.gradient.data.size(); ++i) {
    out.gradient.data[i] = (1.0 - lambda) * l1.gradient.data[i] - lambda * s.gradient.data[i];
  }
  return out;
}

double distortion_loss(std::span<const double> weights, std::span<const double> depths,
                       std::vector<double>* grad_t) {
  const size_t n = weights.size();
  if (depths.size() != n) throw InputError("distortion_loss: weights and depths differ in length");
  if (grad_t) grad_t->assign(n, 0.0);
  double loss = 0.0;
  for (size_t i = 0; i < n; ++i) {
    double g = 0.0;
    for (size_t j = 0; j < n; ++j) {
      const double d = depths[i] - depths[j];
      loss += weights[i] * weights[j] * std::abs(d);
      g += weights[j] * (d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0));
    }
    if (grad_t) (*grad_t)[i] = 2.0 * weights[i] * g;
  }
  return loss;
}

double distortion_loss(const RaySample& sample, std::vector<double>* grad_t) {
  std::vector<double> w, t;
  w.reserve(sample.entries.size());
  t.reserve(sample.entries.size());
  for (const RayEntry& e : sample.entries) {
    w.push_back(e.weight);
    t.push_back(e.t_star);
  }
  return distortion_loss(w, t, grad_t);
}

double normal_loss(std::span<const double> weights, std::span<const Vec3> normals, const Vec3& target) {
  if (normals.size() != weights.size()) throw InputError("normal_loss: weights and normals differ in length");
  double loss = 0.0;
  for (size_t i = 0; i < weights.size(); ++i) loss += weights[i] * (1.0 - normals[i].dot(target));
  return loss;
}

}  // namespace gof
