// Copyright 2026 The hybfield Authors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "hybfield/data/image.hpp"

namespace hybfield {

inline constexpr double kPsnrCap = 99.0;

inline void check_same_shape(const Image& a, const Image& b, const char* who) {
  if (a.width != b.width || a.height != b.height || a.channels != b.channels)
    throw std::invalid_argument(std::string(who) + ": image dimensions differ");
}

inline double mse(const Image& a, const Image& b) {
  check_same_shape(a, b, "mse");
  double sum = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    const double d = static_cast<double>(a.data[i]) - static_cast<double>(b.data[i]);
    sum += d * d;
  }
  return a.data.empty() ? 0.0 : sum / static_cast<double>(a.data.size());
}

// -10 log10(MSE) over all pixels and channels, capped at 99 dB.
inline double psnr(const Image& a, const Image& b) {
  check_same_shape(a, b, "psnr");
  const double e = mse(a, b);
  if (e <= 0.0) return kPsnrCap;
  return std::min(kPsnrCap, -10.0 * std::log10(e));
}

struct SsimOptions {
  int window = 11;
  double sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
  double dynamic_range = 1.0;
};

namespace detail {

inline std::vector<double> gaussian_window(int size, double sigma) {
  std::vector<double> w(static_cast<std::size_t>(size));
  const double c = 0.5 * (size - 1);
  double sum = 0.0;
  for (int i = 0; i < size; ++i) {
    const double x = i - c;
    w[static_cast<std::size_t>(i)] = std::exp(-x * x / (2.0 * sigma * sigma));
    sum += w[static_cast<std::size_t>(i)];
  }
  for (auto& v : w) v /= sum;
  return w;
}

// Separable "valid" filtering of a single-channel plane.
inline std::vector<double> filter_valid(const std::vector<double>& plane, int width, int height,
                                        const std::vector<double>& w) {
  const int k = static_cast<int>(w.size());
  const int ow = width - k + 1, oh = height - k + 1;
  std::vector<double> tmp(static_cast<std::size_t>(ow) * height);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < ow; ++x) {
      double s = 0.0;
      for (int i = 0; i < k; ++i) s += w[static_cast<std::size_t>(i)] * plane[static_cast<std::size_t>(y) * width + x + i];
      tmp[static_cast<std::size_t>(y) * ow + x] = s;
    }
  std::vector<double> out(static_cast<std::size_t>(ow) * oh);
  for (int y = 0; y < oh; ++y)
    for (int x = 0; x < ow; ++x) {
      double s = 0.0;
      for (int i = 0; i < k; ++i) s += w[static_cast<std::size_t>(i)] * tmp[static_cast<std::size_t>(y + i) * ow + x];
      out[static_cast<std::size_t>(y) * ow + x] = s;
    }
  return out;
}

}  // namespace detail

// Mean SSIM over all valid windows, computed per color channel (the first
// three channels at most) and averaged across channels.
inline double ssim(const Image& a, const Image& b, const SsimOptions& opt = {}) {
  check_same_shape(a, b, "ssim");
  if (a.width < opt.window || a.height < opt.window) throw std::invalid_argument("ssim: image smaller than window");
  const auto w = detail::gaussian_window(opt.window, opt.sigma);
  const double c1 = (opt.k1 * opt.dynamic_range) * (opt.k1 * opt.dynamic_range);
  const double c2 = (opt.k2 * opt.dynamic_range) * (opt.k2 * opt.dynamic_range);
  const int channels = std::min(a.channels, 3);
  const std::size_t n = a.pixel_count();
  double total = 0.0;
  for (int c = 0; c < channels; ++c) {
    std::vector<double> x(n), y(n), xx(n), yy(n), xy(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = a.data[i * static_cast<std::size_t>(a.channels) + static_cast<std::size_t>(c)];
      y[i] = b.data[i * static_cast<std::size_t>(b.channels) + static_cast<std::size_t>(c)];
      xx[i] = x[i] * x[i];
      yy[i] = y[i] * y[i];
      xy[i] = x[i] * y[i];
    }
    const auto mx = detail::filter_valid(x, a.width, a.height, w);
    const auto my = detail::filter_valid(y, a.width, a.height, w);
    const auto mxx = detail::filter_valid(xx, a.width, a.height, w);
    const auto myy = detail::filter_valid(yy, a.width, a.height, w);
    const auto mxy = detail::filter_valid(xy, a.width, a.height, w);
    double sum = 0.0;
    for (std::size_t i = 0; i < mx.size(); ++i) {
      const double vx = mxx[i] - mx[i] * mx[i];
      const double vy = myy[i] - my[i] * my[i];
      const double cov = mxy[i] - mx[i] * my[i];
      sum += ((2.0 * mx[i] * my[i] + c1) * (2.0 * cov + c2)) /
             ((mx[i] * mx[i] + my[i] * my[i] + c1) * (vx + vy + c2));
    }
    total += sum / static_cast<double>(mx.size());
  }
  return total / channels;
}

}  // namespace hybfield
