// Copyright 2026 The hybfield Authors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "hybfield/math.hpp"

namespace hybfield {

template <class S>
struct RenderOutput {
  Vec3<S> color{};
  std::vector<S> weights;        // w_i = T_i (1 - exp(-sigma_i delta_i))
  std::vector<S> transmittance;  // T_1 .. T_{N+1}; T_{N+1} weights the background
  S opacity = S(0);

  S residual() const { return transmittance.back(); }
};

// Alpha compositing of N samples over a background:
//   C = sum_i T_i (1 - exp(-sigma_i delta_i)) c_i + T_{N+1} bg,
//   T_{i+1} = T_i exp(-sigma_i delta_i), T_1 = 1.
// Transmittance is accumulated as a running product, so the weights
// telescope and opacity + T_{N+1} = 1 up to rounding.
template <class S>
void composite_into(std::span<const S> sigma, std::span<const Vec3<S>> color, std::span<const S> delta,
                    const Vec3<S>& background, RenderOutput<S>& out) {
  const std::size_t n = sigma.size();
  out.weights.resize(n);
  out.transmittance.resize(n + 1);
  S T = S(1);
  S opacity = S(0);
  Vec3<S> c{};
  for (std::size_t i = 0; i < n; ++i) {
    out.transmittance[i] = T;
    const S next = T * std::exp(-sigma[i] * delta[i]);
    const S w = T - next;
    out.weights[i] = w;
    opacity += w;
    for (std::size_t k = 0; k < 3; ++k) c[k] += w * color[i][k];
    T = next;
  }
  out.transmittance[n] = T;
  for (std::size_t k = 0; k < 3; ++k) c[k] += T * background[k];
  out.color = c;
  out.opacity = opacity;
}

template <class S>
RenderOutput<S> composite(std::span<const S> sigma, std::span<const Vec3<S>> color, std::span<const S> delta,
                          const Vec3<S>& background) {
  if (sigma.size() != color.size() || sigma.size() != delta.size())
    throw std::invalid_argument("composite: per-sample arrays differ in length");
  for (std::size_t i = 0; i < sigma.size(); ++i) {
    if (sigma[i] < S(0)) throw std::invalid_argument("composite: negative density");
    if (delta[i] < S(0)) throw std::invalid_argument("composite: negative segment length");
  }
  RenderOutput<S> out;
  composite_into(sigma, color, delta, background, out);
  return out;
}

// Reverse of composite_into:
//   dL/dc_i     = w_i dL/dC
//   dL/dsigma_i = delta_i * dL/dC . (T_{i+1} c_i - (sum_{j>i} w_j c_j + T_{N+1} bg)).
template <class S>
void composite_backward_into(const RenderOutput<S>& out, std::span<const Vec3<S>> color, std::span<const S> delta,
                             const Vec3<S>& background, const Vec3<S>& d_color, std::span<S> d_sigma,
                             std::span<Vec3<S>> d_samples) {
  const std::size_t n = out.weights.size();
  if (out.transmittance.size() != n + 1) throw std::logic_error("composite_backward: missing forward cache");
  // Running suffix: radiance arriving from behind sample i.
  S tail = out.transmittance[n] * dot(background, d_color);
  for (std::size_t i = n; i-- > 0;) {
    const S own = out.transmittance[i + 1] * dot(color[i], d_color);
    d_sigma[i] = delta[i] * (own - tail);
    for (std::size_t k = 0; k < 3; ++k) d_samples[i][k] = out.weights[i] * d_color[k];
    tail += out.weights[i] * dot(color[i], d_color);
  }
}

template <class S>
std::pair<std::vector<S>, std::vector<Vec3<S>>> composite_backward(const RenderOutput<S>& out,
                                                                    std::span<const Vec3<S>> color,
                                                                    std::span<const S> delta,
                                                                    const Vec3<S>& background,
                                                                    const Vec3<S>& d_color) {
  std::vector<S> ds(out.weights.size());
  std::vector<Vec3<S>> dc(out.weights.size());
  composite_backward_into<S>(out, color, delta, background, d_color, ds, dc);
  return {std::move(ds), std::move(dc)};
}

// Mean over the batch of the per-ray squared L2 color error, and its gradient
// with respect to each prediction.
template <class S>
S l2_loss(std::span<const Vec3<S>> pred, std::span<const Vec3<S>> target, std::span<Vec3<S>> d_pred) {
  if (pred.size() != target.size()) throw std::invalid_argument("l2_loss: batch size mismatch");
  const std::size_t b = pred.size();
  if (b == 0) return S(0);
  S total = S(0);
  const S inv = S(1) / static_cast<S>(b);
  for (std::size_t r = 0; r < b; ++r) {
    for (std::size_t k = 0; k < 3; ++k) {
      const S diff = pred[r][k] - target[r][k];
      total += diff * diff;
      if (!d_pred.empty()) d_pred[r][k] = S(2) * diff * inv;
    }
  }
  return total * inv;
}

}  // namespace hybfield
