// Copyright 2026 The hybfield Authors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "hybfield/math.hpp"

namespace hybfield {

template <class S>
struct DenseLayer {
  int in_dim = 0;
  int out_dim = 0;
  std::vector<S> weight;  // out_dim x in_dim, row-major
  std::vector<S> bias;

  DenseLayer() = default;
  DenseLayer(int in, int out)
      : in_dim(in),
        out_dim(out),
        weight(static_cast<std::size_t>(in) * static_cast<std::size_t>(out), S(0)),
        bias(static_cast<std::size_t>(out), S(0)) {}
};

// Fully connected stack with ReLU between layers and a linear last layer;
// output nonlinearities belong to the heads that own the stack.
template <class S>
struct MlpParams {
  std::vector<DenseLayer<S>> layers;

  int in_dim() const { return layers.empty() ? 0 : layers.front().in_dim; }
  int out_dim() const { return layers.empty() ? 0 : layers.back().out_dim; }

  std::size_t size() const {
    std::size_t n = 0;
    for (const auto& l : layers) n += l.weight.size() + l.bias.size();
    return n;
  }
};

struct MlpShape {
  int in_dim = 0;
  int hidden_width = 64;
  int hidden_layers = 1;
  int out_dim = 1;

  std::size_t param_count() const {
    std::size_t n = 0;
    int prev = in_dim;
    for (int h = 0; h < hidden_layers; ++h) {
      n += static_cast<std::size_t>(prev) * static_cast<std::size_t>(hidden_width) +
           static_cast<std::size_t>(hidden_width);
      prev = hidden_width;
    }
    return n + static_cast<std::size_t>(prev) * static_cast<std::size_t>(out_dim) + static_cast<std::size_t>(out_dim);
  }
};

template <class S>
MlpParams<S> make_mlp(const MlpShape& shape) {
  if (shape.in_dim < 1 || shape.out_dim < 1 || shape.hidden_layers < 0 ||
      (shape.hidden_layers > 0 && shape.hidden_width < 1))
    throw std::invalid_argument("mlp: invalid shape");
  MlpParams<S> p;
  int prev = shape.in_dim;
  for (int h = 0; h < shape.hidden_layers; ++h) {
    p.layers.emplace_back(prev, shape.hidden_width);
    prev = shape.hidden_width;
  }
  p.layers.emplace_back(prev, shape.out_dim);
  return p;
}

// He-uniform weights (bound sqrt(6 / fan_in)), zero biases.
template <class S>
MlpParams<S> init_mlp(const MlpShape& shape, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto p = make_mlp<S>(shape);
  for (auto& layer : p.layers) {
    const double bound = std::sqrt(6.0 / static_cast<double>(layer.in_dim));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (auto& w : layer.weight) w = static_cast<S>(dist(rng));
  }
  return p;
}

template <class S>
struct MlpCache {
  // acts[0] is the input, acts[l] the post-ReLU input of layer l; pre[l] is
  // the pre-activation output of layer l (pre.back() is the network output).
  std::vector<std::vector<S>> acts;
  std::vector<std::vector<S>> pre;
  std::vector<std::vector<S>> delta;
  bool valid = false;

  MlpCache() = default;
  explicit MlpCache(const MlpParams<S>& p) {
    for (const auto& l : p.layers) {
      acts.emplace_back(static_cast<std::size_t>(l.in_dim));
      pre.emplace_back(static_cast<std::size_t>(l.out_dim));
      delta.emplace_back(static_cast<std::size_t>(l.out_dim));
    }
  }
};

template <class S>
std::span<const S> mlp_forward(const MlpParams<S>& p, std::span<const S> input, MlpCache<S>& cache) {
  if (input.size() != static_cast<std::size_t>(p.in_dim()))
    throw std::invalid_argument("mlp: input has " + std::to_string(input.size()) + " entries, expected " +
                                std::to_string(p.in_dim()));
  std::copy(input.begin(), input.end(), cache.acts[0].begin());
  const std::size_t n = p.layers.size();
  for (std::size_t l = 0; l < n; ++l) {
    const auto& layer = p.layers[l];
    affine<S>(layer.weight, layer.bias, cache.acts[l], cache.pre[l]);
    if (l + 1 < n) {
      auto& next = cache.acts[l + 1];
      for (std::size_t i = 0; i < next.size(); ++i) next[i] = cache.pre[l][i] > S(0) ? cache.pre[l][i] : S(0);
    }
  }
  cache.valid = true;
  return cache.pre.back();
}

// Reverse pass given dL/d(output). Accumulates into `grads` (same shapes as
// `p`) and, if `d_input` is non-empty, writes dL/d(input) there.
// ReLU'(0) is taken as 0.
template <class S>
void mlp_backward(const MlpParams<S>& p, MlpCache<S>& cache, std::span<const S> d_output, MlpParams<S>& grads,
                  std::span<S> d_input) {
  if (!cache.valid) throw std::logic_error("mlp_backward: no cached forward pass");
  const std::size_t n = p.layers.size();
  std::copy(d_output.begin(), d_output.end(), cache.delta[n - 1].begin());
  for (std::size_t li = n; li-- > 0;) {
    const auto& layer = p.layers[li];
    auto& g = grads.layers[li];
    const auto& dz = cache.delta[li];
    const auto& a = cache.acts[li];
    const std::size_t n_in = a.size();
    for (std::size_t o = 0; o < dz.size(); ++o) {
      const S d = dz[o];
      g.bias[o] += d;
      if (d == S(0)) continue;
      S* gw = g.weight.data() + o * n_in;
      for (std::size_t i = 0; i < n_in; ++i) gw[i] += d * a[i];
    }
    if (li == 0 && d_input.empty()) break;
    std::span<S> da = li == 0 ? d_input : std::span<S>(cache.delta[li - 1]);
    std::fill(da.begin(), da.end(), S(0));
    for (std::size_t o = 0; o < dz.size(); ++o) {
      const S d = dz[o];
      if (d == S(0)) continue;
      const S* row = layer.weight.data() + o * n_in;
      for (std::size_t i = 0; i < n_in; ++i) da[i] += row[i] * d;
    }
    if (li > 0) {
      const auto& z = cache.pre[li - 1];
      for (std::size_t i = 0; i < da.size(); ++i)
        if (!(z[i] > S(0))) da[i] = S(0);
    }
  }
}

}  // namespace hybfield
