// Copyright 2026 The hybfield Authors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "hybfield/encoding/positional.hpp"
#include "hybfield/math.hpp"

namespace hybfield {

// Single affine layer + tanh producing the per-feature modulation weights of
// the coarse positional encoding.
template <class S>
struct LpeParams {
  int in_dim = 0;
  int out_dim = 0;
  std::vector<S> weight;  // out_dim x in_dim, row-major
  std::vector<S> bias;

  LpeParams() = default;
  LpeParams(int in, int out)
      : in_dim(in),
        out_dim(out),
        weight(static_cast<std::size_t>(in) * static_cast<std::size_t>(out), S(0)),
        bias(static_cast<std::size_t>(out), S(0)) {}

  std::size_t size() const { return weight.size() + bias.size(); }
  bool empty() const { return out_dim == 0; }

  // Small uniform weights and zero bias, so alpha starts near zero and the
  // coarse branch fades in as training proceeds.
  void init_fade_in(std::mt19937_64& rng, double gain = 0.1) {
    const double bound = gain / std::sqrt(static_cast<double>(in_dim));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (auto& w : weight) w = static_cast<S>(dist(rng));
    for (auto& b : bias) b = S(0);
  }
};

// alpha = tanh(W in + b); writes alpha to `alpha` and gamma_p(x) * alpha to `out`.
template <class S>
void learnable_pe_into(const LpeParams<S>& params, std::span<const S> weight_input, std::span<const S> pe_x,
                       std::span<S> alpha, std::span<S> out) {
  affine<S>(params.weight, params.bias, weight_input, alpha);
  for (std::size_t k = 0; k < alpha.size(); ++k) {
    alpha[k] = std::tanh(alpha[k]);
    out[k] = pe_x[k] * alpha[k];
  }
}

// Backward of learnable_pe_into. Accumulates dW, db and, when `d_input` is
// non-empty, W^T dz into d_input.
template <class S>
void learnable_pe_backward(const LpeParams<S>& params, std::span<const S> weight_input, std::span<const S> pe_x,
                           std::span<const S> alpha, std::span<const S> d_out, std::span<S> d_weight,
                           std::span<S> d_bias, std::span<S> d_input, std::span<S> scratch_dz) {
  const std::size_t n_in = weight_input.size();
  for (std::size_t k = 0; k < alpha.size(); ++k) {
    const S dz = d_out[k] * pe_x[k] * (S(1) - alpha[k] * alpha[k]);
    scratch_dz[k] = dz;
    d_bias[k] += dz;
    S* dw = d_weight.data() + k * n_in;
    for (std::size_t i = 0; i < n_in; ++i) dw[i] += dz * weight_input[i];
  }
  if (!d_input.empty()) {
    for (std::size_t k = 0; k < alpha.size(); ++k) {
      const S dz = scratch_dz[k];
      const S* row = params.weight.data() + k * n_in;
      for (std::size_t i = 0; i < d_input.size(); ++i) d_input[i] += row[i] * dz;
    }
  }
}

}  // namespace hybfield
