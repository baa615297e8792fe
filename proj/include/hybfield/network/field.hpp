// Copyright 2026 The hybfield Authors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "hybfield/encoding/spherical_harmonics.hpp"
#include "hybfield/network/mlp.hpp"

namespace hybfield {

struct MlpConfig {
  int hidden_width = 64;
  int density_hidden_layers = 1;
  int color_hidden_layers = 2;
  int embedding_dim = 15;

  void validate() const {
    if (hidden_width < 1) throw std::invalid_argument("mlp: hidden_width must be >= 1");
    if (density_hidden_layers < 0 || color_hidden_layers < 0)
      throw std::invalid_argument("mlp: hidden layer counts must be >= 0");
    if (embedding_dim < 1) throw std::invalid_argument("mlp: embedding_dim must be >= 1");
  }

  MlpShape density_shape(int encoding_dim) const {
    return {encoding_dim, hidden_width, density_hidden_layers, 1 + embedding_dim};
  }
  MlpShape color_shape() const { return {embedding_dim + kShDim, hidden_width, color_hidden_layers, 3}; }
};

inline constexpr double kSigmaRawClamp = 15.0;

template <class S>
struct FieldOutput {
  S sigma_raw = S(0);
  S sigma = S(0);
  std::vector<S> embedding;
  Vec3<S> color{};
};

template <class S>
S sigmoid(S x) {
  return S(1) / (S(1) + std::exp(-x));
}

// Forward state of both heads for one sample.
template <class S>
struct FieldCache {
  MlpCache<S> density;
  MlpCache<S> color;
  std::vector<S> color_input;
  std::vector<S> d_density_out;
  std::vector<S> d_color_input;
  S sigma_raw = S(0);
  S sigma = S(0);
  Vec3<S> rgb{};

  FieldCache() = default;
  FieldCache(const MlpParams<S>& density_params, const MlpParams<S>& color_params)
      : density(density_params),
        color(color_params),
        color_input(static_cast<std::size_t>(color_params.in_dim())),
        d_density_out(static_cast<std::size_t>(density_params.out_dim())),
        d_color_input(static_cast<std::size_t>(color_params.in_dim())) {}
};

// sigma = exp(clamp(raw, -15, 15)); the remaining outputs form the embedding.
template <class S>
void density_forward_into(std::span<const S> gamma_hyb, const MlpParams<S>& params, FieldCache<S>& cache) {
  const auto out = mlp_forward<S>(params, gamma_hyb, cache.density);
  cache.sigma_raw = out[0];
  const S clamped = std::clamp(out[0], S(-kSigmaRawClamp), S(kSigmaRawClamp));
  cache.sigma = std::exp(clamped);
  std::copy(out.begin() + 1, out.end(), cache.color_input.begin());
}

// Expects the embedding already in cache.color_input[0..E) (density_forward_into
// puts it there); fills the direction features and evaluates the color head.
template <class S>
void color_forward_into(std::span<const S> sh, const MlpParams<S>& params, FieldCache<S>& cache) {
  const std::size_t e = cache.color_input.size() - static_cast<std::size_t>(kShDim);
  std::copy(sh.begin(), sh.end(), cache.color_input.begin() + static_cast<std::ptrdiff_t>(e));
  const auto out = mlp_forward<S>(params, cache.color_input, cache.color);
  for (std::size_t c = 0; c < 3; ++c) cache.rgb[c] = sigmoid(out[c]);
}

// Reverse pass through both heads. Accumulates into the gradient heads and
// writes dL/dgamma_hyb into `d_gamma`.
template <class S>
void field_backward(const MlpParams<S>& density_params, const MlpParams<S>& color_params, FieldCache<S>& cache,
                    S d_sigma, const Vec3<S>& d_color, MlpParams<S>& d_density, MlpParams<S>& d_color_params,
                    std::span<S> d_gamma) {
  if (!cache.density.valid || !cache.color.valid) throw std::logic_error("field_backward: missing forward cache");
  std::array<S, 3> d_logits{};
  for (std::size_t c = 0; c < 3; ++c) d_logits[c] = d_color[c] * cache.rgb[c] * (S(1) - cache.rgb[c]);
  mlp_backward<S>(color_params, cache.color, std::span<const S>(d_logits), d_color_params,
                  std::span<S>(cache.d_color_input));

  const bool inside = cache.sigma_raw > S(-kSigmaRawClamp) && cache.sigma_raw < S(kSigmaRawClamp);
  cache.d_density_out[0] = inside ? d_sigma * cache.sigma : S(0);
  std::copy(cache.d_color_input.begin(), cache.d_color_input.begin() + static_cast<std::ptrdiff_t>(
                                                                           cache.d_density_out.size() - 1),
            cache.d_density_out.begin() + 1);
  mlp_backward<S>(density_params, cache.density, std::span<const S>(cache.d_density_out), d_density, d_gamma);
}

template <class S>
FieldOutput<S> density_forward(std::span<const S> gamma_hyb, const MlpParams<S>& params) {
  MlpCache<S> mc(params);
  const auto out = mlp_forward<S>(params, gamma_hyb, mc);
  FieldOutput<S> r;
  r.sigma_raw = out[0];
  r.sigma = std::exp(std::clamp(out[0], S(-kSigmaRawClamp), S(kSigmaRawClamp)));
  r.embedding.assign(out.begin() + 1, out.end());
  return r;
}

template <class S>
Vec3<S> color_forward(std::span<const S> embedding, std::span<const S> sh, const MlpParams<S>& params) {
  if (embedding.size() + sh.size() != static_cast<std::size_t>(params.in_dim()))
    throw std::invalid_argument("color_forward: input dimension mismatch");
  std::vector<S> in(embedding.begin(), embedding.end());
  in.insert(in.end(), sh.begin(), sh.end());
  MlpCache<S> mc(params);
  const auto out = mlp_forward<S>(params, std::span<const S>(in), mc);
  return {sigmoid(out[0]), sigmoid(out[1]), sigmoid(out[2])};
}

}  // namespace hybfield
