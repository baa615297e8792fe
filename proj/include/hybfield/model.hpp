// Copyright 2026 The hybfield Authors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "hybfield/encoding/hybrid.hpp"
#include "hybfield/encoding/spherical_harmonics.hpp"
#include "hybfield/network/field.hpp"
#include "hybfield/render/composite.hpp"
#include "hybfield/render/ray.hpp"

namespace hybfield {

struct ModelConfig {
  EncodingConfig encoding;
  MlpConfig mlp;

  void validate() const {
    encoding.validate();
    mlp.validate();
  }
};

enum class ParamGroup { hash_grid, lpe, density, color };

inline constexpr std::array<ParamGroup, 4> kParamGroups = {ParamGroup::hash_grid, ParamGroup::lpe,
                                                           ParamGroup::density, ParamGroup::color};

inline std::string_view to_string(ParamGroup g) {
  switch (g) {
    case ParamGroup::hash_grid: return "hash_grid";
    case ParamGroup::lpe: return "lpe";
    case ParamGroup::density: return "density";
    case ParamGroup::color: return "color";
  }
  return "?";
}

inline ParamGroup parse_group(std::string_view s) {
  for (ParamGroup g : kParamGroups)
    if (to_string(g) == s) return g;
  throw std::invalid_argument("unknown parameter group '" + std::string(s) + "'");
}

template <class S>
struct TensorRef {
  std::string name;
  ParamGroup group;
  std::span<S> data;
};

// Parameter counts per group, computable without allocating the tables.
struct ParamCounts {
  std::uint64_t hash_grid = 0, lpe = 0, density = 0, color = 0;
  std::uint64_t total() const { return hash_grid + lpe + density + color; }
  std::uint64_t encoding() const { return hash_grid + lpe; }
};

inline ParamCounts param_counts(const ModelConfig& cfg) {
  cfg.validate();
  ParamCounts c;
  c.hash_grid = hash_grid_param_count(cfg.encoding.grid);
  const auto in = static_cast<std::uint64_t>(cfg.encoding.lpe_in_dim());
  const auto out = static_cast<std::uint64_t>(cfg.encoding.lpe_out_dim());
  c.lpe = in * out + out;
  c.density = cfg.mlp.density_shape(cfg.encoding.output_dim()).param_count();
  c.color = cfg.mlp.color_shape().param_count();
  return c;
}

// All trainable state of the field. Gradients and optimizer moments reuse
// this type, so every buffer has the same layout as the parameters.
template <class S>
struct FieldParams {
  ModelConfig config;
  HashGridParams<S> grid;
  LpeParams<S> lpe;
  MlpParams<S> density;
  MlpParams<S> color;

  FieldParams() = default;

  // Zero-filled parameters of the right shapes.
  explicit FieldParams(const ModelConfig& cfg)
      : config(cfg),
        grid((cfg.validate(), cfg.encoding.grid)),
        lpe(cfg.encoding.lpe_in_dim(), cfg.encoding.lpe_out_dim()),
        density(make_mlp<S>(cfg.mlp.density_shape(cfg.encoding.output_dim()))),
        color(make_mlp<S>(cfg.mlp.color_shape())) {}

  static FieldParams initialized(const ModelConfig& cfg, std::uint64_t seed) {
    FieldParams p(cfg);
    std::mt19937_64 rng(seed);
    p.grid.init_uniform(rng);
    if (!p.lpe.empty()) p.lpe.init_fade_in(rng);
    p.density = init_mlp<S>(cfg.mlp.density_shape(cfg.encoding.output_dim()), rng());
    p.color = init_mlp<S>(cfg.mlp.color_shape(), rng());
    return p;
  }

  // Tensors in checkpoint order.
  std::vector<TensorRef<S>> tensors() {
    std::vector<TensorRef<S>> t;
    t.push_back({"hash_grid.tables", ParamGroup::hash_grid, std::span<S>(grid.data)});
    if (!lpe.empty()) {
      t.push_back({"lpe.weight", ParamGroup::lpe, std::span<S>(lpe.weight)});
      t.push_back({"lpe.bias", ParamGroup::lpe, std::span<S>(lpe.bias)});
    }
    for (std::size_t l = 0; l < density.layers.size(); ++l) {
      t.push_back({"density." + std::to_string(l) + ".weight", ParamGroup::density,
                   std::span<S>(density.layers[l].weight)});
      t.push_back({"density." + std::to_string(l) + ".bias", ParamGroup::density,
                   std::span<S>(density.layers[l].bias)});
    }
    for (std::size_t l = 0; l < color.layers.size(); ++l) {
      t.push_back({"color." + std::to_string(l) + ".weight", ParamGroup::color, std::span<S>(color.layers[l].weight)});
      t.push_back({"color." + std::to_string(l) + ".bias", ParamGroup::color, std::span<S>(color.layers[l].bias)});
    }
    return t;
  }

  std::size_t size() const { return grid.size() + lpe.size() + density.size() + color.size(); }

  void set_zero() {
    for (auto& t : tensors()) std::fill(t.data.begin(), t.data.end(), S(0));
  }

  // Adds `other` into this, tensor by tensor, in a fixed order.
  void accumulate(FieldParams& other) {
    auto mine = tensors();
    auto theirs = other.tensors();
    for (std::size_t i = 0; i < mine.size(); ++i)
      for (std::size_t k = 0; k < mine[i].data.size(); ++k) mine[i].data[k] += theirs[i].data[k];
  }
};

// Per-ray scratch for forward and backward; allocate once per worker.
template <class S>
struct RayWorkspace {
  int n_samples = 0;
  std::vector<EncodingCache<S>> enc;
  std::vector<FieldCache<S>> field;
  std::vector<std::vector<S>> gamma;
  std::vector<S> sigma, delta, d_sigma, d_gamma;
  std::vector<Vec3<S>> rgb, d_rgb;
  std::array<S, kShDim> sh{};
  RenderOutput<S> out;

  RayWorkspace() = default;
  RayWorkspace(const FieldParams<S>& p, int n) : n_samples(n) {
    const auto ns = static_cast<std::size_t>(n);
    enc.assign(ns, EncodingCache<S>(p.config.encoding));
    field.assign(ns, FieldCache<S>(p.density, p.color));
    gamma.assign(ns, std::vector<S>(static_cast<std::size_t>(p.config.encoding.output_dim())));
    sigma.resize(ns);
    delta.resize(ns);
    d_sigma.resize(ns);
    rgb.resize(ns);
    d_rgb.resize(ns);
    d_gamma.resize(static_cast<std::size_t>(p.config.encoding.output_dim()));
  }
};

// Field evaluation and compositing for one ray, caching everything the
// backward pass needs.
template <class S>
Vec3<S> render_ray(const FieldParams<S>& p, const Ray& ray, const RaySamples& samples, const Vec3<S>& background,
                   RayWorkspace<S>& ws) {
  const auto& ecfg = p.config.encoding;
  const std::size_t n = samples.size();
  if (static_cast<int>(n) != ws.n_samples) throw std::invalid_argument("render_ray: workspace sample count mismatch");
  sh_encode_into<S>(vec_cast<S>(ray.direction), std::span<S>(ws.sh));
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3<S> x = vec_cast<S>(ray.origin + samples.t[i] * ray.direction);
    hybrid_encode_into<S>(ecfg, p.grid, p.lpe, x, samples.frustums[i].cov_triu, ws.gamma[i], ws.enc[i]);
    auto& fc = ws.field[i];
    density_forward_into<S>(ws.gamma[i], p.density, fc);
    color_forward_into<S>(std::span<const S>(ws.sh), p.color, fc);
    ws.sigma[i] = fc.sigma;
    ws.rgb[i] = fc.rgb;
    ws.delta[i] = static_cast<S>(samples.delta[i]);
  }
  composite_into<S>(ws.sigma, ws.rgb, ws.delta, background, ws.out);
  return ws.out.color;
}

// Accumulates dL/dparams for one ray given dL/dC.
template <class S>
void render_ray_backward(const FieldParams<S>& p, RayWorkspace<S>& ws, const Vec3<S>& background,
                         const Vec3<S>& d_color, FieldParams<S>& grads) {
  composite_backward_into<S>(ws.out, ws.rgb, ws.delta, background, d_color, ws.d_sigma, ws.d_rgb);
  const auto& ecfg = p.config.encoding;
  for (std::size_t i = 0; i < ws.sigma.size(); ++i) {
    field_backward<S>(p.density, p.color, ws.field[i], ws.d_sigma[i], ws.d_rgb[i], grads.density, grads.color,
                      ws.d_gamma);
    hybrid_encode_backward<S>(ecfg, p.lpe, ws.enc[i], ws.d_gamma, grads.grid.data, grads.lpe.weight,
                              grads.lpe.bias);
  }
}

}  // namespace hybfield
