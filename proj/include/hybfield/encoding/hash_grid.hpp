// Copyright 2026 The hybfield Authors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "hybfield/math.hpp"

namespace hybfield {

// Geometry of the fine-level multiresolution feature grids.
struct HashGridConfig {
  int n_min = 180;
  int n_max = 2048;
  int n_levels = 8;
  std::uint32_t table_size = 1u << 19;
  int feat_dim = 2;

  void validate() const {
    if (n_levels < 1) throw std::invalid_argument("hash grid: n_levels must be >= 1");
    if (n_min < 1) throw std::invalid_argument("hash grid: n_min must be >= 1");
    if (n_max < n_min) throw std::invalid_argument("hash grid: n_max must be >= n_min");
    if (table_size == 0 || (table_size & (table_size - 1)) != 0)
      throw std::invalid_argument("hash grid: table_size must be a power of two");
    if (feat_dim < 1) throw std::invalid_argument("hash grid: feat_dim must be >= 1");
  }

  // Per-level growth factor b; 1 for a single level.
  double growth_factor() const {
    if (n_levels <= 1) return 1.0;
    return std::exp((std::log(static_cast<double>(n_max)) - std::log(static_cast<double>(n_min))) /
                    static_cast<double>(n_levels - 1));
  }

  int output_dim() const { return n_levels * feat_dim; }
};

// floor(N_min * b^l) for l = 0 .. L_f-1.
//
// Products that land within 1e-9 (relative) below an integer are rounded up so
// that exact schedules such as 16 * 2^l are not lost to the last bit of exp/log.
inline std::vector<int> level_resolutions(const HashGridConfig& config) {
  if (config.n_levels < 1) throw std::invalid_argument("level_resolutions: n_levels must be >= 1");
  config.validate();
  const double b = config.growth_factor();
  std::vector<int> res(static_cast<std::size_t>(config.n_levels));
  for (int l = 0; l < config.n_levels; ++l) {
    const double r = static_cast<double>(config.n_min) * std::pow(b, static_cast<double>(l));
    double f = std::floor(r);
    if (f + 1.0 - r < 1e-9 * r) f += 1.0;
    res[static_cast<std::size_t>(l)] = static_cast<int>(f);
  }
  return res;
}

inline constexpr std::array<std::uint32_t, 3> kHashPrimes = {1u, 2654435761u, 805459861u};

// XOR of coordinate-prime products, reduced modulo a power-of-two table size.
inline std::uint32_t spatial_hash(const std::array<std::uint32_t, 3>& cell, std::uint32_t table_size) {
  std::uint32_t h = 0;
  for (int i = 0; i < 3; ++i) h ^= cell[static_cast<std::size_t>(i)] * kHashPrimes[static_cast<std::size_t>(i)];
  return h & (table_size - 1u);
}

// Table entries (not scalars) used by level l: dense when the (N+1)^3 vertex
// lattice fits in the table, hashed otherwise.
inline std::uint64_t level_entry_count(int resolution, std::uint32_t table_size) {
  const std::uint64_t side = static_cast<std::uint64_t>(resolution) + 1;
  const std::uint64_t dense = side * side * side;
  return std::min<std::uint64_t>(dense, table_size);
}

inline bool level_is_dense(int resolution, std::uint32_t table_size) {
  const std::uint64_t side = static_cast<std::uint64_t>(resolution) + 1;
  return side * side * side <= table_size;
}

// Number of trainable scalars in the grid tables for a config.
inline std::uint64_t hash_grid_param_count(const HashGridConfig& config) {
  std::uint64_t total = 0;
  for (int r : level_resolutions(config)) total += level_entry_count(r, config.table_size);
  return total * static_cast<std::uint64_t>(config.feat_dim);
}

// The eight interpolation corners of one level: flat scalar offsets into the
// parameter array (pointing at the first of F features) and trilinear weights.
template <class S>
struct LevelCorners {
  std::array<std::uint64_t, 8> offset{};
  std::array<S, 8> weight{};
};

template <class S>
struct HashGridParams {
  HashGridConfig config;
  std::vector<int> resolutions;
  std::vector<std::uint64_t> level_offset;  // scalar offset of each level's table
  std::vector<S> data;

  HashGridParams() = default;

  explicit HashGridParams(const HashGridConfig& cfg) : config(cfg), resolutions(level_resolutions(cfg)) {
    std::uint64_t off = 0;
    for (int r : resolutions) {
      level_offset.push_back(off);
      off += level_entry_count(r, cfg.table_size) * static_cast<std::uint64_t>(cfg.feat_dim);
    }
    data.assign(static_cast<std::size_t>(off), S(0));
  }

  std::size_t size() const { return data.size(); }
  int output_dim() const { return config.output_dim(); }

  std::span<S> level_table(int l) {
    const auto begin = level_offset[static_cast<std::size_t>(l)];
    const auto end = l + 1 < config.n_levels ? level_offset[static_cast<std::size_t>(l) + 1] : data.size();
    return std::span<S>(data).subspan(begin, end - begin);
  }

  void init_uniform(std::mt19937_64& rng, double scale = 1e-4) {
    std::uniform_real_distribution<double> dist(-scale, scale);
    for (auto& v : data) v = static_cast<S>(dist(rng));
  }
};

namespace detail {

template <class S>
inline void level_corners(const HashGridConfig& cfg, int resolution, std::uint64_t level_offset,
                          const Vec3<S>& x, LevelCorners<S>& out) {
  const bool dense = level_is_dense(resolution, cfg.table_size);
  const std::uint64_t side = static_cast<std::uint64_t>(resolution) + 1;
  std::array<std::uint32_t, 3> base{};
  std::array<S, 3> frac{};
  for (int d = 0; d < 3; ++d) {
    const S pos = x[static_cast<std::size_t>(d)] * static_cast<S>(resolution);
    S cell = std::floor(pos);
    cell = std::clamp(cell, S(0), static_cast<S>(resolution - 1));
    base[static_cast<std::size_t>(d)] = static_cast<std::uint32_t>(cell);
    frac[static_cast<std::size_t>(d)] = pos - cell;
  }
  for (std::uint32_t c = 0; c < 8; ++c) {
    std::array<std::uint32_t, 3> v{};
    S w = S(1);
    for (int d = 0; d < 3; ++d) {
      const bool hi = ((c >> d) & 1u) != 0;
      v[static_cast<std::size_t>(d)] = base[static_cast<std::size_t>(d)] + (hi ? 1u : 0u);
      w *= hi ? frac[static_cast<std::size_t>(d)] : S(1) - frac[static_cast<std::size_t>(d)];
    }
    const std::uint64_t entry =
        dense ? v[0] + side * (v[1] + side * static_cast<std::uint64_t>(v[2])) : spatial_hash(v, cfg.table_size);
    out.offset[c] = level_offset + entry * static_cast<std::uint64_t>(cfg.feat_dim);
    out.weight[c] = w;
  }
}

template <class S>
inline Vec3<S> clamp_unit(const Vec3<S>& x) {
  for (S v : x)
    if (!std::isfinite(static_cast<double>(v))) throw std::invalid_argument("hash grid: non-finite input coordinate");
  return {std::clamp(x[0], S(0), S(1)), std::clamp(x[1], S(0), S(1)), std::clamp(x[2], S(0), S(1))};
}

}  // namespace detail

// Encodes x into `out` (L_f*F), recording the interpolation corners in
// `corners` (one per level) for the backward pass.
template <class S>
void hash_grid_encode_into(const HashGridParams<S>& params, const Vec3<S>& x, std::span<S> out,
                           std::span<LevelCorners<S>> corners) {
  const Vec3<S> xc = detail::clamp_unit(x);
  const int F = params.config.feat_dim;
  for (int l = 0; l < params.config.n_levels; ++l) {
    auto& lc = corners[static_cast<std::size_t>(l)];
    detail::level_corners(params.config, params.resolutions[static_cast<std::size_t>(l)],
                          params.level_offset[static_cast<std::size_t>(l)], xc, lc);
    S* o = out.data() + static_cast<std::size_t>(l * F);
    for (int k = 0; k < F; ++k) o[k] = S(0);
    for (int c = 0; c < 8; ++c) {
      const S w = lc.weight[static_cast<std::size_t>(c)];
      const S* feat = params.data.data() + lc.offset[static_cast<std::size_t>(c)];
      for (int k = 0; k < F; ++k) o[k] += w * feat[k];
    }
  }
}

// Scatter-adds weight * upstream into a dense gradient laid out like params.data.
template <class S>
void hash_grid_backward_into(const HashGridConfig& config, std::span<const LevelCorners<S>> corners,
                             std::span<const S> upstream, std::span<S> grad) {
  const int F = config.feat_dim;
  for (int l = 0; l < config.n_levels; ++l) {
    const auto& lc = corners[static_cast<std::size_t>(l)];
    const S* g = upstream.data() + static_cast<std::size_t>(l * F);
    for (int c = 0; c < 8; ++c) {
      S* dst = grad.data() + lc.offset[static_cast<std::size_t>(c)];
      const S w = lc.weight[static_cast<std::size_t>(c)];
      for (int k = 0; k < F; ++k) dst[k] += w * g[k];
    }
  }
}

template <class S>
std::vector<S> hash_grid_encode(const Vec3<S>& x, const HashGridParams<S>& params) {
  std::vector<S> out(static_cast<std::size_t>(params.output_dim()));
  std::vector<LevelCorners<S>> corners(static_cast<std::size_t>(params.config.n_levels));
  hash_grid_encode_into(params, x, std::span<S>(out), std::span<LevelCorners<S>>(corners));
  return out;
}

// Sparse parameter gradient: (flat scalar index into params.data, value), one
// entry per touched scalar in first-touch order; repeated hash hits are merged.
template <class S>
using SparseGrad = std::vector<std::pair<std::uint64_t, S>>;

template <class S>
SparseGrad<S> hash_grid_backward(const Vec3<S>& x, std::span<const S> upstream, const HashGridParams<S>& params) {
  if (upstream.size() != static_cast<std::size_t>(params.output_dim()))
    throw std::invalid_argument("hash_grid_backward: upstream gradient has " + std::to_string(upstream.size()) +
                                " entries, expected " + std::to_string(params.output_dim()));
  std::vector<S> scratch(static_cast<std::size_t>(params.output_dim()));
  std::vector<LevelCorners<S>> corners(static_cast<std::size_t>(params.config.n_levels));
  hash_grid_encode_into(params, x, std::span<S>(scratch), std::span<LevelCorners<S>>(corners));

  SparseGrad<S> out;
  const int F = params.config.feat_dim;
  for (int l = 0; l < params.config.n_levels; ++l) {
    const auto& lc = corners[static_cast<std::size_t>(l)];
    for (int c = 0; c < 8; ++c) {
      for (int k = 0; k < F; ++k) {
        const std::uint64_t idx = lc.offset[static_cast<std::size_t>(c)] + static_cast<std::uint64_t>(k);
        const S v = lc.weight[static_cast<std::size_t>(c)] * upstream[static_cast<std::size_t>(l * F + k)];
        auto it = std::find_if(out.begin(), out.end(), [idx](const auto& e) { return e.first == idx; });
        if (it == out.end())
          out.emplace_back(idx, v);
        else
          it->second += v;
      }
    }
  }
  return out;
}

}  // namespace hybfield
