// Copyright 2026 The hybfield Authors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "hybfield/encoding/cone.hpp"
#include "hybfield/encoding/hash_grid.hpp"
#include "hybfield/encoding/learnable_pe.hpp"
#include "hybfield/encoding/positional.hpp"

namespace hybfield {

// Encoding variants. `hybrid` is the full model; the others are the ablation
// rows: hash features only, unmodulated PE, and PE modulated by a weight
// network fed only hash features or only cone features.
enum class EncodingMode { hash_only, fixed_pe, lpe_hash_only, lpe_cone, hybrid };

inline constexpr std::array<EncodingMode, 5> kAllModes = {EncodingMode::hash_only, EncodingMode::fixed_pe,
                                                          EncodingMode::lpe_hash_only, EncodingMode::lpe_cone,
                                                          EncodingMode::hybrid};

inline std::string_view to_string(EncodingMode m) {
  switch (m) {
    case EncodingMode::hash_only: return "hash_only";
    case EncodingMode::fixed_pe: return "fixed_pe";
    case EncodingMode::lpe_hash_only: return "lpe_hash_only";
    case EncodingMode::lpe_cone: return "lpe_cone";
    case EncodingMode::hybrid: return "hybrid";
  }
  return "?";
}

inline EncodingMode parse_mode(std::string_view s) {
  for (EncodingMode m : kAllModes)
    if (to_string(m) == s) return m;
  throw std::invalid_argument("unknown encoding mode '" + std::string(s) + "'");
}

struct EncodingConfig {
  HashGridConfig grid;
  int n_freqs = 8;
  double cov_feature_scale = 16.0;
  EncodingMode mode = EncodingMode::hybrid;

  void validate() const {
    grid.validate();
    if (n_freqs < 1) throw std::invalid_argument("encoding: n_freqs must be >= 1");
    if (n_freqs > 30) throw std::invalid_argument("encoding: n_freqs must be <= 30");
    if (static_cast<double>(grid.n_min) > std::ldexp(1.0, n_freqs))
      throw std::invalid_argument("encoding: coarsest grid resolution n_min=" + std::to_string(grid.n_min) +
                                  " exceeds 2^n_freqs=" + std::to_string(1L << n_freqs));
    if (!(cov_feature_scale > 0.0) || !std::isfinite(cov_feature_scale))
      throw std::invalid_argument("encoding: cov_feature_scale must be positive");
  }

  int fine_dim() const { return grid.output_dim(); }
  int coarse_dim() const { return mode == EncodingMode::hash_only ? 0 : fixed_pe_dim(3, n_freqs); }
  int cov_pe_dim() const { return fixed_pe_dim(6, n_freqs); }
  int output_dim() const { return coarse_dim() + fine_dim(); }

  bool has_lpe() const {
    return mode == EncodingMode::lpe_hash_only || mode == EncodingMode::lpe_cone || mode == EncodingMode::hybrid;
  }
  bool lpe_uses_fine() const { return mode == EncodingMode::lpe_hash_only || mode == EncodingMode::hybrid; }
  bool lpe_uses_cone() const { return mode == EncodingMode::lpe_cone || mode == EncodingMode::hybrid; }

  int lpe_in_dim() const {
    if (!has_lpe()) return 0;
    return (lpe_uses_fine() ? fine_dim() : 0) + (lpe_uses_cone() ? cov_pe_dim() : 0);
  }
  int lpe_out_dim() const { return has_lpe() ? fixed_pe_dim(3, n_freqs) : 0; }
};

// Per-sample intermediates kept for the backward pass.
template <class S>
struct EncodingCache {
  std::vector<LevelCorners<S>> corners;
  std::vector<S> fine, pe_x, pe_cov, lpe_in, alpha, d_fine, dz;

  EncodingCache() = default;
  explicit EncodingCache(const EncodingConfig& c)
      : corners(static_cast<std::size_t>(c.grid.n_levels)),
        fine(static_cast<std::size_t>(c.fine_dim())),
        pe_x(static_cast<std::size_t>(fixed_pe_dim(3, c.n_freqs))),
        pe_cov(static_cast<std::size_t>(c.cov_pe_dim())),
        lpe_in(static_cast<std::size_t>(c.lpe_in_dim())),
        alpha(static_cast<std::size_t>(c.lpe_out_dim())),
        d_fine(static_cast<std::size_t>(c.fine_dim())),
        dz(static_cast<std::size_t>(c.lpe_out_dim())) {}
};

// gamma_p(scale * triu(Sigma)).
template <class S>
void cone_features_into(const std::array<double, 6>& cov_triu, double scale, int n_freqs, std::span<S> out) {
  std::array<S, 6> scaled{};
  for (std::size_t i = 0; i < 6; ++i) scaled[i] = static_cast<S>(scale * cov_triu[i]);
  fixed_pe_into<S>(std::span<const S>(scaled), n_freqs, out);
}

// gamma_hyb = [gamma_coarse, gamma_fine]; the layout of gamma_coarse depends on
// the mode (absent for hash_only, raw gamma_p(x) for fixed_pe, modulated
// otherwise).
template <class S>
void hybrid_encode_into(const EncodingConfig& cfg, const HashGridParams<S>& grid, const LpeParams<S>& lpe,
                        const Vec3<S>& x, const std::array<double, 6>& cov_triu, std::span<S> out,
                        EncodingCache<S>& cache) {
  const Vec3<S> xc = detail::clamp_unit(x);
  hash_grid_encode_into<S>(grid, xc, cache.fine, cache.corners);
  const std::size_t coarse = static_cast<std::size_t>(cfg.coarse_dim());
  std::copy(cache.fine.begin(), cache.fine.end(), out.begin() + static_cast<std::ptrdiff_t>(coarse));
  if (cfg.mode == EncodingMode::hash_only) return;

  fixed_pe_into<S>(std::span<const S>(xc), cfg.n_freqs, cache.pe_x);
  if (cfg.mode == EncodingMode::fixed_pe) {
    std::copy(cache.pe_x.begin(), cache.pe_x.end(), out.begin());
    return;
  }

  std::size_t pos = 0;
  if (cfg.lpe_uses_fine()) {
    std::copy(cache.fine.begin(), cache.fine.end(), cache.lpe_in.begin());
    pos += cache.fine.size();
  }
  if (cfg.lpe_uses_cone()) {
    cone_features_into<S>(cov_triu, cfg.cov_feature_scale, cfg.n_freqs, cache.pe_cov);
    std::copy(cache.pe_cov.begin(), cache.pe_cov.end(), cache.lpe_in.begin() + static_cast<std::ptrdiff_t>(pos));
  }
  learnable_pe_into<S>(lpe, cache.lpe_in, cache.pe_x, cache.alpha, out.first(coarse));
}

// Accumulates parameter gradients of the hash tables and the weight network
// given dL/dgamma_hyb. Gradients reach the tables through both the direct
// fine features and the weight-network input.
template <class S>
void hybrid_encode_backward(const EncodingConfig& cfg, const LpeParams<S>& lpe, EncodingCache<S>& cache,
                            std::span<const S> d_out, std::span<S> d_grid, std::span<S> d_lpe_weight,
                            std::span<S> d_lpe_bias) {
  const std::size_t coarse = static_cast<std::size_t>(cfg.coarse_dim());
  std::copy(d_out.begin() + static_cast<std::ptrdiff_t>(coarse), d_out.end(), cache.d_fine.begin());
  if (cfg.has_lpe()) {
    std::span<S> d_in = cfg.lpe_uses_fine() ? std::span<S>(cache.d_fine) : std::span<S>();
    learnable_pe_backward<S>(lpe, cache.lpe_in, cache.pe_x, cache.alpha, d_out.first(coarse), d_lpe_weight,
                             d_lpe_bias, d_in, cache.dz);
  }
  hash_grid_backward_into<S>(cfg.grid, cache.corners, cache.d_fine, d_grid);
}

// Convenience form of the coarse branch for a single point.
template <class S>
std::vector<S> learnable_pe(const Vec3<S>& x, std::span<const S> gamma_fine, const GaussianFrustum& frustum,
                            const LpeParams<S>& params, const EncodingConfig& cfg) {
  if (!cfg.has_lpe()) throw std::invalid_argument("learnable_pe: mode has no weight network");
  if (params.in_dim != cfg.lpe_in_dim() || params.out_dim != cfg.lpe_out_dim())
    throw std::invalid_argument("learnable_pe: parameter shape does not match encoding config");
  if (gamma_fine.size() != static_cast<std::size_t>(cfg.fine_dim()))
    throw std::invalid_argument("learnable_pe: gamma_fine has wrong length");
  std::vector<S> pe_x(static_cast<std::size_t>(fixed_pe_dim(3, cfg.n_freqs)));
  fixed_pe_into<S>(std::span<const S>(x), cfg.n_freqs, pe_x);
  std::vector<S> in;
  if (cfg.lpe_uses_fine()) in.insert(in.end(), gamma_fine.begin(), gamma_fine.end());
  if (cfg.lpe_uses_cone()) {
    std::vector<S> pc(static_cast<std::size_t>(cfg.cov_pe_dim()));
    cone_features_into<S>(frustum.cov_triu, cfg.cov_feature_scale, cfg.n_freqs, pc);
    in.insert(in.end(), pc.begin(), pc.end());
  }
  std::vector<S> alpha(pe_x.size()), out(pe_x.size());
  learnable_pe_into<S>(params, in, pe_x, alpha, out);
  return out;
}

template <class S>
std::vector<S> hybrid_encode(const Vec3<S>& x, const HashGridParams<S>& grid, const GaussianFrustum& frustum,
                             const LpeParams<S>& lpe, const EncodingConfig& cfg) {
  // Modes without a weight network ignore `lpe` entirely.
  if (cfg.has_lpe() && (lpe.in_dim != cfg.lpe_in_dim() || lpe.out_dim != cfg.lpe_out_dim()))
    throw std::invalid_argument("hybrid_encode: weight-network shape does not match encoding config");
  std::vector<S> out(static_cast<std::size_t>(cfg.output_dim()));
  EncodingCache<S> cache(cfg);
  hybrid_encode_into<S>(cfg, grid, lpe, x, frustum.cov_triu, out, cache);
  return out;
}

}  // namespace hybfield
