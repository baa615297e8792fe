// Copyright 2026 The hybfield Authors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "hybfield/config.hpp"
#include "hybfield/data/dataset.hpp"
#include "hybfield/model.hpp"

namespace hybfield {

// Finite-difference verification of every hand-written backward pass. The
// analytic gradients are computed in double; the reference uses the
// fourth-order central stencil
//   f'(p) ~ (f(p-2h) - 8 f(p-h) + 8 f(p+h) - f(p+2h)) / 12h
// with the loss re-evaluated in long double. The extra precision allows a
// step small enough that the stencil almost never straddles a ReLU kink.
// Relative error is |a - n| / max(|a|, |n|, floor).

inline constexpr double kGradcheckUnitThreshold = 1e-5;
inline constexpr double kGradcheckPipelineThreshold = 1e-4;

struct GradcheckOptions {
  double step = 0x1p-23;  // ~1.2e-7
  double floor = 1e-6;
  std::uint64_t seed = 7;
  std::size_t max_checks_per_tensor = 48;
  // Test hook: scale the analytic gradient of this group by 1.01 to confirm
  // the harness notices a broken backward.
  std::optional<std::string> corrupt;
};

struct GradcheckEntry {
  std::string name;   // tensor or check name
  std::string group;  // hash_grid, lpe, density, color, composite
  double worst = 0.0;
  std::size_t checked = 0;
  double threshold = 0.0;
  bool passed() const { return worst <= threshold; }
};

struct GradcheckReport {
  std::string scale;
  std::vector<GradcheckEntry> entries;

  bool passed() const {
    return std::all_of(entries.begin(), entries.end(), [](const auto& e) { return e.passed(); });
  }
  double worst() const {
    double w = 0.0;
    for (const auto& e : entries) w = std::max(w, e.worst);
    return w;
  }
  // Worst error per group, in first-seen order.
  std::vector<std::pair<std::string, double>> by_group() const {
    std::vector<std::pair<std::string, double>> out;
    for (const auto& e : entries) {
      auto it = std::find_if(out.begin(), out.end(), [&](const auto& p) { return p.first == e.group; });
      if (it == out.end()) out.emplace_back(e.group, e.worst);
      else it->second = std::max(it->second, e.worst);
    }
    return out;
  }
  std::vector<std::string> failed_groups() const {
    std::vector<std::string> out;
    for (const auto& e : entries)
      if (!e.passed() && std::find(out.begin(), out.end(), e.group) == out.end()) out.push_back(e.group);
    return out;
  }
};

namespace detail {

inline double rel_error(double a, double n, double floor) {
  return std::abs(a - n) / std::max({std::abs(a), std::abs(n), floor});
}

// Entries to probe: evenly spaced over those with a nonzero analytic
// gradient, plus a few with a zero one.
inline std::vector<std::size_t> probe_indices(std::span<const double> analytic, std::size_t budget, std::mt19937_64& rng) {
  std::vector<std::size_t> nonzero, zero;
  for (std::size_t i = 0; i < analytic.size(); ++i) (analytic[i] != 0.0 ? nonzero : zero).push_back(i);
  std::vector<std::size_t> out;
  const std::size_t nz_budget = zero.empty() ? budget : budget - budget / 8;
  if (nonzero.size() <= nz_budget) {
    out = nonzero;
  } else {
    for (std::size_t k = 0; k < nz_budget; ++k) out.push_back(nonzero[k * nonzero.size() / nz_budget]);
  }
  std::shuffle(zero.begin(), zero.end(), rng);
  for (std::size_t k = 0; k < zero.size() && out.size() < budget; ++k) out.push_back(zero[k]);
  return out;
}

using Wide = long double;
using WideLoss = std::function<Wide()>;

// `p` stays a double; the stencil uses the realized steps, which are exact
// differences of doubles.
inline double numeric_derivative(double& p, double h, const WideLoss& loss) {
  const double p0 = p;
  const double pp1 = p0 + h, pm1 = p0 - h, pp2 = p0 + 2 * h, pm2 = p0 - 2 * h;
  p = pp1;
  const Wide f1 = loss();
  p = pm1;
  const Wide fm1 = loss();
  p = pp2;
  const Wide f2 = loss();
  p = pm2;
  const Wide fm2 = loss();
  p = p0;
  const Wide d1 = (f1 - fm1) / (Wide(pp1) - Wide(pm1));
  const Wide d2 = (f2 - fm2) / (Wide(pp2) - Wide(pm2));
  return static_cast<double>((4 * d1 - d2) / 3);
}

template <class T, class S>
std::vector<T> widen(const std::vector<S>& v) {
  return std::vector<T>(v.begin(), v.end());
}

inline MlpParams<Wide> widen(const MlpParams<double>& m) {
  MlpParams<Wide> w;
  for (const auto& l : m.layers) {
    DenseLayer<Wide> d;
    d.in_dim = l.in_dim;
    d.out_dim = l.out_dim;
    d.weight = widen<Wide>(l.weight);
    d.bias = widen<Wide>(l.bias);
    w.layers.push_back(std::move(d));
  }
  return w;
}

inline LpeParams<Wide> widen(const LpeParams<double>& p) {
  LpeParams<Wide> w(p.in_dim, p.out_dim);
  w.weight = widen<Wide>(p.weight);
  w.bias = widen<Wide>(p.bias);
  return w;
}

inline HashGridParams<Wide> widen(const HashGridParams<double>& p) {
  HashGridParams<Wide> w(p.config);
  w.data = widen<Wide>(p.data);
  return w;
}

inline FieldParams<Wide> widen(const FieldParams<double>& p) {
  FieldParams<Wide> w;
  w.config = p.config;
  w.grid = widen(p.grid);
  w.lpe = widen(p.lpe);
  w.density = widen(p.density);
  w.color = widen(p.color);
  return w;
}

template <class T>
Vec3<T> widen(const Vec3<double>& v) {
  return {T(v[0]), T(v[1]), T(v[2])};
}

class Checker {
 public:
  Checker(const GradcheckOptions& opt, double threshold, GradcheckReport& report)
      : opt_(opt), threshold_(threshold), report_(report), rng_(opt.seed ^ 0xC0FFEEull) {}

  void check(const std::string& name, const std::string& group, std::span<double> param,
             std::span<const double> analytic, const WideLoss& loss) {
    const double scale = opt_.corrupt && *opt_.corrupt == group ? 1.01 : 1.0;
    GradcheckEntry e{name, group, 0.0, 0, threshold_};
    for (std::size_t i : probe_indices(analytic, opt_.max_checks_per_tensor, rng_)) {
      const double n = numeric_derivative(param[i], opt_.step, loss);
      e.worst = std::max(e.worst, rel_error(scale * analytic[i], n, opt_.floor));
      ++e.checked;
    }
    report_.entries.push_back(e);
  }

 private:
  GradcheckOptions opt_;
  double threshold_;
  GradcheckReport& report_;
  std::mt19937_64 rng_;
};

inline void fill_uniform(std::span<double> v, double bound, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> d(-bound, bound);
  for (auto& x : v) x = d(rng);
}

template <class T, class U>
T dot_span(std::span<const T> a, std::span<const U> b) {
  T s = T(0);
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * T(b[i]);
  return s;
}

}  // namespace detail

// Reduced model used by the harness: small tables (mixing dense and hashed
// levels), few frequencies, narrow MLPs. The mode and depth follow `base`.
inline ModelConfig gradcheck_micro_model(const ModelConfig& base) {
  ModelConfig m = base;
  m.encoding.grid.n_min = 2;
  m.encoding.grid.n_max = 16;
  m.encoding.grid.n_levels = 4;
  m.encoding.grid.table_size = 1u << 6;
  m.encoding.grid.feat_dim = 2;
  m.encoding.n_freqs = 4;
  m.mlp.hidden_width = 16;
  return m;
}

// Random parameters with magnitudes large enough that every nonlinearity
// is exercised (not just its linear regime near zero).
inline FieldParams<double> gradcheck_params(const ModelConfig& cfg, std::uint64_t seed) {
  FieldParams<double> p = FieldParams<double>::initialized(cfg, seed);
  std::mt19937_64 rng(seed + 1);
  detail::fill_uniform(p.grid.data, 0.5, rng);
  detail::fill_uniform(p.lpe.weight, 0.5, rng);
  detail::fill_uniform(p.lpe.bias, 0.2, rng);
  for (auto* mlp : {&p.density, &p.color})
    for (auto& l : mlp->layers) detail::fill_uniform(l.bias, 0.1, rng);
  return p;
}

// Each backward in isolation: hash grid, weight network, both heads,
// compositing, and the assembled encoding.
inline GradcheckReport gradcheck_unit(const ModelConfig& base, const GradcheckOptions& opt = {}) {
  using detail::Wide;
  using detail::widen;
  GradcheckReport rep;
  rep.scale = "unit";
  detail::Checker chk(opt, kGradcheckUnitThreshold, rep);
  const ModelConfig cfg = gradcheck_micro_model(base);
  const auto& ecfg = cfg.encoding;
  FieldParams<double> p = gradcheck_params(cfg, opt.seed);
  std::mt19937_64 rng(opt.seed);
  std::uniform_real_distribution<double> unit(0.02, 0.98);

  // Hash grid: L = sum over points of <u, encode(x)>.
  {
    std::vector<Vec3<double>> xs(3);
    for (auto& x : xs) x = {unit(rng), unit(rng), unit(rng)};
    std::vector<double> u(static_cast<std::size_t>(ecfg.fine_dim()));
    detail::fill_uniform(u, 1.0, rng);
    auto loss = [&]() -> Wide {
      const auto grid = widen(p.grid);
      Wide s = 0;
      for (const auto& x : xs)
        s += detail::dot_span<Wide, double>(hash_grid_encode<Wide>(widen<Wide>(x), grid), u);
      return s;
    };
    std::vector<double> g(p.grid.size(), 0.0);
    std::vector<LevelCorners<double>> corners(static_cast<std::size_t>(ecfg.grid.n_levels));
    std::vector<double> feat(u.size());
    for (const auto& x : xs) {
      hash_grid_encode_into<double>(p.grid, x, feat, corners);
      hash_grid_backward_into<double>(ecfg.grid, corners, u, g);
    }
    chk.check("hash_grid.tables", "hash_grid", p.grid.data, g, loss);
  }

  // Weight network alone: L = <u, gamma_p(x) * tanh(W in + b)>.
  {
    const int in_dim = 12, out_dim = fixed_pe_dim(3, ecfg.n_freqs);
    LpeParams<double> lp(in_dim, out_dim);
    detail::fill_uniform(lp.weight, 0.5, rng);
    detail::fill_uniform(lp.bias, 0.3, rng);
    std::vector<double> in(static_cast<std::size_t>(in_dim)), pe(static_cast<std::size_t>(out_dim)),
        u(static_cast<std::size_t>(out_dim));
    detail::fill_uniform(in, 1.0, rng);
    detail::fill_uniform(pe, 1.0, rng);
    detail::fill_uniform(u, 1.0, rng);
    auto loss = [&]() -> Wide {
      const auto w = widen(lp);
      const auto win = widen<Wide>(in), wpe = widen<Wide>(pe);
      std::vector<Wide> alpha(u.size()), out(u.size());
      learnable_pe_into<Wide>(w, win, wpe, alpha, out);
      return detail::dot_span<Wide, double>(out, u);
    };
    std::vector<double> alpha(u.size()), out(u.size());
    learnable_pe_into<double>(lp, in, pe, alpha, out);
    std::vector<double> dw(lp.weight.size(), 0.0), db(lp.bias.size(), 0.0), din(in.size(), 0.0), dz(u.size());
    learnable_pe_backward<double>(lp, in, pe, alpha, u, dw, db, din, dz);
    chk.check("lpe.weight", "lpe", lp.weight, dw, loss);
    chk.check("lpe.bias", "lpe", lp.bias, db, loss);
    chk.check("lpe.input", "lpe", in, din, loss);
  }

  // Density and color heads: L = a * sigma + <u, rgb>.
  {
    std::vector<double> gamma(static_cast<std::size_t>(ecfg.output_dim()));
    detail::fill_uniform(gamma, 1.0, rng);
    const Vec3<double> dir = normalized(Vec3<double>{0.3, -0.5, 0.8});
    const double a = 0.7;
    const Vec3<double> u{0.9, -0.4, 0.6};
    auto loss = [&]() -> Wide {
      const auto dp = widen(p.density), cp = widen(p.color);
      std::array<Wide, kShDim> sh{};
      sh_encode_into<Wide>(widen<Wide>(dir), std::span<Wide>(sh));
      FieldCache<Wide> fc(dp, cp);
      const auto wg = widen<Wide>(gamma);
      density_forward_into<Wide>(wg, dp, fc);
      color_forward_into<Wide>(std::span<const Wide>(sh), cp, fc);
      return Wide(a) * fc.sigma + dot(widen<Wide>(u), fc.rgb);
    };
    std::array<double, kShDim> sh{};
    sh_encode_into<double>(dir, std::span<double>(sh));
    FieldCache<double> fc(p.density, p.color);
    density_forward_into<double>(gamma, p.density, fc);
    color_forward_into<double>(std::span<const double>(sh), p.color, fc);
    FieldParams<double> g(cfg);
    std::vector<double> dgamma(gamma.size(), 0.0);
    field_backward<double>(p.density, p.color, fc, a, u, g.density, g.color, dgamma);
    for (std::size_t l = 0; l < p.density.layers.size(); ++l) {
      chk.check("density." + std::to_string(l) + ".weight", "density", p.density.layers[l].weight,
                g.density.layers[l].weight, loss);
      chk.check("density." + std::to_string(l) + ".bias", "density", p.density.layers[l].bias,
                g.density.layers[l].bias, loss);
    }
    for (std::size_t l = 0; l < p.color.layers.size(); ++l) {
      chk.check("color." + std::to_string(l) + ".weight", "color", p.color.layers[l].weight,
                g.color.layers[l].weight, loss);
      chk.check("color." + std::to_string(l) + ".bias", "color", p.color.layers[l].bias, g.color.layers[l].bias,
                loss);
    }
    chk.check("density.input", "density", gamma, dgamma, loss);
  }

  // Compositing: L = <u, C>.
  {
    const std::size_t n = 6;
    std::vector<double> sigma(n), delta(n, 0.15);
    std::vector<Vec3<double>> color(n);
    std::uniform_real_distribution<double> pos(0.1, 4.0);
    for (auto& s : sigma) s = pos(rng);
    for (auto& c : color) c = {unit(rng), unit(rng), unit(rng)};
    const Vec3<double> bg{0.8, 0.9, 1.0}, u{0.5, -0.3, 0.7};
    auto loss = [&]() -> Wide {
      std::vector<Vec3<Wide>> wc;
      for (const auto& c : color) wc.push_back(widen<Wide>(c));
      const auto ws = widen<Wide>(sigma), wd = widen<Wide>(delta);
      RenderOutput<Wide> out;
      composite_into<Wide>(ws, wc, wd, widen<Wide>(bg), out);
      return dot(widen<Wide>(u), out.color);
    };
    RenderOutput<double> out;
    composite_into<double>(sigma, color, delta, bg, out);
    std::vector<double> dsig(n);
    std::vector<Vec3<double>> dcol(n);
    composite_backward_into<double>(out, color, delta, bg, u, dsig, dcol);
    std::span<double> flat_color(color.front().data(), 3 * n);
    std::span<const double> flat_dcol(dcol.front().data(), 3 * n);
    chk.check("composite.sigma", "composite", sigma, dsig, loss);
    chk.check("composite.color", "composite", flat_color, flat_dcol, loss);
  }

  // Assembled encoding: L = <u, gamma_hyb(x, Sigma)> w.r.t. tables and W_p.
  {
    const Vec3<double> x{unit(rng), unit(rng), unit(rng)};
    const GaussianFrustum fr = cone_covariance({0.5, 0.5, -0.4}, normalized(Vec3<double>{0.1, 0.05, 1.0}), 0.6, 0.75,
                                               0.02);
    std::vector<double> u(static_cast<std::size_t>(ecfg.output_dim()));
    detail::fill_uniform(u, 1.0, rng);
    auto loss = [&]() -> Wide {
      const auto grid = widen(p.grid);
      const auto lpe = widen(p.lpe);
      EncodingCache<Wide> cache(ecfg);
      std::vector<Wide> out(u.size());
      hybrid_encode_into<Wide>(ecfg, grid, lpe, widen<Wide>(x), fr.cov_triu, out, cache);
      return detail::dot_span<Wide, double>(out, u);
    };
    EncodingCache<double> cache(ecfg);
    std::vector<double> out(u.size());
    hybrid_encode_into<double>(ecfg, p.grid, p.lpe, x, fr.cov_triu, out, cache);
    FieldParams<double> g(cfg);
    hybrid_encode_backward<double>(ecfg, p.lpe, cache, u, g.grid.data, g.lpe.weight, g.lpe.bias);
    chk.check("encoding.hash_grid", "hash_grid", p.grid.data, g.grid.data, loss);
    if (ecfg.has_lpe()) {
      chk.check("encoding.lpe.weight", "lpe", p.lpe.weight, g.lpe.weight, loss);
      chk.check("encoding.lpe.bias", "lpe", p.lpe.bias, g.lpe.bias, loss);
    }
  }
  return rep;
}

// Two rays in normalized coordinates through near-center pixels of two
// training-style cameras of `data`.
inline std::vector<Ray> gradcheck_rays(const DataConfig& data, double near, double far) {
  auto cams = orbit_cameras(2, data.camera_radius, data.width, data.height, data.camera_angle_x, 0.0);
  const SceneTransform tf = normalize_scene(cams, data.aabb_min, data.aabb_max);
  std::vector<Ray> rays;
  for (std::size_t i = 0; i < cams.size(); ++i) {
    const int u = data.width / 2 - 1 + static_cast<int>(i) * 2, v = data.height / 2;
    rays.push_back(tf.apply(generate_ray(cams[i], std::clamp(u, 0, data.width - 1), std::clamp(v, 0, data.height - 1),
                                         0.37, 0.61, near, far)));
  }
  return rays;
}

// Loss-to-parameter gradients through the whole model on two rays of four
// jittered samples each.
inline GradcheckReport gradcheck_pipeline(const RunConfig& run, const GradcheckOptions& opt = {}) {
  using detail::Wide;
  GradcheckReport rep;
  rep.scale = "pipeline";
  detail::Checker chk(opt, kGradcheckPipelineThreshold, rep);
  const ModelConfig cfg = gradcheck_micro_model(run.model);
  FieldParams<double> p = gradcheck_params(cfg, opt.seed);
  const auto rays = gradcheck_rays(run.data, run.render.near, run.render.far);
  const Vec3<double> bg = run.render.background;
  constexpr int kSamples = 4;
  std::mt19937_64 rng(opt.seed + 11);
  std::vector<RaySamples> samples;
  for (const auto& r : rays) samples.push_back(stratified_samples(r, kSamples, &rng));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<Vec3<double>> targets(rays.size());
  for (auto& t : targets) t = {unit(rng), unit(rng), unit(rng)};

  auto loss = [&]() -> Wide {
    const FieldParams<Wide> wp = detail::widen(p);
    RayWorkspace<Wide> ws(wp, kSamples);
    Wide total = 0;
    for (std::size_t r = 0; r < rays.size(); ++r) {
      const Vec3<Wide> c = render_ray<Wide>(wp, rays[r], samples[r], detail::widen<Wide>(bg), ws);
      for (std::size_t k = 0; k < 3; ++k) total += (c[k] - Wide(targets[r][k])) * (c[k] - Wide(targets[r][k]));
    }
    return total / Wide(rays.size());
  };
  RayWorkspace<double> ws(p, kSamples);
  FieldParams<double> g(cfg);
  for (std::size_t r = 0; r < rays.size(); ++r) {
    const Vec3<double> c = render_ray<double>(p, rays[r], samples[r], bg, ws);
    Vec3<double> d{};
    for (std::size_t k = 0; k < 3; ++k) d[k] = 2.0 * (c[k] - targets[r][k]) / static_cast<double>(rays.size());
    render_ray_backward<double>(p, ws, bg, d, g);
  }
  auto pt = p.tensors();
  auto gt = g.tensors();
  for (std::size_t i = 0; i < pt.size(); ++i)
    chk.check(pt[i].name, std::string(to_string(pt[i].group)), pt[i].data, gt[i].data, loss);
  return rep;
}

}  // namespace hybfield
