// Copyright 2026 The hybfield Authors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hybfield/errors.hpp"
#include "hybfield/model.hpp"

namespace hybfield {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.99;
  double eps_mlp = 1e-8;
  double eps_encoding = 1e-15;
};

// First/second moments shaped like the parameters, plus the step count.
template <class S>
struct AdamState {
  FieldParams<S> m;
  FieldParams<S> v;
  std::uint64_t step = 0;

  AdamState() = default;
  explicit AdamState(const ModelConfig& cfg) : m(cfg), v(cfg) {}
};

// One bias-corrected Adam update on a flat tensor.
template <class S>
void adam_update(std::span<S> param, std::span<const S> grad, std::span<S> m, std::span<S> v, double lr, double beta1,
                 double beta2, double eps, std::uint64_t t) {
  const double c1 = 1.0 - std::pow(beta1, static_cast<double>(t));
  const double c2 = 1.0 - std::pow(beta2, static_cast<double>(t));
  const S b1 = static_cast<S>(beta1), b2 = static_cast<S>(beta2);
  const S step = static_cast<S>(lr / c1);
  const S inv_c2 = static_cast<S>(1.0 / c2);
  const S e = static_cast<S>(eps);
  for (std::size_t i = 0; i < param.size(); ++i) {
    const S g = grad[i];
    m[i] = b1 * m[i] + (S(1) - b1) * g;
    v[i] = b2 * v[i] + (S(1) - b2) * g * g;
    param[i] -= step * m[i] / (std::sqrt(v[i] * inv_c2) + e);
  }
}

// Full (non-lazy) update of every tensor: parameters that received no
// gradient this step still decay their moments. Hash tables use
// eps_encoding, everything else eps_mlp. Throws NonFiniteError, leaving
// parameters and state untouched, if any gradient is NaN or infinite.
template <class S>
void adam_step(FieldParams<S>& params, FieldParams<S>& grads, AdamState<S>& state, double lr, const AdamConfig& cfg) {
  auto p = params.tensors();
  auto g = grads.tensors();
  auto m = state.m.tensors();
  auto v = state.v.tensors();
  if (p.size() != g.size() || p.size() != m.size() || p.size() != v.size())
    throw std::invalid_argument("adam_step: tensor layout mismatch");
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (g[i].data.size() != p[i].data.size() || m[i].data.size() != p[i].data.size())
      throw std::invalid_argument("adam_step: shape mismatch in " + p[i].name);
    for (std::size_t k = 0; k < g[i].data.size(); ++k)
      if (!std::isfinite(static_cast<double>(g[i].data[k])))
        throw NonFiniteError("adam_step: non-finite gradient in " + g[i].name + "[" + std::to_string(k) +
                             "] at step " + std::to_string(state.step + 1));
  }
  const std::uint64_t t = state.step + 1;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double eps = p[i].group == ParamGroup::hash_grid ? cfg.eps_encoding : cfg.eps_mlp;
    adam_update<S>(p[i].data, g[i].data, m[i].data, v[i].data, lr, cfg.beta1, cfg.beta2, eps, t);
  }
  state.step = t;
}

// Learning rate after applying every (milestone, multiplier) whose
// milestone is <= step.
inline double lr_at(std::uint64_t step, double base_lr, const std::vector<std::pair<std::uint64_t, double>>& milestones) {
  double lr = base_lr;
  for (const auto& [at, mult] : milestones)
    if (step >= at) lr *= mult;
  return lr;
}

// x1/3 at 50% and again at 75% of the run.
inline std::vector<std::pair<std::uint64_t, double>> default_milestones(std::uint64_t total_steps) {
  return {{total_steps / 2, 1.0 / 3.0}, {(3 * total_steps) / 4, 1.0 / 3.0}};
}

}  // namespace hybfield
