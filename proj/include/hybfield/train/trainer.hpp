// Copyright 2026 The hybfield Authors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "hybfield/data/dataset.hpp"
#include "hybfield/errors.hpp"
#include "hybfield/eval/metrics.hpp"
#include "hybfield/model.hpp"
#include "hybfield/parallel.hpp"
#include "hybfield/render/renderer.hpp"
#include "hybfield/train/adam.hpp"

namespace hybfield {

struct TrainConfig {
  int batch_rays = 2048;
  std::uint64_t total_steps = 40000;
  double lr = 5e-3;
  AdamConfig adam;
  std::uint64_t seed = 0;
  // Empty means x1/3 at 50% and 75% of total_steps.
  std::vector<std::pair<std::uint64_t, double>> lr_milestones;
  std::string precision = "float";  // "float" (throughput) or "double" (oracle)
  int log_every = 100;
  int val_every = 0;  // 0: validate only at the start and the end
  int checkpoint_every = 0;

  void validate() const {
    if (batch_rays < 1) throw std::invalid_argument("train: batch_rays must be >= 1");
    if (!(lr > 0.0)) throw std::invalid_argument("train: lr must be positive");
    if (!(adam.beta1 >= 0.0 && adam.beta1 < 1.0) || !(adam.beta2 >= 0.0 && adam.beta2 < 1.0))
      throw std::invalid_argument("train: beta1/beta2 must lie in [0,1)");
    if (!(adam.eps_mlp > 0.0) || !(adam.eps_encoding > 0.0)) throw std::invalid_argument("train: eps must be positive");
    if (precision != "float" && precision != "double")
      throw std::invalid_argument("train: precision must be 'float' or 'double'");
    if (log_every < 1) throw std::invalid_argument("train: log_every must be >= 1");
    if (val_every < 0 || checkpoint_every < 0) throw std::invalid_argument("train: intervals must be >= 0");
  }

  std::vector<std::pair<std::uint64_t, double>> milestones() const {
    return lr_milestones.empty() ? default_milestones(total_steps) : lr_milestones;
  }
  double lr_at(std::uint64_t step) const { return hybfield::lr_at(step, lr, milestones()); }
};

struct MetricRecord {
  std::uint64_t step = 0;
  double lr = 0.0;
  std::optional<double> loss;
  std::optional<double> psnr_val;

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["step"] = step;
    j["lr"] = lr;
    j["loss"] = loss ? nlohmann::json(*loss) : nlohmann::json(nullptr);
    j["psnr_val"] = psnr_val ? nlohmann::json(*psnr_val) : nlohmann::json(nullptr);
    return j;
  }
};

// Mean per-view PSNR of deterministic renders against the split's targets.
template <class S>
double mean_psnr(const FieldParams<S>& params, const Dataset& ds, const RenderConfig& rc, int threads) {
  double sum = 0.0;
  for (std::size_t v = 0; v < ds.size(); ++v) sum += psnr(render_view<S>(params, ds, v, rc, threads), ds.targets[v]);
  return ds.empty() ? 0.0 : sum / static_cast<double>(ds.size());
}

// Sequential optimization loop. Randomness is drawn on the calling thread
// (one jitter seed per ray) and per-worker gradients are reduced in worker
// order, so a run is reproducible for a fixed seed and worker count.
template <class S>
class Trainer {
 public:
  Trainer(const ModelConfig& model, const RenderConfig& render, const TrainConfig& train, const Dataset& train_set,
          const Dataset* val_set = nullptr, int threads = 1)
      : render_(render),
        train_(train),
        train_set_(train_set),
        val_set_(val_set),
        threads_(std::max(1, threads)),
        params_(FieldParams<S>::initialized(model, train.seed)),
        adam_(model),
        rng_(train.seed ^ 0x9E3779B97F4A7C15ull) {
    render.validate();
    train.validate();
    if (train_set.empty()) throw ConfigError("trainer: empty training split");
    for (int w = 0; w < threads_; ++w) {
      grads_.emplace_back(model);
      workspaces_.emplace_back(params_, render.n_samples);
    }
  }

  FieldParams<S>& params() { return params_; }
  const FieldParams<S>& params() const { return params_; }
  AdamState<S>& adam() { return adam_; }
  std::uint64_t steps_done() const { return adam_.step; }

  // One iteration: sample, render, loss, backward, Adam. Returns the loss.
  double step() {
    const auto batch = sample_ray_batch(train_set_, train_.batch_rays, rng_);
    std::vector<std::uint64_t> ray_seeds(batch.size());
    for (auto& s : ray_seeds) s = rng_();

    std::vector<double> chunk_loss(static_cast<std::size_t>(threads_), 0.0);
    const Vec3<S> bg = vec_cast<S>(render_.background);
    const S inv_b = S(1) / static_cast<S>(batch.size());
    parallel_ranges(batch.size(), threads_, [&](int w, std::size_t begin, std::size_t end) {
      auto& g = grads_[static_cast<std::size_t>(w)];
      auto& ws = workspaces_[static_cast<std::size_t>(w)];
      g.set_zero();
      double loss = 0.0;
      for (std::size_t r = begin; r < end; ++r) {
        std::mt19937_64 jitter(ray_seeds[r]);
        const Ray ray = train_set_.ray(batch[r].view, batch[r].u, batch[r].v, batch[r].jx, batch[r].jy);
        const RaySamples samples = stratified_samples(ray, render_.n_samples, &jitter);
        const Vec3<S> c = render_ray<S>(params_, ray, samples, bg, ws);
        Vec3<S> d{};
        for (std::size_t k = 0; k < 3; ++k) {
          const S diff = c[k] - static_cast<S>(batch[r].target[k]);
          loss += static_cast<double>(diff * diff);
          d[k] = S(2) * diff * inv_b;
        }
        render_ray_backward<S>(params_, ws, bg, d, g);
      }
      chunk_loss[static_cast<std::size_t>(w)] = loss;
    });

    double loss = 0.0;
    for (double l : chunk_loss) loss += l;
    loss /= static_cast<double>(batch.size());
    if (!std::isfinite(loss))
      throw NonFiniteError("training loss became non-finite at step " + std::to_string(adam_.step + 1));
    for (int w = 1; w < threads_; ++w) grads_[0].accumulate(grads_[static_cast<std::size_t>(w)]);
    adam_step<S>(params_, grads_[0], adam_, train_.lr_at(adam_.step), train_.adam);
    return loss;
  }

  double validation_psnr() const {
    if (!val_set_ || val_set_->empty()) return 0.0;
    return mean_psnr<S>(params_, *val_set_, render_, threads_);
  }

  bool has_validation() const { return val_set_ && !val_set_->empty(); }

  // Runs the remaining steps, emitting a record at step 0, every log_every
  // steps and at the end; validation PSNR at step 0, every val_every steps
  // and at the end. `on_checkpoint` fires every checkpoint_every steps.
  std::vector<MetricRecord> run(const std::function<void(const MetricRecord&)>& on_record = {},
                                const std::function<void(std::uint64_t)>& on_checkpoint = {}) {
    std::vector<MetricRecord> log;
    auto emit = [&](MetricRecord rec) {
      log.push_back(rec);
      if (on_record) on_record(rec);
    };
    if (adam_.step == 0) {
      MetricRecord r0;
      r0.step = 0;
      r0.lr = train_.lr_at(0);
      if (has_validation()) r0.psnr_val = validation_psnr();
      emit(r0);
    }
    while (adam_.step < train_.total_steps) {
      const double lr = train_.lr_at(adam_.step);
      const double loss = step();
      const std::uint64_t s = adam_.step;
      const bool last = s == train_.total_steps;
      const bool val = has_validation() && (last || (train_.val_every > 0 && s % static_cast<std::uint64_t>(train_.val_every) == 0));
      if (last || val || s % static_cast<std::uint64_t>(train_.log_every) == 0) {
        MetricRecord r;
        r.step = s;
        r.lr = lr;
        r.loss = loss;
        if (val) r.psnr_val = validation_psnr();
        emit(r);
      }
      if (on_checkpoint && train_.checkpoint_every > 0 && s % static_cast<std::uint64_t>(train_.checkpoint_every) == 0 &&
          !last)
        on_checkpoint(s);
    }
    return log;
  }

 private:
  RenderConfig render_;
  TrainConfig train_;
  const Dataset& train_set_;
  const Dataset* val_set_;
  int threads_;
  FieldParams<S> params_;
  AdamState<S> adam_;
  std::mt19937_64 rng_;
  std::vector<FieldParams<S>> grads_;
  std::vector<RayWorkspace<S>> workspaces_;
};

template <class S>
struct TrainResult {
  FieldParams<S> params;
  AdamState<S> adam;
  std::vector<MetricRecord> log;
};

template <class S>
TrainResult<S> train(const Dataset& train_set, const Dataset* val_set, const ModelConfig& model,
                     const TrainConfig& cfg, const RenderConfig& render, int threads = 1,
                     const std::function<void(const MetricRecord&)>& on_record = {}) {
  Trainer<S> t(model, render, cfg, train_set, val_set, threads);
  auto log = t.run(on_record);
  return {std::move(t.params()), std::move(t.adam()), std::move(log)};
}

}  // namespace hybfield
