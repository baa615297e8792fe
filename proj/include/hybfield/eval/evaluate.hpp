// Copyright 2026 The hybfield Authors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "hybfield/config.hpp"
#include "hybfield/data/dataset.hpp"
#include "hybfield/errors.hpp"
#include "hybfield/eval/metrics.hpp"
#include "hybfield/render/renderer.hpp"

namespace hybfield {

struct ViewMetrics {
  std::size_t view = 0;
  double psnr = 0.0;
  double ssim = 0.0;
  std::optional<double> seconds;
};

struct MetricReport {
  std::string split;
  std::string fingerprint;
  std::vector<ViewMetrics> views;
  double mean_psnr = 0.0;
  double mean_ssim = 0.0;
  std::optional<double> total_seconds;

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["split"] = split;
    j["config_fingerprint"] = fingerprint;
    j["mean_psnr"] = mean_psnr;
    j["mean_ssim"] = mean_ssim;
    nlohmann::json vs = nlohmann::json::array();
    for (const auto& v : views) {
      nlohmann::json e = {{"view", v.view}, {"psnr", v.psnr}, {"ssim", v.ssim}};
      if (v.seconds) e["seconds"] = *v.seconds;
      vs.push_back(e);
    }
    j["views"] = vs;
    if (total_seconds) j["total_seconds"] = *total_seconds;
    return j;
  }
};

struct EvalOptions {
  int threads = 1;
  // Wall-clock timings make reports differ run to run, so they are left out
  // when a byte-identical report is wanted.
  bool record_timings = false;
  std::string out_dir;  // empty: no files written
};

// Renders every view of `ds` with midpoint sampling and scores it. Views are
// processed in order; each render may use `threads` workers.
template <class S>
MetricReport evaluate(const FieldParams<S>& params, const Dataset& ds, const RenderConfig& render,
                      const std::string& fingerprint, const EvalOptions& opt = {}) {
  if (ds.empty()) throw ConfigError("evaluate: split '" + ds.split + "' has no views");
  RenderConfig rc = render;
  rc.eval_deterministic = true;
  MetricReport rep;
  rep.split = ds.split;
  rep.fingerprint = fingerprint;
  if (!opt.out_dir.empty()) std::filesystem::create_directories(opt.out_dir);
  using clock = std::chrono::steady_clock;
  const auto t_all = clock::now();
  for (std::size_t v = 0; v < ds.size(); ++v) {
    const auto t0 = clock::now();
    const Image img = render_view<S>(params, ds, v, rc, opt.threads);
    ViewMetrics m;
    m.view = v;
    m.psnr = psnr(img, ds.targets[v]);
    m.ssim = ssim(img, ds.targets[v]);
    if (opt.record_timings) m.seconds = std::chrono::duration<double>(clock::now() - t0).count();
    if (!opt.out_dir.empty()) {
      char name[64];
      std::snprintf(name, sizeof(name), "%s_%03zu.png", ds.split.c_str(), v);
      save_png((std::filesystem::path(opt.out_dir) / name).string(), img);
    }
    rep.mean_psnr += m.psnr;
    rep.mean_ssim += m.ssim;
    rep.views.push_back(m);
  }
  rep.mean_psnr /= static_cast<double>(ds.size());
  rep.mean_ssim /= static_cast<double>(ds.size());
  if (opt.record_timings) rep.total_seconds = std::chrono::duration<double>(clock::now() - t_all).count();
  if (!opt.out_dir.empty()) {
    std::ofstream f(std::filesystem::path(opt.out_dir) / "report.json");
    f << rep.to_json().dump(2) << "\n";
  }
  return rep;
}

// Scores the targets against themselves; useful as a harness check.
inline MetricReport evaluate_identity(const Dataset& ds) {
  if (ds.empty()) throw ConfigError("evaluate: split '" + ds.split + "' has no views");
  MetricReport rep;
  rep.split = ds.split;
  for (std::size_t v = 0; v < ds.size(); ++v) {
    ViewMetrics m{v, psnr(ds.targets[v], ds.targets[v]), ssim(ds.targets[v], ds.targets[v]), std::nullopt};
    rep.mean_psnr += m.psnr / static_cast<double>(ds.size());
    rep.mean_ssim += m.ssim / static_cast<double>(ds.size());
    rep.views.push_back(m);
  }
  return rep;
}

}  // namespace hybfield
