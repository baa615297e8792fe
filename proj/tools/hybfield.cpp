// Copyright 2026 The hybfield Authors.
// SPDX-License-Identifier: Apache-2.0
//
// hybfield: train, render, evaluate, gradient-check and ablate radiance
// fields with the hybrid positional/hash-grid encoding.
//
// Exit codes: 0 success, 1 check failure or runtime error, 2 usage/config error.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "hybfield/config.hpp"
#include "hybfield/eval/evaluate.hpp"
#include "hybfield/gradcheck.hpp"
#include "hybfield/train/checkpoint.hpp"
#include "hybfield/train/trainer.hpp"

namespace fs = std::filesystem;
using namespace hybfield;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFail = 1;
constexpr int kExitUsage = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::vector<std::pair<std::string, std::string>> parse_sets(const std::vector<std::string>& sets) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& s : sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0) throw UsageError("--set expects key=value, got '" + s + "'");
    out.emplace_back(s.substr(0, eq), s.substr(eq + 1));
  }
  return out;
}

// A config file when given, otherwise the built-in defaults; overrides apply
// on top in both cases.
RunConfig resolve_config(const std::string& path, const std::vector<std::string>& sets) {
  const auto overrides = parse_sets(sets);
  if (!path.empty()) return load_config(path, overrides);
  nlohmann::json j = to_json(RunConfig{});
  for (const auto& [k, v] : overrides) apply_override(j, k, v);
  return config_from_json(j);
}

// Refuses to reuse a non-empty output directory unless forced.
void prepare_out_dir(const std::string& out, bool force) {
  if (out.empty()) throw UsageError("--out is required");
  if (fs::exists(out) && !fs::is_directory(out)) throw UsageError("--out '" + out + "' exists and is not a directory");
  if (fs::exists(out) && !fs::is_empty(out) && !force)
    throw UsageError("output directory '" + out + "' is not empty (use --force to overwrite)");
  fs::create_directories(out);
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw Error("cannot write '" + path.string() + "'");
  f << text;
}

std::string fmt(double v, int prec = 3) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(prec) << v;
  return os.str();
}

// ---------------------------------------------------------------- train

struct TrainArgs {
  std::string config, out;
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed, steps;
  int threads = default_threads();
  bool deterministic = false, force = false, quiet = false;
};

template <class S>
int run_train(const RunConfig& cfg, const TrainArgs& a) {
  const fs::path out(a.out);
  const int threads = a.deterministic ? 1 : a.threads;
  write_text(out / "config.resolved.json", to_json(cfg).dump(2) + "\n");
  const Dataset train_set = make_dataset(cfg.data, "train", cfg.render.near, cfg.render.far, cfg.render.background);
  const Dataset val_set = cfg.data.n_val > 0 || cfg.data.source == "blender"
                              ? make_dataset(cfg.data, "val", cfg.render.near, cfg.render.far, cfg.render.background)
                              : Dataset{};
  Trainer<S> trainer(cfg.model, cfg.render, cfg.train, train_set, &val_set, threads);
  std::ofstream log(out / "metrics.jsonl", std::ios::trunc);
  const auto t0 = std::chrono::steady_clock::now();
  auto on_record = [&](const MetricRecord& r) {
    nlohmann::json j = r.to_json();
    if (!a.deterministic)
      j["elapsed_s"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    log << j.dump() << "\n";
    log.flush();
    if (!a.quiet) {
      std::cout << "step " << r.step << "  lr " << r.lr;
      if (r.loss) std::cout << "  loss " << *r.loss;
      if (r.psnr_val) std::cout << "  val_psnr " << fmt(*r.psnr_val, 2) << " dB";
      std::cout << "\n";
    }
  };
  auto on_checkpoint = [&](std::uint64_t step) {
    save_checkpoint<S>((out / ("checkpoint_" + std::to_string(step) + ".bin")).string(), cfg, trainer.params(),
                       trainer.adam());
  };
  trainer.run(on_record, on_checkpoint);
  save_checkpoint<S>((out / "checkpoint.bin").string(), cfg, trainer.params(), trainer.adam());
  if (!a.quiet) std::cout << "wrote " << (out / "checkpoint.bin").string() << "\n";
  return kExitOk;
}

int cmd_train(const TrainArgs& a) {
  RunConfig cfg = resolve_config(a.config, a.sets);
  if (a.seed) cfg.train.seed = *a.seed;
  if (a.steps) cfg.train.total_steps = *a.steps;
  cfg.validate();
  prepare_out_dir(a.out, a.force);
  return cfg.train.precision == "double" ? run_train<double>(cfg, a) : run_train<float>(cfg, a);
}

// ---------------------------------------------------------- render / eval

struct EvalArgs {
  std::string checkpoint, data, split, out;
  int threads = default_threads();
  bool timings = false, force = false, render_only = false;
};

template <class S>
int run_eval(const EvalArgs& a) {
  Checkpoint<S> ck = load_checkpoint<S>(a.checkpoint);
  RunConfig cfg = ck.config;
  if (!a.data.empty()) {
    cfg.data.source = "blender";
    cfg.data.path = a.data;
  }
  const std::string split = a.split.empty() ? cfg.eval.split : a.split;
  const Dataset ds = make_dataset(cfg.data, split, cfg.render.near, cfg.render.far, cfg.render.background);
  if (ds.empty()) throw ConfigError("split '" + split + "' has no views");
  prepare_out_dir(a.out, a.force);
  if (a.render_only) {
    RenderConfig rc = cfg.render;
    rc.eval_deterministic = true;
    for (std::size_t v = 0; v < ds.size(); ++v) {
      char name[64];
      std::snprintf(name, sizeof(name), "%s_%03zu.png", split.c_str(), v);
      save_png((fs::path(a.out) / name).string(), render_view<S>(ck.params, ds, v, rc, a.threads));
    }
    std::cout << "rendered " << ds.size() << " views to " << a.out << "\n";
    return kExitOk;
  }
  EvalOptions opt;
  opt.threads = a.threads;
  opt.record_timings = a.timings;
  opt.out_dir = a.out;
  const MetricReport rep = evaluate<S>(ck.params, ds, cfg.render, config_fingerprint(cfg), opt);
  std::cout << "view  psnr_db  ssim\n";
  for (const auto& v : rep.views) std::cout << std::setw(4) << v.view << "  " << fmt(v.psnr) << "  " << fmt(v.ssim, 4) << "\n";
  std::cout << "mean  " << fmt(rep.mean_psnr) << "  " << fmt(rep.mean_ssim, 4) << "\n";
  return kExitOk;
}

int cmd_eval(const EvalArgs& a) {
  if (a.checkpoint.empty()) throw UsageError("--checkpoint is required");
  const auto manifest = read_checkpoint_manifest(a.checkpoint);
  return manifest.value("dtype", "") == "float64" ? run_eval<double>(a) : run_eval<float>(a);
}

// -------------------------------------------------------------- gradcheck

struct GradcheckArgs {
  std::string config, scale = "both", corrupt;
  std::vector<std::string> sets;
  std::uint64_t seed = 7;
};

void print_gradcheck(const GradcheckReport& r, double threshold) {
  std::cout << r.scale << " (threshold " << threshold << ")\n";
  for (const auto& [group, worst] : r.by_group())
    std::cout << "  " << std::left << std::setw(10) << group << std::right << " worst rel err " << std::scientific
              << std::setprecision(2) << worst << std::defaultfloat << (worst <= threshold ? "  ok" : "  FAIL") << "\n";
}

int cmd_gradcheck(const GradcheckArgs& a) {
  const RunConfig cfg = resolve_config(a.config, a.sets);
  if (a.scale != "unit" && a.scale != "pipeline" && a.scale != "both")
    throw UsageError("--scale must be unit, pipeline or both");
  GradcheckOptions opt;
  opt.seed = a.seed;
  if (!a.corrupt.empty()) opt.corrupt = a.corrupt;
  std::vector<std::string> failed;
  std::cout << "mode " << to_string(cfg.model.encoding.mode) << "\n";
  if (a.scale != "pipeline") {
    const auto r = gradcheck_unit(cfg.model, opt);
    print_gradcheck(r, kGradcheckUnitThreshold);
    for (const auto& g : r.failed_groups()) failed.push_back("unit:" + g);
  }
  if (a.scale != "unit") {
    const auto r = gradcheck_pipeline(cfg, opt);
    print_gradcheck(r, kGradcheckPipelineThreshold);
    for (const auto& g : r.failed_groups()) failed.push_back("pipeline:" + g);
  }
  if (!failed.empty()) {
    std::cerr << "gradcheck FAILED in group(s):";
    for (const auto& f : failed) std::cerr << " " << f;
    std::cerr << "\n";
    return kExitFail;
  }
  std::cout << "gradcheck passed\n";
  return kExitOk;
}

// ----------------------------------------------------------------- ablate

struct AblateArgs {
  std::string config, modes = "hash_only,fixed_pe,lpe_hash_only,lpe_cone,hybrid", out;
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed, steps;
  int threads = default_threads();
  bool force = false;
};

template <class S>
std::pair<double, double> ablate_one(const RunConfig& cfg, const Dataset& train_set, const Dataset& val_set, int threads) {
  Trainer<S> t(cfg.model, cfg.render, cfg.train, train_set, &val_set, threads);
  t.run();
  const MetricReport rep = evaluate<S>(t.params(), val_set, cfg.render, config_fingerprint(cfg), {threads, false, ""});
  return {rep.mean_psnr, rep.mean_ssim};
}

int cmd_ablate(const AblateArgs& a) {
  RunConfig base = resolve_config(a.config, a.sets);
  if (a.seed) base.train.seed = *a.seed;
  if (a.steps) base.train.total_steps = *a.steps;
  std::vector<EncodingMode> modes;
  std::stringstream ss(a.modes);
  for (std::string m; std::getline(ss, m, ',');) {
    try {
      modes.push_back(parse_mode(m));
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
  }
  if (modes.empty()) throw UsageError("--modes is empty");
  if (!a.out.empty()) prepare_out_dir(a.out, a.force);
  const Dataset train_set = make_dataset(base.data, "train", base.render.near, base.render.far, base.render.background);
  const Dataset val_set = make_dataset(base.data, "val", base.render.near, base.render.far, base.render.background);
  if (val_set.empty()) throw ConfigError("ablate needs a non-empty val split");

  nlohmann::json rows = nlohmann::json::array();
  std::cout << std::left << std::setw(15) << "mode" << std::right << std::setw(12) << "params" << std::setw(12)
            << "val_psnr" << std::setw(10) << "val_ssim" << "\n";
  for (EncodingMode m : modes) {
    RunConfig cfg = base;
    cfg.model.encoding.mode = m;
    cfg.validate();
    const auto counts = param_counts(cfg.model);
    const auto [p, s] = cfg.train.precision == "double" ? ablate_one<double>(cfg, train_set, val_set, a.threads)
                                                        : ablate_one<float>(cfg, train_set, val_set, a.threads);
    std::cout << std::left << std::setw(15) << to_string(m) << std::right << std::setw(12) << counts.total()
              << std::setw(12) << fmt(p, 2) << std::setw(10) << fmt(s, 4) << "\n";
    rows.push_back({{"mode", std::string(to_string(m))}, {"params", counts.total()}, {"val_psnr", p}, {"val_ssim", s}});
  }
  if (!a.out.empty()) write_text(fs::path(a.out) / "ablation.json", rows.dump(2) + "\n");
  return kExitOk;
}

// ------------------------------------------------------------------- info

int cmd_info(const std::string& config, const std::vector<std::string>& sets, bool json) {
  const RunConfig cfg = resolve_config(config, sets);
  const auto c = param_counts(cfg.model);
  const auto& g = cfg.model.encoding.grid;
  if (json) {
    nlohmann::json j = {{"mode", std::string(to_string(cfg.model.encoding.mode))},
                        {"hash_grid", c.hash_grid},
                        {"lpe", c.lpe},
                        {"density_mlp", c.density},
                        {"color_mlp", c.color},
                        {"encoding_total", c.encoding()},
                        {"total", c.total()}};
    std::cout << j.dump(2) << "\n";
    return kExitOk;
  }
  std::cout << "mode                 " << to_string(cfg.model.encoding.mode) << "\n";
  std::cout << "grid                 N_min=" << g.n_min << " N_max=" << g.n_max << " L_f=" << g.n_levels
            << " T=" << g.table_size << " F=" << g.feat_dim << " (b=" << fmt(g.growth_factor(), 6) << ")\n";
  std::cout << "levels               ";
  const auto res = level_resolutions(g);
  for (std::size_t l = 0; l < res.size(); ++l)
    std::cout << res[l] << (level_is_dense(res[l], g.table_size) ? "d" : "h") << (l + 1 < res.size() ? " " : "\n");
  std::cout << "hash grid params     " << c.hash_grid << "\n";
  std::cout << "weight network       " << c.lpe << "\n";
  std::cout << "density mlp          " << c.density << "\n";
  std::cout << "color mlp            " << c.color << "\n";
  std::cout << "total                " << c.total() << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hybfield: hybrid-encoding radiance fields"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "hybfield 0.1.0");

  TrainArgs ta;
  auto* train = app.add_subcommand("train", "Train a field and write checkpoints and a metrics log");
  train->add_option("--config", ta.config, "Run config (JSON)")->required();
  train->add_option("--out", ta.out, "Output directory")->required();
  train->add_option("--seed", ta.seed, "Override train.seed");
  train->add_option("--steps", ta.steps, "Override train.total_steps");
  train->add_option("--threads", ta.threads, "Worker threads (default: $HYBFIELD_THREADS or all cores)")
      ->check(CLI::PositiveNumber);
  train->add_flag("--deterministic", ta.deterministic, "Single worker, no wall-clock fields in the log");
  train->add_flag("--force", ta.force, "Overwrite a non-empty output directory");
  train->add_flag("--quiet", ta.quiet, "No progress output");
  train->add_option("--set", ta.sets, "Override a config key: block.key=value")->take_all();

  EvalArgs ea;
  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on a split (PSNR/SSIM report + PNGs)");
  eval->add_option("--checkpoint", ea.checkpoint, "Checkpoint file")->required();
  eval->add_option("--data", ea.data, "Blender-format scene directory (overrides the checkpoint's data block)");
  eval->add_option("--split", ea.split, "train, val or test (default: eval.split)");
  eval->add_option("--out", ea.out, "Output directory")->required();
  eval->add_option("--threads", ea.threads)->check(CLI::PositiveNumber);
  eval->add_flag("--timings", ea.timings, "Record wall-clock timings in the report");
  eval->add_flag("--force", ea.force);

  EvalArgs ra;
  ra.render_only = true;
  auto* render = app.add_subcommand("render", "Render every view of a split from a checkpoint");
  render->add_option("--checkpoint", ra.checkpoint, "Checkpoint file")->required();
  render->add_option("--data", ra.data, "Blender-format scene directory");
  render->add_option("--split", ra.split, "train, val or test (default: eval.split)");
  render->add_option("--out", ra.out, "Output directory")->required();
  render->add_option("--threads", ra.threads)->check(CLI::PositiveNumber);
  render->add_flag("--force", ra.force);

  GradcheckArgs ga;
  auto* grad = app.add_subcommand("gradcheck", "Finite-difference check of every backward pass");
  grad->add_option("--config", ga.config, "Run config (JSON); defaults if omitted");
  grad->add_option("--scale", ga.scale, "unit, pipeline or both");
  grad->add_option("--seed", ga.seed);
  grad->add_option("--corrupt", ga.corrupt, "Test hook: perturb one group's analytic gradient");
  grad->add_option("--set", ga.sets, "Override a config key: block.key=value")->take_all();

  AblateArgs aa;
  auto* ablate = app.add_subcommand("ablate", "Train each encoding mode on the same data and compare");
  ablate->add_option("--config", aa.config, "Run config (JSON)");
  ablate->add_option("--modes", aa.modes, "Comma-separated modes");
  ablate->add_option("--out", aa.out, "Optional output directory for ablation.json");
  ablate->add_option("--seed", aa.seed);
  ablate->add_option("--steps", aa.steps);
  ablate->add_option("--threads", aa.threads)->check(CLI::PositiveNumber);
  ablate->add_flag("--force", aa.force);
  ablate->add_option("--set", aa.sets, "Override a config key: block.key=value")->take_all();

  std::string info_config;
  std::vector<std::string> info_sets;
  bool info_json = false;
  auto* info = app.add_subcommand("info", "Print parameter counts per component");
  info->add_option("--config", info_config, "Run config (JSON); defaults if omitted");
  info->add_option("--set", info_sets, "Override a config key: block.key=value")->take_all();
  info->add_flag("--json", info_json);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*train) return cmd_train(ta);
    if (*eval) return cmd_eval(ea);
    if (*render) return cmd_eval(ra);
    if (*grad) return cmd_gradcheck(ga);
    if (*ablate) return cmd_ablate(aa);
    if (*info) return cmd_info(info_config, info_sets, info_json);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFail;
  }
  return kExitUsage;
}
