// Copyright 2026 The hybfield Authors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "hybfield/data/dataset.hpp"
#include "hybfield/errors.hpp"
#include "hybfield/model.hpp"
#include "hybfield/render/renderer.hpp"
#include "hybfield/train/trainer.hpp"

namespace hybfield {

inline constexpr int kConfigFormatVersion = 1;

struct EvalConfig {
  std::string split = "test";
};

// Everything a run needs, serialized as one JSON document. Defaults are the
// full-scale settings (N_min=180, T=2^19, F=2, L_c=8, L_f=8).
struct RunConfig {
  int format_version = kConfigFormatVersion;
  ModelConfig model;
  RenderConfig render;
  TrainConfig train;
  DataConfig data;
  EvalConfig eval;

  void validate() const {
    try {
      model.validate();
      render.validate();
      train.validate();
      data.validate();
    } catch (const ConfigError&) {
      throw;
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
    if (eval.split != "train" && eval.split != "val" && eval.split != "test")
      throw ConfigError("eval.split must be train, val or test");
  }
};

namespace detail {

// Reads one JSON object block, rejecting keys that are never read.
class BlockReader {
 public:
  BlockReader(const nlohmann::json& j, std::string block) : j_(j), block_(std::move(block)) {
    if (!j_.is_object()) throw ConfigError("config block '" + block_ + "' must be an object");
  }

  template <class T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("config key '" + block_ + "." + key + "' has the wrong type: " + e.what());
    }
  }

  void vec3(const char* key, Vec3<double>& out) {
    std::vector<double> v;
    get(key, v);
    if (j_.contains(key)) {
      if (v.size() != 3) throw ConfigError("config key '" + block_ + "." + key + "' must have 3 entries");
      out = {v[0], v[1], v[2]};
    }
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) throw ConfigError("unknown config key '" + block_ + "." + it.key() + "'");
  }

 private:
  const nlohmann::json& j_;
  std::string block_;
  std::set<std::string> seen_;
};

}  // namespace detail

inline nlohmann::json to_json(const RunConfig& c) {
  nlohmann::json j;
  j["format_version"] = c.format_version;
  const auto& e = c.model.encoding;
  j["encoding"] = {{"n_min", e.grid.n_min},         {"n_max", e.grid.n_max},
                   {"n_levels", e.grid.n_levels},   {"table_size", e.grid.table_size},
                   {"feat_dim", e.grid.feat_dim},   {"n_freqs", e.n_freqs},
                   {"cov_feature_scale", e.cov_feature_scale}, {"mode", std::string(to_string(e.mode))}};
  const auto& m = c.model.mlp;
  j["mlp"] = {{"hidden_width", m.hidden_width},
              {"density_hidden_layers", m.density_hidden_layers},
              {"color_hidden_layers", m.color_hidden_layers},
              {"embedding_dim", m.embedding_dim}};
  const auto& r = c.render;
  j["render"] = {{"n_samples", r.n_samples},
                 {"background_color", {r.background[0], r.background[1], r.background[2]}},
                 {"near", r.near},
                 {"far", r.far},
                 {"eval_deterministic", r.eval_deterministic}};
  const auto& t = c.train;
  nlohmann::json ms = nlohmann::json::array();
  for (const auto& [step, mult] : t.lr_milestones) ms.push_back({step, mult});
  j["train"] = {{"batch_rays", t.batch_rays},     {"total_steps", t.total_steps},
                {"lr", t.lr},                     {"beta1", t.adam.beta1},
                {"beta2", t.adam.beta2},          {"eps_mlp", t.adam.eps_mlp},
                {"eps_encoding", t.adam.eps_encoding}, {"seed", t.seed},
                {"lr_milestones", ms},            {"precision", t.precision},
                {"log_every", t.log_every},       {"val_every", t.val_every},
                {"checkpoint_every", t.checkpoint_every}};
  const auto& d = c.data;
  j["data"] = {{"source", d.source},
               {"scene", d.scene},
               {"path", d.path},
               {"width", d.width},
               {"height", d.height},
               {"n_train", d.n_train},
               {"n_val", d.n_val},
               {"n_test", d.n_test},
               {"camera_radius", d.camera_radius},
               {"camera_angle_x", d.camera_angle_x},
               {"aabb_min", {d.aabb_min[0], d.aabb_min[1], d.aabb_min[2]}},
               {"aabb_max", {d.aabb_max[0], d.aabb_max[1], d.aabb_max[2]}},
               {"quadrature_n", d.quadrature_n}};
  j["eval"] = {{"split", c.eval.split}};
  return j;
}

// Parses and validates a config; missing keys keep their defaults, unknown
// keys are rejected.
inline RunConfig config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  RunConfig c;
  static const std::set<std::string> blocks = {"format_version", "encoding", "mlp", "render", "train", "data", "eval"};
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!blocks.count(it.key())) throw ConfigError("unknown config key '" + it.key() + "'");
  if (j.contains("format_version")) {
    if (!j["format_version"].is_number_integer() || j["format_version"].get<int>() != kConfigFormatVersion)
      throw ConfigError("unsupported config format_version (expected " + std::to_string(kConfigFormatVersion) + ")");
  }
  const nlohmann::json empty = nlohmann::json::object();
  auto block = [&](const char* name) -> const nlohmann::json& { return j.contains(name) ? j.at(name) : empty; };

  {
    detail::BlockReader b(block("encoding"), "encoding");
    auto& e = c.model.encoding;
    b.get("n_min", e.grid.n_min);
    b.get("n_max", e.grid.n_max);
    b.get("n_levels", e.grid.n_levels);
    b.get("table_size", e.grid.table_size);
    b.get("feat_dim", e.grid.feat_dim);
    b.get("n_freqs", e.n_freqs);
    b.get("cov_feature_scale", e.cov_feature_scale);
    std::string mode(to_string(e.mode));
    b.get("mode", mode);
    try {
      e.mode = parse_mode(mode);
    } catch (const std::invalid_argument& ex) {
      throw ConfigError(ex.what());
    }
    b.finish();
  }
  {
    detail::BlockReader b(block("mlp"), "mlp");
    auto& m = c.model.mlp;
    b.get("hidden_width", m.hidden_width);
    b.get("density_hidden_layers", m.density_hidden_layers);
    b.get("color_hidden_layers", m.color_hidden_layers);
    b.get("embedding_dim", m.embedding_dim);
    b.finish();
  }
  {
    detail::BlockReader b(block("render"), "render");
    auto& r = c.render;
    b.get("n_samples", r.n_samples);
    b.vec3("background_color", r.background);
    b.get("near", r.near);
    b.get("far", r.far);
    b.get("eval_deterministic", r.eval_deterministic);
    b.finish();
  }
  {
    detail::BlockReader b(block("train"), "train");
    auto& t = c.train;
    b.get("batch_rays", t.batch_rays);
    b.get("total_steps", t.total_steps);
    b.get("lr", t.lr);
    b.get("beta1", t.adam.beta1);
    b.get("beta2", t.adam.beta2);
    b.get("eps_mlp", t.adam.eps_mlp);
    b.get("eps_encoding", t.adam.eps_encoding);
    b.get("seed", t.seed);
    b.get("lr_milestones", t.lr_milestones);
    b.get("precision", t.precision);
    b.get("log_every", t.log_every);
    b.get("val_every", t.val_every);
    b.get("checkpoint_every", t.checkpoint_every);
    b.finish();
  }
  {
    detail::BlockReader b(block("data"), "data");
    auto& d = c.data;
    b.get("source", d.source);
    b.get("scene", d.scene);
    b.get("path", d.path);
    b.get("width", d.width);
    b.get("height", d.height);
    b.get("n_train", d.n_train);
    b.get("n_val", d.n_val);
    b.get("n_test", d.n_test);
    b.get("camera_radius", d.camera_radius);
    b.get("camera_angle_x", d.camera_angle_x);
    b.vec3("aabb_min", d.aabb_min);
    b.vec3("aabb_max", d.aabb_max);
    b.get("quadrature_n", d.quadrature_n);
    b.finish();
  }
  {
    detail::BlockReader b(block("eval"), "eval");
    b.get("split", c.eval.split);
    b.finish();
  }
  c.validate();
  return c;
}

// Sets `dotted.key` in a config document. The value is parsed as JSON when
// possible and taken as a string otherwise.
inline void apply_override(nlohmann::json& j, const std::string& dotted, const std::string& value) {
  nlohmann::json* node = &j;
  std::stringstream ss(dotted);
  std::string part;
  std::vector<std::string> parts;
  while (std::getline(ss, part, '.')) parts.push_back(part);
  if (parts.empty()) throw ConfigError("empty override key");
  for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
    if (!node->contains(parts[i])) (*node)[parts[i]] = nlohmann::json::object();
    node = &(*node)[parts[i]];
  }
  nlohmann::json v = nlohmann::json::parse(value, nullptr, false);
  (*node)[parts.back()] = v.is_discarded() ? nlohmann::json(value) : v;
}

inline nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  try {
    nlohmann::json j;
    in >> j;
    return j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("malformed config file '" + path + "': " + e.what());
  }
}

inline RunConfig load_config(const std::string& path, const std::vector<std::pair<std::string, std::string>>& overrides = {}) {
  nlohmann::json j = read_json_file(path);
  for (const auto& [k, v] : overrides) apply_override(j, k, v);
  return config_from_json(j);
}

// FNV-1a of the canonical config dump.
inline std::string config_fingerprint(const RunConfig& c) {
  const std::string s = to_json(c).dump();
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  std::ostringstream os;
  os << std::hex << h;
  return os.str();
}

}  // namespace hybfield
