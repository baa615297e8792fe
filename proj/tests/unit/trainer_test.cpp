// Copyright 2026 The hybfield Authors.
// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <vector>

#include "hybfield/config.hpp"
#include "hybfield/train/adam.hpp"
#include "hybfield/train/checkpoint.hpp"
#include "hybfield/train/trainer.hpp"
#include "test_util.hpp"

namespace hybfield {
namespace {

using test::TempDir;
using test::tiny_run_config;

// ------------------------------------------------------------------- Adam

// Textbook bias-corrected Adam on one scalar, in long double.
struct ReferenceAdam {
  long double m = 0, v = 0;
  int t = 0;
  long double step(long double x, long double g, long double lr, long double b1, long double b2, long double eps) {
    ++t;
    m = b1 * m + (1 - b1) * g;
    v = b2 * v + (1 - b2) * g * g;
    const long double m_hat = m / (1 - std::pow(b1, static_cast<long double>(t)));
    const long double v_hat = v / (1 - std::pow(b2, static_cast<long double>(t)));
    return x - lr * m_hat / (std::sqrt(v_hat) + eps);
  }
};

TEST(Adam, FirstStepIsLearningRateTimesSign) {
  std::vector<double> p{0.0}, g{1.0}, m{0.0}, v{0.0};
  adam_update<double>(p, g, m, v, 0.1, 0.9, 0.99, 1e-8, 1);
  EXPECT_NEAR(p[0], -0.1 / (1.0 + 1e-8), 1e-16);
}

TEST(Adam, ZeroGradientLeavesParametersUnchanged) {
  ModelConfig mc = tiny_run_config().model;
  auto params = FieldParams<double>::initialized(mc, 1);
  const auto before = params;
  FieldParams<double> grads(mc);
  AdamState<double> state(mc);
  adam_step<double>(params, grads, state, 5e-3, {});
  EXPECT_EQ(params.grid.data, before.grid.data);
  EXPECT_EQ(params.lpe.weight, before.lpe.weight);
  EXPECT_EQ(params.density.layers[0].weight, before.density.layers[0].weight);
  EXPECT_EQ(state.step, 1u);
}

TEST(Adam, FiftyStepScalarTrajectoryMatchesReference) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> n01;
  for (double eps : {1e-8, 1e-15}) {
    std::vector<double> p{0.7}, g{0.0}, m{0.0}, v{0.0};
    ReferenceAdam ref;
    long double x = 0.7L;
    for (std::uint64_t t = 1; t <= 50; ++t) {
      g[0] = n01(rng) * (t % 7 == 0 ? 1e-6 : 1.0);
      adam_update<double>(p, g, m, v, 5e-3, 0.9, 0.99, eps, t);
      x = ref.step(x, g[0], 5e-3L, 0.9L, 0.99L, eps);
      ASSERT_NEAR(p[0], static_cast<double>(x), 1e-12) << "step " << t;
    }
  }
}

TEST(Adam, EpsilonSplitByGroup) {
  // With a tiny gradient the update size exposes the epsilon in use.
  ModelConfig mc = tiny_run_config().model;
  FieldParams<double> params(mc), grads(mc);
  AdamState<double> state(mc);
  grads.grid.data[0] = 1e-10;
  grads.density.layers[0].weight[0] = 1e-10;
  adam_step<double>(params, grads, state, 1.0, {0.9, 0.99, 1e-8, 1e-15});
  EXPECT_NEAR(params.grid.data[0], -1e-10 / (1e-10 + 1e-15), 1e-9);
  EXPECT_NEAR(params.density.layers[0].weight[0], -1e-10 / (1e-10 + 1e-8), 1e-9);
}

TEST(Adam, NonFiniteGradientAbortsWithoutChanges) {
  ModelConfig mc = tiny_run_config().model;
  auto params = FieldParams<double>::initialized(mc, 1);
  const auto before = params;
  FieldParams<double> grads(mc);
  grads.color.layers[1].bias[2] = NAN;
  AdamState<double> state(mc);
  EXPECT_THROW(adam_step<double>(params, grads, state, 5e-3, {}), NonFiniteError);
  EXPECT_EQ(state.step, 0u);
  EXPECT_EQ(params.color.layers[1].bias, before.color.layers[1].bias);
}

// --------------------------------------------------------------- schedule

TEST(LearningRate, DefaultMilestones) {
  TrainConfig t;
  t.total_steps = 1000;
  EXPECT_DOUBLE_EQ(t.lr_at(0), 5e-3);
  EXPECT_DOUBLE_EQ(t.lr_at(499), 5e-3);
  EXPECT_DOUBLE_EQ(t.lr_at(500), 5e-3 / 3);
  EXPECT_DOUBLE_EQ(t.lr_at(800), 5e-3 / 9);
}

TEST(LearningRate, CustomMilestones) {
  TrainConfig t;
  t.lr = 1.0;
  t.lr_milestones = {{10, 0.5}, {20, 0.1}};
  EXPECT_DOUBLE_EQ(t.lr_at(9), 1.0);
  EXPECT_DOUBLE_EQ(t.lr_at(10), 0.5);
  EXPECT_DOUBLE_EQ(t.lr_at(25), 0.05);
}

// -------------------------------------------------------------- batching

Dataset blank_dataset(int views, int w, int h) {
  Dataset ds;
  ds.split = "train";
  for (int i = 0; i < views; ++i) {
    Camera c;
    c.width = w;
    c.height = h;
    c.fx = c.fy = 10;
    ds.cameras.push_back(c);
    Image img(w, h, 3);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        img.at(x, y, 0) = static_cast<float>(i);
        img.at(x, y, 1) = static_cast<float>(x);
        img.at(x, y, 2) = static_cast<float>(y);
      }
    ds.targets.push_back(img);
  }
  return ds;
}

TEST(SampleRayBatch, SeededAndInBounds) {
  const Dataset ds = blank_dataset(3, 5, 4);
  std::mt19937_64 a(9), b(9);
  const auto x = sample_ray_batch(ds, 500, a);
  const auto y = sample_ray_batch(ds, 500, b);
  ASSERT_EQ(x.size(), 500u);
  for (std::size_t i = 0; i < x.size(); ++i) {
    EXPECT_EQ(x[i].view, y[i].view);
    EXPECT_EQ(x[i].u, y[i].u);
    EXPECT_EQ(x[i].jx, y[i].jx);
    ASSERT_LT(x[i].view, 3u);
    ASSERT_GE(x[i].u, 0);
    ASSERT_LT(x[i].u, 5);
    ASSERT_GE(x[i].v, 0);
    ASSERT_LT(x[i].v, 4);
    // Targets come from the drawn pixel.
    EXPECT_EQ(x[i].target[0], x[i].view);
    EXPECT_EQ(x[i].target[1], x[i].u);
    EXPECT_EQ(x[i].target[2], x[i].v);
  }
}

TEST(SampleRayBatch, PerImageCountsPassChiSquare) {
  const Dataset ds = blank_dataset(16, 4, 4);
  std::mt19937_64 rng(10);
  std::vector<double> counts(16, 0.0);
  for (int round = 0; round < 100; ++round)
    for (const auto& r : sample_ray_batch(ds, 10000, rng)) counts[r.view] += 1;
  const double expected = 1e6 / 16;
  double chi2 = 0.0;
  for (double c : counts) chi2 += (c - expected) * (c - expected) / expected;
  // Two-sided 99.9% band for 15 degrees of freedom (scipy).
  EXPECT_GT(chi2, 3.1075185692182323);
  EXPECT_LT(chi2, 39.71875978963228);
}

TEST(SampleRayBatch, EmptyDatasetRejected) {
  Dataset ds;
  std::mt19937_64 rng(1);
  EXPECT_THROW(sample_ray_batch(ds, 4, rng), ConfigError);
}

// ----------------------------------------------------------------- train

struct Splits {
  Dataset train, val;
};

Splits make_splits(const RunConfig& c) {
  return {make_dataset(c.data, "train", c.render.near, c.render.far, c.render.background),
          make_dataset(c.data, "val", c.render.near, c.render.far, c.render.background)};
}

TEST(Train, ZeroStepsReturnsInitialParameters) {
  RunConfig c = tiny_run_config();
  c.train.total_steps = 0;
  const auto s = make_splits(c);
  const auto r = train<double>(s.train, &s.val, c.model, c.train, c.render);
  const auto init = FieldParams<double>::initialized(c.model, c.train.seed);
  EXPECT_EQ(r.params.grid.data, init.grid.data);
  EXPECT_EQ(r.params.color.layers[0].weight, init.color.layers[0].weight);
  ASSERT_EQ(r.log.size(), 1u);
  EXPECT_EQ(r.log[0].step, 0u);
  EXPECT_FALSE(r.log[0].loss.has_value());
}

TEST(Train, SingleThreadedRunsAreBitwiseIdentical) {
  RunConfig c = tiny_run_config();
  c.train.total_steps = 15;
  const auto s = make_splits(c);
  const auto a = train<float>(s.train, &s.val, c.model, c.train, c.render, 1);
  const auto b = train<float>(s.train, &s.val, c.model, c.train, c.render, 1);
  EXPECT_EQ(a.params.grid.data, b.params.grid.data);
  EXPECT_EQ(a.params.lpe.weight, b.params.lpe.weight);
  EXPECT_EQ(a.adam.v.density.layers[0].weight, b.adam.v.density.layers[0].weight);
  ASSERT_EQ(a.log.size(), b.log.size());
  for (std::size_t i = 0; i < a.log.size(); ++i) EXPECT_EQ(a.log[i].to_json().dump(), b.log[i].to_json().dump());
}

TEST(Train, FixedWorkerCountIsReproducible) {
  RunConfig c = tiny_run_config();
  c.train.total_steps = 5;
  const auto s = make_splits(c);
  const auto a = train<float>(s.train, nullptr, c.model, c.train, c.render, 3);
  const auto b = train<float>(s.train, nullptr, c.model, c.train, c.render, 3);
  EXPECT_EQ(a.params.grid.data, b.params.grid.data);
  // Different partitioning only changes the reduction order.
  const auto one = train<double>(s.train, nullptr, c.model, c.train, c.render, 1);
  const auto three = train<double>(s.train, nullptr, c.model, c.train, c.render, 3);
  for (std::size_t i = 0; i < one.params.density.layers[0].weight.size(); ++i)
    EXPECT_NEAR(one.params.density.layers[0].weight[i], three.params.density.layers[0].weight[i], 1e-9);
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v[v.size() / 2];
}

TEST(Train, OverfitsOneViewAndLossTrendsDown) {
  RunConfig c = tiny_run_config();
  c.data.n_train = 1;
  c.train.total_steps = 500;
  c.train.batch_rays = 64;
  const auto s = make_splits(c);
  Trainer<float> t(c.model, c.render, c.train, s.train, nullptr, 1);
  const double before = psnr(render_view<float>(t.params(), s.train, 0, c.render), s.train.targets[0]);
  std::vector<double> early, late;
  t.run([&](const MetricRecord& r) {
    if (!r.loss) return;
    if (r.step <= 100) early.push_back(*r.loss);
    if (r.step >= 400) late.push_back(*r.loss);
  });
  const double after = psnr(render_view<float>(t.params(), s.train, 0, c.render), s.train.targets[0]);
  // Recorded: 12.47 dB -> 33.48 dB.
  EXPECT_GE(after - before, 15.0) << before << " -> " << after;
  EXPECT_LT(median(late), median(early));
}

TEST(Train, EmptyTrainingSplitRejected) {
  RunConfig c = tiny_run_config();
  Dataset empty;
  EXPECT_THROW(Trainer<float>(c.model, c.render, c.train, empty), ConfigError);
}

// -------------------------------------------------------------- checkpoint

struct SavedRun {
  RunConfig cfg;
  FieldParams<double> params;
  AdamState<double> adam;
};

SavedRun random_state() {
  SavedRun s{tiny_run_config(), {}, {}};
  s.params = FieldParams<double>::initialized(s.cfg.model, 4);
  s.adam = AdamState<double>(s.cfg.model);
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n01;
  for (auto* p : {&s.adam.m, &s.adam.v})
    for (auto& t : p->tensors())
      for (auto& x : t.data) x = n01(rng);
  s.adam.step = 17;
  return s;
}

TEST(Checkpoint, RoundTripIsBitwise) {
  TempDir dir("ckpt");
  auto s = random_state();
  save_checkpoint<double>(dir / "a.bin", s.cfg, s.params, s.adam);
  auto ck = load_checkpoint<double>(dir / "a.bin");
  EXPECT_EQ(to_json(ck.config), to_json(s.cfg));
  EXPECT_EQ(ck.adam.step, 17u);
  auto want = s.params.tensors();
  auto got = ck.params.tensors();
  ASSERT_EQ(want.size(), got.size());
  for (std::size_t i = 0; i < want.size(); ++i)
    EXPECT_EQ(std::memcmp(want[i].data.data(), got[i].data.data(), want[i].data.size_bytes()), 0) << want[i].name;
  EXPECT_EQ(ck.adam.v.color.layers[1].bias, s.adam.v.color.layers[1].bias);
  // Saving the loaded state again gives the same bytes.
  save_checkpoint<double>(dir / "b.bin", ck.config, ck.params, ck.adam);
  std::ifstream fa(dir / "a.bin", std::ios::binary), fb(dir / "b.bin", std::ios::binary);
  const std::string ba((std::istreambuf_iterator<char>(fa)), {}), bb((std::istreambuf_iterator<char>(fb)), {});
  EXPECT_EQ(ba, bb);
}

// Rewrites the manifest of a checkpoint file, keeping the blob.
void edit_manifest(const std::string& path, const std::function<void(nlohmann::json&)>& edit) {
  std::uint64_t offset = 0;
  nlohmann::json m = read_checkpoint_manifest(path, &offset);
  std::ifstream in(path, std::ios::binary);
  const std::string bytes((std::istreambuf_iterator<char>(in)), {});
  edit(m);
  const std::string text = m.dump(2);
  const std::uint64_t n = text.size();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(kCheckpointMagic, 8);
  out.write(reinterpret_cast<const char*>(&n), 8);
  out << text << bytes.substr(offset);
}

TEST(Checkpoint, WrongLevelCountIsDimensionError) {
  TempDir dir("ckpt");
  auto s = random_state();
  save_checkpoint<double>(dir / "a.bin", s.cfg, s.params, s.adam);
  edit_manifest(dir / "a.bin", [](nlohmann::json& m) { m["config"]["encoding"]["n_levels"] = 5; });
  EXPECT_THROW(load_checkpoint<double>(dir / "a.bin"), CheckpointDimensionError);
}

TEST(Checkpoint, WrongVersionIsVersionError) {
  TempDir dir("ckpt");
  auto s = random_state();
  save_checkpoint<double>(dir / "a.bin", s.cfg, s.params, s.adam);
  edit_manifest(dir / "a.bin", [](nlohmann::json& m) { m["version"] = 99; });
  EXPECT_THROW(load_checkpoint<double>(dir / "a.bin"), CheckpointVersionError);
}

TEST(Checkpoint, TruncatedBlobIsTruncationError) {
  TempDir dir("ckpt");
  auto s = random_state();
  save_checkpoint<double>(dir / "a.bin", s.cfg, s.params, s.adam);
  const auto size = std::filesystem::file_size(dir / "a.bin");
  std::filesystem::resize_file(dir / "a.bin", size - 9);
  EXPECT_THROW(load_checkpoint<double>(dir / "a.bin"), CheckpointTruncatedError);
  std::filesystem::resize_file(dir / "a.bin", 12);
  EXPECT_THROW(load_checkpoint<double>(dir / "a.bin"), CheckpointTruncatedError);
}

TEST(Checkpoint, DtypeMismatchRejected) {
  TempDir dir("ckpt");
  auto s = random_state();
  save_checkpoint<double>(dir / "a.bin", s.cfg, s.params, s.adam);
  EXPECT_THROW(load_checkpoint<float>(dir / "a.bin"), CheckpointDimensionError);
}

TEST(Checkpoint, ManifestDescribesLayout) {
  TempDir dir("ckpt");
  auto s = random_state();
  save_checkpoint<double>(dir / "a.bin", s.cfg, s.params, s.adam);
  const auto m = read_checkpoint_manifest(dir / "a.bin");
  EXPECT_EQ(m["version"], kCheckpointVersion);
  EXPECT_EQ(m["dtype"], "float64");
  EXPECT_EQ(m["tensors"][0]["name"], "hash_grid.tables");
  EXPECT_EQ(m["tensors"][0]["count"], s.params.grid.size());
  EXPECT_EQ(std::filesystem::file_size(dir / "a.bin") - 16 - m.dump(2).size(), 3 * s.params.size() * sizeof(double));
}

// ----------------------------------------------------------------- config

TEST(Config, DefaultsAreFullScale) {
  const RunConfig c;
  EXPECT_EQ(c.model.encoding.grid.n_min, 180);
  EXPECT_EQ(c.model.encoding.grid.table_size, 1u << 19);
  EXPECT_EQ(c.model.encoding.grid.feat_dim, 2);
  EXPECT_EQ(c.model.encoding.n_freqs, 8);
  EXPECT_EQ(c.train.lr, 5e-3);
  EXPECT_EQ(c.train.adam.beta1, 0.9);
  EXPECT_EQ(c.train.adam.beta2, 0.99);
  EXPECT_NO_THROW(c.validate());
}

TEST(Config, JsonRoundTrip) {
  const RunConfig c = tiny_run_config(EncodingMode::lpe_cone);
  const RunConfig d = config_from_json(to_json(c));
  EXPECT_EQ(to_json(d), to_json(c));
  EXPECT_EQ(config_fingerprint(d), config_fingerprint(c));
}

TEST(Config, UnknownKeysRejected) {
  auto j = to_json(RunConfig{});
  j["encoding"]["n_lvls"] = 4;
  EXPECT_THROW(config_from_json(j), ConfigError);
  auto k = to_json(RunConfig{});
  k["optimizer"] = nlohmann::json::object();
  EXPECT_THROW(config_from_json(k), ConfigError);
}

TEST(Config, InvalidValuesRejected) {
  auto bad = [](const char* block, const char* key, nlohmann::json v) {
    auto j = to_json(RunConfig{});
    j[block][key] = v;
    return j;
  };
  EXPECT_THROW(config_from_json(bad("encoding", "table_size", 1000)), ConfigError);
  EXPECT_THROW(config_from_json(bad("encoding", "mode", "mip")), ConfigError);
  EXPECT_THROW(config_from_json(bad("encoding", "n_freqs", 7)), ConfigError);
  EXPECT_THROW(config_from_json(bad("train", "lr", -1.0)), ConfigError);
  EXPECT_THROW(config_from_json(bad("train", "beta2", 1.0)), ConfigError);
  EXPECT_THROW(config_from_json(bad("train", "batch_rays", 0)), ConfigError);
  EXPECT_THROW(config_from_json(bad("render", "far", 1.0)), ConfigError);
  EXPECT_THROW(config_from_json(bad("mlp", "hidden_width", "wide")), ConfigError);
  EXPECT_THROW(config_from_json(bad("eval", "split", "holdout")), ConfigError);
}

TEST(Config, OverridesApply) {
  auto j = to_json(RunConfig{});
  apply_override(j, "encoding.mode", "hash_only");
  apply_override(j, "train.lr", "0.01");
  apply_override(j, "render.background_color", "[0,0,0]");
  const RunConfig c = config_from_json(j);
  EXPECT_EQ(c.model.encoding.mode, EncodingMode::hash_only);
  EXPECT_EQ(c.train.lr, 0.01);
  EXPECT_EQ(c.render.background, (Vec3<double>{0, 0, 0}));
}

TEST(Config, ShippedConfigsLoad) {
  for (const char* name : {"toy.json", "blender.json"}) {
    EXPECT_NO_THROW(load_config(std::string(HYBFIELD_CONFIG_DIR) + "/" + name)) << name;
  }
  EXPECT_THROW(load_config("/nonexistent/config.json"), ConfigError);
}

}  // namespace
}  // namespace hybfield
