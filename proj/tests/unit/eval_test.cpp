// Copyright 2026 The hybfield Authors.
// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <random>

#include "hybfield/config.hpp"
#include "hybfield/eval/evaluate.hpp"
#include "hybfield/eval/metrics.hpp"
#include "hybfield/train/trainer.hpp"
#include "test_util.hpp"

namespace hybfield {
namespace {

using test::TempDir;
using test::tiny_run_config;

// Same smooth pattern as the Python oracle script, stored as float32.
Image pattern(int w, int h, int seed) {
  Image img(w, h, 1);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double v = 0.5 + 0.25 * std::sin(0.37 * x + 0.11 * seed) + 0.2 * std::cos(0.23 * y * (1 + 0.1 * seed) + 0.05 * x);
      img.at(x, y, 0) = static_cast<float>(std::clamp(v, 0.0, 1.0));
    }
  return img;
}

Image noisy(const Image& base, double amplitude, std::uint64_t seed) {
  Image out = base;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (auto& v : out.data) v = static_cast<float>(v + amplitude * u(rng));
  return out;
}

TEST(Psnr, UniformErrorOfOneTenth) {
  const Image a(8, 8, 3, 0.5f);
  Image b(8, 8, 3, 0.0f);
  for (auto& v : b.data) v = 0.5f + 0.1f;
  EXPECT_NEAR(psnr(a, b), 20.0, 1e-5);
}

TEST(Psnr, IdenticalImagesHitTheCap) {
  const Image a(4, 4, 3, 0.3f);
  EXPECT_EQ(psnr(a, a), kPsnrCap);
}

TEST(Psnr, SymmetricAndDecreasingInNoise) {
  const Image base = pattern(32, 32, 1);
  double prev = 1e9;
  for (double amp : {0.001, 0.01, 0.05, 0.2}) {
    const Image n = noisy(base, amp, 3);
    EXPECT_EQ(psnr(base, n), psnr(n, base));
    EXPECT_LT(psnr(base, n), prev);
    prev = psnr(base, n);
  }
}

TEST(Psnr, MatchesReferenceOnPattern) {
  EXPECT_NEAR(psnr(pattern(32, 24, 1), pattern(32, 24, 2)), 27.11862194179877, 1e-9);
}

TEST(Ssim, ConstantBlackVersusWhite) {
  const Image a(16, 16, 3, 0.0f), b(16, 16, 3, 1.0f);
  EXPECT_NEAR(ssim(a, b), 9.999000099990002e-05, 1e-15);
}

TEST(Ssim, MatchesScikitImageOnPattern) {
  // skimage structural_similarity, Gaussian weights sigma 1.5, population
  // covariance, data_range 1.
  EXPECT_NEAR(ssim(pattern(32, 24, 1), pattern(32, 24, 2)), 0.9776380392323352, 1e-9);
}

TEST(Ssim, SymmetricAndBounded) {
  const Image base = pattern(24, 24, 3);
  for (double amp : {0.01, 0.1, 0.4}) {
    const Image n = noisy(base, amp, 4);
    EXPECT_NEAR(ssim(base, n), ssim(n, base), 1e-12);
    EXPECT_LE(ssim(base, n), 1.0);
  }
  EXPECT_NEAR(ssim(base, base), 1.0, 1e-12);
}

TEST(Ssim, Rejections) {
  EXPECT_THROW(ssim(Image(8, 8, 3), Image(8, 8, 3)), std::invalid_argument);
  EXPECT_THROW(ssim(Image(16, 16, 3), Image(16, 12, 3)), std::invalid_argument);
  EXPECT_THROW(psnr(Image(4, 4, 3), Image(4, 4, 4)), std::invalid_argument);
}

// ---------------------------------------------------------------- reports

struct Trained {
  RunConfig cfg;
  Dataset train_set, val_set;
  FieldParams<float> params;
  double trainer_val_psnr = 0.0;
};

const Trained& trained() {
  static const Trained t = [] {
    Trained r;
    r.cfg = tiny_run_config();
    r.cfg.train.total_steps = 20;
    r.cfg.data.width = r.cfg.data.height = 24;
    r.train_set = make_dataset(r.cfg.data, "train", r.cfg.render.near, r.cfg.render.far, r.cfg.render.background);
    r.val_set = make_dataset(r.cfg.data, "val", r.cfg.render.near, r.cfg.render.far, r.cfg.render.background);
    Trainer<float> tr(r.cfg.model, r.cfg.render, r.cfg.train, r.train_set, &r.val_set, 1);
    const auto log = tr.run();
    r.trainer_val_psnr = *log.back().psnr_val;
    r.params = tr.params();
    return r;
  }();
  return t;
}

TEST(Evaluate, AgreesWithTrainerValidation) {
  const auto& t = trained();
  const auto rep = evaluate<float>(t.params, t.val_set, t.cfg.render, config_fingerprint(t.cfg));
  EXPECT_NEAR(rep.mean_psnr, t.trainer_val_psnr, 1e-6);
  ASSERT_EQ(rep.views.size(), t.val_set.size());
  EXPECT_GT(rep.mean_ssim, 0.0);
}

TEST(Evaluate, ReportIsByteIdenticalAcrossRuns) {
  const auto& t = trained();
  TempDir a("eval"), b("eval");
  evaluate<float>(t.params, t.val_set, t.cfg.render, "fp", {1, false, a.path().string()});
  evaluate<float>(t.params, t.val_set, t.cfg.render, "fp", {1, false, b.path().string()});
  std::ifstream fa(a / "report.json"), fb(b / "report.json");
  const std::string sa((std::istreambuf_iterator<char>(fa)), {}), sb((std::istreambuf_iterator<char>(fb)), {});
  ASSERT_FALSE(sa.empty());
  EXPECT_EQ(sa, sb);
  EXPECT_TRUE(std::filesystem::exists(a / "val_000.png"));
  EXPECT_EQ(sa.find("seconds"), std::string::npos);
}

TEST(Evaluate, TimingsOnRequest) {
  const auto& t = trained();
  const auto rep = evaluate<float>(t.params, t.val_set, t.cfg.render, "fp", {1, true, ""});
  EXPECT_TRUE(rep.total_seconds.has_value());
  EXPECT_TRUE(rep.views[0].seconds.has_value());
}

TEST(Evaluate, EmptySplitIsAnError) {
  const auto& t = trained();
  Dataset empty;
  empty.split = "test";
  EXPECT_THROW(evaluate<float>(t.params, empty, t.cfg.render, "fp"), ConfigError);
  EXPECT_THROW(evaluate_identity(empty), ConfigError);
}

TEST(Evaluate, IdentityScoresPerfect) {
  const auto rep = evaluate_identity(trained().val_set);
  EXPECT_EQ(rep.mean_psnr, kPsnrCap);
  EXPECT_NEAR(rep.mean_ssim, 1.0, 1e-12);
}

}  // namespace
}  // namespace hybfield
