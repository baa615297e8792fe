// Copyright 2026 The hybfield Authors.
// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "hybfield/model.hpp"
#include "hybfield/network/field.hpp"
#include "hybfield/network/mlp.hpp"

namespace hybfield {
namespace {

MlpParams<double> random_mlp(const MlpShape& shape, std::uint64_t seed, double scale = 0.5) {
  auto p = make_mlp<double>(shape);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-scale, scale);
  for (auto& l : p.layers) {
    for (auto& w : l.weight) w = u(rng);
    for (auto& b : l.bias) b = u(rng);
  }
  return p;
}

// Forward pass spelled out with explicit loops, no shared helpers.
std::vector<double> reference_forward(const MlpParams<double>& p, std::vector<double> x) {
  for (std::size_t li = 0; li < p.layers.size(); ++li) {
    const auto& l = p.layers[li];
    std::vector<double> y(static_cast<std::size_t>(l.out_dim));
    for (int o = 0; o < l.out_dim; ++o) {
      long double s = l.bias[static_cast<std::size_t>(o)];
      for (int i = 0; i < l.in_dim; ++i)
        s += static_cast<long double>(l.weight[static_cast<std::size_t>(o * l.in_dim + i)]) * x[static_cast<std::size_t>(i)];
      y[static_cast<std::size_t>(o)] = static_cast<double>(s);
    }
    if (li + 1 < p.layers.size())
      for (auto& v : y) v = std::max(v, 0.0);
    x = std::move(y);
  }
  return x;
}

TEST(Mlp, ForwardMatchesReference) {
  const MlpShape shape{20, 16, 2, 5};
  const auto p = random_mlp(shape, 1);
  MlpCache<double> cache(p);
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int n = 0; n < 100; ++n) {
    std::vector<double> x(20);
    for (auto& v : x) v = u(rng);
    const auto got = mlp_forward<double>(p, x, cache);
    const auto want = reference_forward(p, x);
    for (std::size_t k = 0; k < 5; ++k) ASSERT_NEAR(got[k], want[k], 1e-12);
  }
}

TEST(Mlp, ParamCountMatchesAllocation) {
  for (const MlpShape& s : {MlpShape{64, 64, 1, 16}, MlpShape{31, 64, 2, 3}, MlpShape{7, 9, 0, 2}})
    EXPECT_EQ(make_mlp<double>(s).size(), s.param_count());
}

TEST(Mlp, InputWidthMismatchRejected) {
  const auto p = random_mlp({4, 4, 1, 1}, 3);
  MlpCache<double> cache(p);
  const std::vector<double> x(5, 0.0);
  EXPECT_THROW(mlp_forward<double>(p, x, cache), std::invalid_argument);
}

TEST(Mlp, BackwardMatchesFiniteDifferences) {
  const MlpShape shape{6, 8, 2, 3};
  auto p = random_mlp(shape, 4);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> x(6), up(3);
  for (auto& v : x) v = u(rng);
  for (auto& v : up) v = u(rng);
  auto loss = [&] {
    const auto y = reference_forward(p, x);
    double s = 0.0;
    for (std::size_t k = 0; k < 3; ++k) s += y[k] * up[k];
    return s;
  };
  MlpCache<double> cache(p);
  mlp_forward<double>(p, x, cache);
  auto grads = make_mlp<double>(shape);
  std::vector<double> dx(6);
  mlp_backward<double>(p, cache, up, grads, dx);
  const double h = 1e-6;
  for (std::size_t li = 0; li < p.layers.size(); ++li) {
    auto& l = p.layers[li];
    for (std::size_t i = 0; i < l.weight.size(); ++i) {
      const double keep = l.weight[i];
      l.weight[i] = keep + h;
      const double fp = loss();
      l.weight[i] = keep - h;
      const double fm = loss();
      l.weight[i] = keep;
      EXPECT_NEAR((fp - fm) / (2 * h), grads.layers[li].weight[i], 1e-6);
    }
    for (std::size_t i = 0; i < l.bias.size(); ++i) {
      const double keep = l.bias[i];
      l.bias[i] = keep + h;
      const double fp = loss();
      l.bias[i] = keep - h;
      const double fm = loss();
      l.bias[i] = keep;
      EXPECT_NEAR((fp - fm) / (2 * h), grads.layers[li].bias[i], 1e-6);
    }
  }
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double keep = x[i];
    x[i] = keep + h;
    const double fp = loss();
    x[i] = keep - h;
    const double fm = loss();
    x[i] = keep;
    EXPECT_NEAR((fp - fm) / (2 * h), dx[i], 1e-6);
  }
}

TEST(InitMlp, SameSeedSameParameters) {
  const MlpShape shape{64, 64, 1, 16};
  const auto a = init_mlp<double>(shape, 42);
  const auto b = init_mlp<double>(shape, 42);
  const auto c = init_mlp<double>(shape, 43);
  for (std::size_t l = 0; l < a.layers.size(); ++l) {
    EXPECT_EQ(a.layers[l].weight, b.layers[l].weight);
    EXPECT_EQ(a.layers[l].bias, b.layers[l].bias);
  }
  EXPECT_NE(a.layers[0].weight, c.layers[0].weight);
}

TEST(InitMlp, HeUniformBoundsAndMean) {
  // One layer with fan-in 64 and 128000 weights.
  const auto p = init_mlp<double>({64, 1, 0, 2000}, 7);
  const auto& w = p.layers[0].weight;
  const double bound = 0.30618621784789724;  // sqrt(6 / 64)
  double sum = 0.0;
  for (double v : w) {
    ASSERT_LE(std::abs(v), bound);
    sum += v;
  }
  for (double b : p.layers[0].bias) EXPECT_EQ(b, 0.0);
  const double n = static_cast<double>(w.size());
  const double sd_of_mean = bound / std::sqrt(3.0) / std::sqrt(n);
  EXPECT_LE(std::abs(sum / n), 3.0 * sd_of_mean);
}

// ------------------------------------------------------------ field heads

TEST(DensityHead, ZeroParametersGiveUnitDensity) {
  MlpConfig mc;
  const auto p = make_mlp<double>(mc.density_shape(64));
  const std::vector<double> x(64, 0.5);
  const auto out = density_forward<double>(x, p);
  EXPECT_EQ(out.sigma, 1.0);
  ASSERT_EQ(out.embedding.size(), 15u);
  for (double e : out.embedding) EXPECT_EQ(e, 0.0);
}

TEST(DensityHead, RawOutputIsClamped) {
  MlpConfig mc;
  auto p = make_mlp<double>(mc.density_shape(64));
  const std::vector<double> x(64, 0.5);
  p.layers.back().bias[0] = -20.0;
  EXPECT_NEAR(density_forward<double>(x, p).sigma, 3.059023205018258e-07, 1e-20);
  p.layers.back().bias[0] = 40.0;
  EXPECT_EQ(density_forward<double>(x, p).sigma, std::exp(15.0));
}

TEST(DensityHead, MatchesStraightLineOracle) {
  MlpConfig mc;
  mc.hidden_width = 8;
  mc.embedding_dim = 3;
  const auto p = random_mlp(mc.density_shape(5), 8);
  const std::vector<double> x{0.1, -0.4, 0.7, 0.2, -0.9};
  // Hidden layer, ReLU, linear output, exp of the first component.
  const auto& l0 = p.layers[0];
  const auto& l1 = p.layers[1];
  double h[8];
  for (int o = 0; o < 8; ++o) {
    double s = l0.bias[static_cast<std::size_t>(o)];
    for (int i = 0; i < 5; ++i) s += l0.weight[static_cast<std::size_t>(o * 5 + i)] * x[static_cast<std::size_t>(i)];
    h[o] = s > 0 ? s : 0;
  }
  double y[4];
  for (int o = 0; o < 4; ++o) {
    double s = l1.bias[static_cast<std::size_t>(o)];
    for (int i = 0; i < 8; ++i) s += l1.weight[static_cast<std::size_t>(o * 8 + i)] * h[i];
    y[o] = s;
  }
  const auto out = density_forward<double>(x, p);
  EXPECT_NEAR(out.sigma, std::exp(y[0]), 1e-12);
  for (int k = 0; k < 3; ++k) EXPECT_NEAR(out.embedding[static_cast<std::size_t>(k)], y[k + 1], 1e-12);
}

TEST(ColorHead, ZeroParametersGiveHalfGray) {
  MlpConfig mc;
  const auto p = make_mlp<double>(mc.color_shape());
  const std::vector<double> e(15, 0.3), sh(16, 0.2);
  const auto c = color_forward<double>(e, sh, p);
  for (double v : c) EXPECT_EQ(v, 0.5);
}

TEST(ColorHead, LargeBiasSaturates) {
  MlpConfig mc;
  auto p = make_mlp<double>(mc.color_shape());
  for (auto& b : p.layers.back().bias) b = 20.0;
  const std::vector<double> e(15, 0.3), sh(16, 0.2);
  for (double v : color_forward<double>(e, sh, p)) EXPECT_NEAR(v, 1.0, 1e-8);
}

TEST(ColorHead, InputWidthChecked) {
  MlpConfig mc;
  const auto p = make_mlp<double>(mc.color_shape());
  const std::vector<double> e(14, 0.3), sh(16, 0.2);
  EXPECT_THROW(color_forward<double>(e, sh, p), std::invalid_argument);
}

TEST(FieldMlps, BothHeadsFitTheBudget) {
  for (int levels : {8, 16}) {
    ModelConfig m;
    m.encoding.grid.n_levels = levels;
    const auto c = param_counts(m);
    EXPECT_LE(c.density + c.color, 20000u) << levels;
  }
  ModelConfig m;
  const auto c = param_counts(m);
  // 64 -> 64 -> 16 and 31 -> 64 -> 64 -> 3.
  EXPECT_EQ(c.density, 64u * 64 + 64 + 64 * 16 + 16);
  EXPECT_EQ(c.color, 31u * 64 + 64 + 64 * 64 + 64 + 64 * 3 + 3);
}

TEST(FieldMlps, WeightNetworkWidthPerMode) {
  ModelConfig m;
  const std::uint64_t fine = 16, cone = 96, out = 48;
  const std::pair<EncodingMode, std::uint64_t> cases[] = {{EncodingMode::hash_only, 0},
                                                          {EncodingMode::fixed_pe, 0},
                                                          {EncodingMode::lpe_hash_only, fine * out + out},
                                                          {EncodingMode::lpe_cone, cone * out + out},
                                                          {EncodingMode::hybrid, (fine + cone) * out + out}};
  for (const auto& [mode, expected] : cases) {
    m.encoding.mode = mode;
    EXPECT_EQ(param_counts(m).lpe, expected) << to_string(mode);
  }
}

TEST(FieldMlps, AllocatedSizeMatchesCounts) {
  for (EncodingMode mode : kAllModes) {
    ModelConfig m;
    m.encoding.grid = {8, 64, 4, 1u << 12, 2};
    m.encoding.n_freqs = 4;
    m.encoding.mode = mode;
    const FieldParams<float> p(m);
    EXPECT_EQ(p.size(), param_counts(m).total()) << to_string(mode);
  }
}

}  // namespace
}  // namespace hybfield
