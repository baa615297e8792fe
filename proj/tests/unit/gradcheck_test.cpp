// Copyright 2026 The hybfield Authors.
// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <algorithm>

#include "hybfield/gradcheck.hpp"
#include "test_util.hpp"

namespace hybfield {

// Readable parameter names in test output.
void PrintTo(EncodingMode m, std::ostream* os) { *os << to_string(m); }

namespace {

using test::tiny_run_config;

class GradcheckModes : public ::testing::TestWithParam<EncodingMode> {};

TEST_P(GradcheckModes, UnitChecksPass) {
  const auto r = gradcheck_unit(tiny_run_config(GetParam()).model, {});
  EXPECT_TRUE(r.passed()) << "worst " << r.worst();
  EXPECT_LE(r.worst(), kGradcheckUnitThreshold);
  const auto groups = r.by_group();
  auto has = [&](const char* g) {
    return std::any_of(groups.begin(), groups.end(), [&](const auto& p) { return p.first == g; });
  };
  EXPECT_TRUE(has("hash_grid"));
  EXPECT_TRUE(has("density"));
  EXPECT_TRUE(has("color"));
  // The weight network is checked standalone in every mode.
  EXPECT_TRUE(has("lpe"));
}

TEST_P(GradcheckModes, PipelineCheckPasses) {
  const auto r = gradcheck_pipeline(tiny_run_config(GetParam()), {});
  EXPECT_TRUE(r.passed()) << "worst " << r.worst();
  for (const auto& e : r.entries) EXPECT_GT(e.checked, 0u) << e.name;
  const bool lpe = std::any_of(r.entries.begin(), r.entries.end(), [](const auto& e) { return e.group == "lpe"; });
  EXPECT_EQ(lpe, tiny_run_config(GetParam()).model.encoding.has_lpe());
}

INSTANTIATE_TEST_SUITE_P(AllModes, GradcheckModes, ::testing::ValuesIn(kAllModes),
                         [](const auto& info) { return std::string(to_string(info.param)); });

TEST(Gradcheck, CorruptedGroupIsReported) {
  for (const char* group : {"hash_grid", "lpe", "density", "color"}) {
    GradcheckOptions opt;
    opt.corrupt = group;
    const auto r = gradcheck_unit(tiny_run_config(EncodingMode::hybrid).model, opt);
    EXPECT_FALSE(r.passed()) << group;
    EXPECT_EQ(r.failed_groups(), std::vector<std::string>{group});
  }
}

TEST(Gradcheck, RelativeErrorUsesFloor) {
  EXPECT_EQ(detail::rel_error(0.0, 0.0, 1e-6), 0.0);
  EXPECT_DOUBLE_EQ(detail::rel_error(1e-9, 0.0, 1e-6), 1e-3);
  EXPECT_DOUBLE_EQ(detail::rel_error(2.0, 1.0, 1e-6), 0.5);
}

}  // namespace
}  // namespace hybfield
