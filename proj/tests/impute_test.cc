/*
 * Copyright 2026 The Stagefuse Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "stagefuse/impute.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include <gtest/gtest.h>

#include "stagefuse/random.h"

namespace stagefuse {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

Dataset MakeDataset(const std::vector<std::vector<double>>& rows, const Labels& y,
                    const std::vector<std::string>& text = {}) {
  Dataset ds;
  std::vector<ColumnSpec> cols;
  for (size_t j = 0; j < rows[0].size(); ++j) {
    cols.push_back({"x" + std::to_string(j), ColumnRole::kNumeric});
  }
  cols.push_back({"t", ColumnRole::kText});
  cols.push_back({"y", ColumnRole::kLabel});
  ds.schema = Schema(cols);
  ds.numeric.resize(static_cast<Eigen::Index>(rows.size()),
                    static_cast<Eigen::Index>(rows[0].size()));
  for (size_t i = 0; i < rows.size(); ++i) {
    for (size_t j = 0; j < rows[i].size(); ++j) {
      ds.numeric(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
    ds.text.push_back({text.empty() ? "t" : text[i]});
    ds.row_ids.push_back(i);
  }
  ds.labels = y;
  return ds;
}

TEST(MedianTest, Formulas) {
  EXPECT_EQ(Median(std::vector<double>{5}), 5);
  EXPECT_EQ(Median(std::vector<double>{3, 1, 2}), 2);
  EXPECT_EQ(Median(std::vector<double>{4, 1, 3, 2}), 2.5);
  EXPECT_THROW(Median(std::vector<double>{}), DataError);
}

TEST(MedianTest, MatchesSortingOracle) {
  Rng rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const size_t n = 1 + rng.Below(1000);
    std::vector<double> v(n);
    for (auto& x : v) x = std::round(rng.Normal() * 10);  // many ties
    std::vector<double> s = v;
    std::sort(s.begin(), s.end());
    const double expected = n % 2 ? s[n / 2] : (s[n / 2 - 1] + s[n / 2]) / 2;
    EXPECT_EQ(Median(v), expected);
  }
}

TEST(ImputeTest, PerClassAndGlobalMedians) {
  const Dataset ds = MakeDataset({{1}, {3}, {10}, {kNaN}}, {0, 0, 1, 2});
  const auto plan = FitImputation(ds);
  EXPECT_EQ((plan.per_class_medians.at({0, 0})), 2.0);
  EXPECT_EQ((plan.per_class_medians.at({1, 0})), 10.0);
  EXPECT_EQ(plan.per_class_medians.count({2, 0}), 0u);
  EXPECT_EQ(plan.global_medians.at(0), 3.0);
  const Dataset out = ApplyImputation(plan, ds, MedianSource::kClassConditional);
  // Class 2 has no observed value: falls back to the global median.
  EXPECT_EQ(out.numeric(3, 0), 3.0);
}

TEST(ImputeTest, ClassConditionalFill) {
  const Dataset ds = MakeDataset({{1}, {3}, {kNaN}, {10}}, {0, 0, 0, 1});
  const auto plan = FitImputation(ds);
  EXPECT_EQ(ApplyImputation(plan, ds, MedianSource::kClassConditional).numeric(2, 0), 2.0);
  EXPECT_EQ(ApplyImputation(plan, ds, MedianSource::kGlobalOnly).numeric(2, 0), 3.0);
}

TEST(ImputeTest, TextPlaceholder) {
  const Dataset ds = MakeDataset({{1}, {2}}, {0, 1}, {"", "kept"});
  const auto plan = FitImputation(ds);
  const Dataset out = ApplyImputation(plan, ds, MedianSource::kGlobalOnly);
  EXPECT_EQ(out.text[0][0], "Unknown");
  EXPECT_EQ(out.text[1][0], "kept");
  const auto custom = FitImputation(ds, "N/A");
  EXPECT_EQ(ApplyImputation(custom, ds, MedianSource::kGlobalOnly).text[0][0], "N/A");
}

TEST(ImputeTest, FullyObservedIsIdentityAndIdempotent) {
  const Dataset ds = MakeDataset({{1, 2}, {3, 4}, {5, 6}}, {0, 1, 1});
  const auto plan = FitImputation(ds);
  const Dataset once = ApplyImputation(plan, ds, MedianSource::kClassConditional);
  EXPECT_EQ(once.numeric, ds.numeric);
  Dataset holes = ds;
  holes.numeric(1, 1) = kNaN;
  const Dataset a = ApplyImputation(plan, holes, MedianSource::kClassConditional);
  const Dataset b = ApplyImputation(plan, a, MedianSource::kClassConditional);
  EXPECT_EQ(a.numeric, b.numeric);
  EXPECT_FALSE(a.numeric.hasNaN());
}

TEST(ImputeTest, Errors) {
  EXPECT_THROW(FitImputation(MakeDataset({{kNaN}, {kNaN}}, {0, 1})), DataError);
  const Dataset ds = MakeDataset({{1}, {2}}, {0, 1});
  const auto plan = FitImputation(ds);
  const Dataset other = MakeDataset({{1, 2}, {2, 3}}, {0, 1});
  EXPECT_THROW(ApplyImputation(plan, other, MedianSource::kGlobalOnly), DataError);
}

}  // namespace
}  // namespace stagefuse
