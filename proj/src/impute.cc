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

namespace stagefuse {

double Median(std::span<const double> values) {
  if (values.empty()) throw DataError("median of an empty list");
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  const size_t n = v.size();
  if (n % 2 == 1) return v[(n + 1) / 2 - 1];
  return (v[n / 2 - 1] + v[n / 2]) / 2.0;
}

ImputationPlan FitImputation(const Dataset& ds,
                             const std::string& placeholder) {
  ImputationPlan plan;
  plan.numeric_columns = ds.schema.NumericNames();
  plan.text_placeholder = placeholder;
  const auto rows = static_cast<Eigen::Index>(ds.rows());
  for (Eigen::Index j = 0; j < ds.numeric.cols(); ++j) {
    std::map<int, std::vector<double>> by_class;
    std::vector<double> all;
    for (Eigen::Index r = 0; r < rows; ++r) {
      const double v = ds.numeric(r, j);
      if (std::isnan(v)) continue;
      by_class[ds.labels[r]].push_back(v);
      all.push_back(v);
    }
    if (all.empty()) {
      throw DataError("numeric column has no observed values: " +
                      plan.numeric_columns[j]);
    }
    const int col = static_cast<int>(j);
    plan.global_medians[col] = Median(all);
    for (const auto& [cls, vals] : by_class) {
      plan.per_class_medians[{cls, col}] = Median(vals);
    }
  }
  return plan;
}

Dataset ApplyImputation(const ImputationPlan& plan, const Dataset& ds,
                        MedianSource source) {
  const auto names = ds.schema.NumericNames();
  for (const auto& name : names) {
    if (std::find(plan.numeric_columns.begin(), plan.numeric_columns.end(),
                  name) == plan.numeric_columns.end()) {
      throw DataError("column absent from imputation plan: " + name);
    }
  }
  Dataset out = FillTextPlaceholder(ds, plan.text_placeholder);
  for (size_t j = 0; j < names.size(); ++j) {
    const int plan_col = static_cast<int>(
        std::find(plan.numeric_columns.begin(), plan.numeric_columns.end(),
                  names[j]) -
        plan.numeric_columns.begin());
    const auto global = plan.global_medians.find(plan_col);
    for (size_t r = 0; r < ds.rows(); ++r) {
      double& cell = out.numeric(static_cast<Eigen::Index>(r),
                                 static_cast<Eigen::Index>(j));
      if (!std::isnan(cell)) continue;
      if (source == MedianSource::kClassConditional) {
        const auto it = plan.per_class_medians.find({ds.labels[r], plan_col});
        if (it != plan.per_class_medians.end()) {
          cell = it->second;
          continue;
        }
      }
      if (global == plan.global_medians.end()) {
        throw DataError("no median available for column " + names[j]);
      }
      cell = global->second;
    }
  }
  return out;
}

Dataset FillTextPlaceholder(const Dataset& ds, const std::string& placeholder) {
  Dataset out = ds;
  for (auto& row : out.text) {
    for (auto& cell : row) {
      if (cell.empty()) cell = placeholder;
    }
  }
  return out;
}

}  // namespace stagefuse
