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

#ifndef STAGEFUSE_IMPUTE_H_
#define STAGEFUSE_IMPUTE_H_

#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "stagefuse/datamodel.h"

namespace stagefuse {

inline constexpr char kDefaultTextPlaceholder[] = "Unknown";

// Sorted-order median. Odd n: value at 1-indexed position (n+1)/2; even n:
// mean of positions n/2 and n/2+1. Throws DataError on empty input.
double Median(std::span<const double> values);

// Per-stage and global medians of the numeric columns plus the text
// placeholder. Columns are keyed by name so that a plan can be checked
// against the dataset it is applied to.
struct ImputationPlan {
  std::vector<std::string> numeric_columns;
  // (class id, column index) -> median over observed values of that class.
  std::map<std::pair<int, int>, double> per_class_medians;
  // column index -> median over all observed values.
  std::map<int, double> global_medians;
  std::string text_placeholder = kDefaultTextPlaceholder;

  bool operator==(const ImputationPlan&) const = default;
};

ImputationPlan FitImputation(const Dataset& ds,
                             const std::string& placeholder =
                                 kDefaultTextPlaceholder);

// Which medians fill a missing numeric cell.
enum class MedianSource {
  // The row's own stage median when available, else the global median.
  // Requires labels, so only valid for labeled training data.
  kClassConditional,
  // Global median only; used for test or unlabeled rows.
  kGlobalOnly,
};

Dataset ApplyImputation(const ImputationPlan& plan, const Dataset& ds,
                        MedianSource source);

// Replaces empty text cells with the placeholder; numerics untouched.
Dataset FillTextPlaceholder(const Dataset& ds, const std::string& placeholder);

}  // namespace stagefuse

#endif  // STAGEFUSE_IMPUTE_H_
