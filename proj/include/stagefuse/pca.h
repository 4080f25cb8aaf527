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

#ifndef STAGEFUSE_PCA_H_
#define STAGEFUSE_PCA_H_

#include <string>
#include <vector>

#include "stagefuse/common.h"

namespace stagefuse {

// Fitted principal-component projection.
struct PcaModel {
  Vector mean;                // dim
  Matrix components;          // k x dim, orthonormal rows
  Vector explained_variance;  // k, sample variance (divisor n-1)
  Vector explained_variance_ratio;  // k, descending
  Vector cumulative_variance;       // k, prefix sums of the ratios
  double total_variance = 0.0;
  double threshold = 1.0;

  int dim() const { return static_cast<int>(mean.size()); }
  int n_components() const { return static_cast<int>(components.rows()); }
};

// Keeps the smallest number of leading components whose cumulative explained
// variance ratio reaches `threshold`, capped at the numerical rank. Each
// component is sign-normalised so that its largest-magnitude entry (first one
// on ties) is nonnegative.
PcaModel FitPca(const Matrix& x, double threshold);

// (x - mean) * components^T, rows x k.
Matrix PcaTransform(const PcaModel& model, const Matrix& x);

struct ExplainedVarianceRow {
  int component;  // 1-based
  double ratio;
  double cumulative;
};

std::vector<ExplainedVarianceRow> ExplainedVarianceTable(const PcaModel& model);

// "component,explained_variance_ratio,cumulative_variance" with 4 decimals.
std::string ExplainedVarianceCsv(const PcaModel& model);

}  // namespace stagefuse

#endif  // STAGEFUSE_PCA_H_
