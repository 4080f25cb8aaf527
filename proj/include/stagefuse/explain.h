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

#ifndef STAGEFUSE_EXPLAIN_H_
#define STAGEFUSE_EXPLAIN_H_

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "stagefuse/common.h"
#include "stagefuse/forest.h"

namespace stagefuse {

// Maps a batch of feature rows to class probabilities (rows x classes).
using ProbaFn = std::function<Matrix(const Matrix&)>;

ProbaFn ForestProbaFn(const ForestModel& model);

// Largest feature count accepted by the exact enumerator.
inline constexpr int kMaxExactFeatures = 15;

// Interventional coalition value: the mean model output over background rows
// b of the composite row taking features in `coalition` from x and the rest
// from b. `coalition[j]` marks membership of feature j.
Vector CoalitionValue(const ProbaFn& model, const Vector& x,
                      const std::vector<bool>& coalition,
                      const Matrix& background);

struct ShapResult {
  Matrix values;    // features x classes
  Vector base;      // f(empty coalition), per class
  Vector full;      // f(all features) = model(x), per class
  Matrix std_error; // features x classes; zero in exact mode
};

// |S|! (d - |S| - 1)! / d! for a coalition of size s, from exact integer
// factorials (d <= 20).
double ShapleyWeight(int s, int d);

// Exact Shapley values by enumerating all 2^d coalitions. Throws DataError
// when d exceeds kMaxExactFeatures.
ShapResult ShapExact(const ProbaFn& model, const Vector& x,
                     const Matrix& background);

// Permutation-sampling estimator. Every permutation telescopes to
// f(all) - f(empty), so efficiency holds exactly for the average. Each
// permutation draws from its own derived seed; results do not depend on
// `threads`.
ShapResult ShapSampling(const ProbaFn& model, const Vector& x,
                        const Matrix& background, int n_permutations,
                        uint64_t seed, int threads = 1);

// Attributions for a batch of samples.
struct ShapTensor {
  std::vector<Matrix> values;  // one features x classes matrix per sample
  Vector base_values;
  std::vector<std::string> feature_names;

  size_t samples() const { return values.size(); }
  int features() const { return static_cast<int>(feature_names.size()); }
};

enum class ShapMode { kExact, kSampling };

struct ExplainOptions {
  ShapMode mode = ShapMode::kExact;
  int n_permutations = 256;
  uint64_t seed = 0;
  int threads = 1;
};

ShapTensor ExplainBatch(const ProbaFn& model, const Matrix& samples,
                        const Matrix& background,
                        const std::vector<std::string>& feature_names,
                        const ExplainOptions& opts);

struct FeatureImportance {
  int feature;
  std::string name;
  double mean_abs;                      // over samples and classes
  std::vector<double> per_class_mean_abs;
};

// Ranked by mean |value| descending, ties to the lower feature index.
std::vector<FeatureImportance> ShapSummary(const ShapTensor& t);

// Row subset of `n_rows` rows with per-class quotas proportional to `y`.
std::vector<size_t> StratifiedSubsample(const Labels& y, size_t n_rows,
                                        uint64_t seed);

// One record of shap_values.csv.
struct ShapRecord {
  size_t sample;
  int feature;
  int cls;
  double value;
  double feature_value;
};

std::vector<ShapRecord> ShapRecords(const ShapTensor& t, const Matrix& samples);
std::string ShapValuesCsv(const ShapTensor& t,
                          const std::vector<ShapRecord>& records);
std::string ShapSummaryCsv(const std::vector<FeatureImportance>& summary);

// Beeswarm-style plot for one class built only from `records`: one lane per
// feature in summary order, x = attribution, colour = the feature value's
// quantile within that feature.
std::string ShapBeeswarmSvg(const std::vector<ShapRecord>& records,
                            const std::vector<FeatureImportance>& summary,
                            int cls, int max_features = 20);

}  // namespace stagefuse

#endif  // STAGEFUSE_EXPLAIN_H_
