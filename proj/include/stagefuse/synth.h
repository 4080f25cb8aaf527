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

#ifndef STAGEFUSE_SYNTH_H_
#define STAGEFUSE_SYNTH_H_

#include <cstdint>
#include <set>
#include <vector>

#include "stagefuse/datamodel.h"

namespace stagefuse {

// Stage counts of the reference cohort (Stage I..IV).
inline const std::vector<double> kReferenceStageCounts = {37, 7624, 766, 341};

struct SynthConfig {
  size_t n_rows = 5000;
  std::vector<double> class_proportions = DefaultProportions();
  // Classes with their own mean on the PSA columns; the rest share one.
  std::set<int> numeric_signal_classes = {0, 1};
  // Classes with their own vocabulary in the signal text columns; the rest
  // draw from a shared pool.
  std::set<int> text_signal_classes = {2, 3};
  double noise_scale = 1.0;
  // Per signal text column, the chance a text-signal row uses its class
  // vocabulary rather than the shared pool.
  double text_signal_rate = 0.85;
  // MCAR blanking rate, applied separately to numeric and text cells.
  double missing_rate = 0.05;
  uint64_t seed = 0;

  static std::vector<double> DefaultProportions();
  void Validate() const;
};

// Column names used by the generator, in schema order.
std::vector<std::string> SynthNumericColumns();
std::vector<std::string> SynthTextColumns();
Schema SynthSchema();

// Exact per-class row counts: largest-remainder rounding of
// n_rows * proportion. Throws DataError if a class with positive proportion
// would get no rows.
std::vector<size_t> SynthClassCounts(const SynthConfig& cfg);

Dataset GenerateSynthetic(const SynthConfig& cfg);

}  // namespace stagefuse

#endif  // STAGEFUSE_SYNTH_H_
