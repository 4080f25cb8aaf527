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

#include "stagefuse/synth.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "stagefuse/random.h"

namespace stagefuse {

namespace {

constexpr int kPsaLevels = 6;
constexpr double kPsaBase = 4.0;
constexpr double kPsaSeparation = 4.0;

struct TextColumn {
  const char* name;
  bool carries_signal;
  std::vector<std::string> shared;
  // Per class for class ids 0..3; only used for text-signal classes.
  std::vector<std::vector<std::string>> by_class;
};

const std::vector<TextColumn>& TextColumns() {
  static const std::vector<TextColumn> cols = {
      {"urinatea", false, {"0-1 times", "2 times", "3 times", "4 or more times"}, {}},
      {"race7", false,
       {"white", "black", "hispanic", "asian", "pacific islander",
        "american indian"},
       {}},
      {"prostate_condition_nlp", true,
       {"enlarged prostate", "benign hyperplasia", "no condition reported",
        "prostatitis history", "elevated psa follow up"},
       {{"localized nodule"},
        {"organ confined"},
        {"extracapsular extension", "seminal vesicle invasion",
         "regional spread"},
        {"distant metastasis", "bone lesions", "nodal involvement"}}},
      {"merged_psa_result", false,
       {"negative", "positive", "inconclusive", "not done"}, {}},
      {"urinate_f", true,
       {"normal", "occasional nocturia", "mild frequency", "none reported"},
       {{"normal"},
        {"normal"},
        {"urgency hesitancy", "weak stream straining"},
        {"urinary retention catheter", "hematuria flank pain"}}},
  };
  return cols;
}

double Round(double v, double scale) { return std::round(v * scale) / scale; }

const std::string& Pick(const std::vector<std::string>& pool, Rng& rng) {
  return pool[rng.Below(pool.size())];
}

}  // namespace

std::vector<double> SynthConfig::DefaultProportions() {
  const double total = std::accumulate(kReferenceStageCounts.begin(),
                                       kReferenceStageCounts.end(), 0.0);
  std::vector<double> p;
  for (double c : kReferenceStageCounts) p.push_back(c / total);
  return p;
}

void SynthConfig::Validate() const {
  if (class_proportions.size() != static_cast<size_t>(kNumStages)) {
    throw DataError("class proportions need one entry per stage");
  }
  double sum = 0.0;
  for (double p : class_proportions) {
    if (p < 0) throw DataError("negative class proportion");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw DataError("class proportions must sum to 1");
  if (n_rows < static_cast<size_t>(4 * kNumStages)) {
    throw DataError("n_rows must be at least " + std::to_string(4 * kNumStages));
  }
  if (noise_scale < 0) throw DataError("noise scale must be >= 0");
  if (missing_rate < 0 || missing_rate >= 1) throw DataError("missing rate must lie in [0, 1)");
  if (text_signal_rate < 0 || text_signal_rate > 1) {
    throw DataError("text signal rate must lie in [0, 1]");
  }
  for (int c : numeric_signal_classes) {
    if (c < 0 || c >= kNumStages) throw DataError("signal class out of range");
  }
  for (int c : text_signal_classes) {
    if (c < 0 || c >= kNumStages) throw DataError("signal class out of range");
  }
}

std::vector<std::string> SynthNumericColumns() {
  std::vector<std::string> cols = {"pros_dx_psa", "pros_dx_psa_gap",
                                   "pros_cancer_diagdays"};
  for (int i = 0; i < kPsaLevels; ++i) cols.push_back("psa_level" + std::to_string(i));
  for (int i = 0; i < kPsaLevels; ++i) cols.push_back("psa_days" + std::to_string(i));
  cols.insert(cols.end(), {"dre_days3", "bq_age", "bmi_curr"});
  return cols;
}

std::vector<std::string> SynthTextColumns() {
  std::vector<std::string> out;
  for (const auto& c : TextColumns()) out.push_back(c.name);
  return out;
}

Schema SynthSchema() {
  std::vector<ColumnSpec> cols;
  for (const auto& n : SynthNumericColumns()) cols.push_back({n, ColumnRole::kNumeric});
  for (const auto& n : SynthTextColumns()) cols.push_back({n, ColumnRole::kText});
  cols.push_back({"pros_stage", ColumnRole::kLabel});
  return Schema(std::move(cols));
}

std::vector<size_t> SynthClassCounts(const SynthConfig& cfg) {
  cfg.Validate();
  const size_t n = cfg.n_rows;
  std::vector<size_t> counts(kNumStages);
  std::vector<double> rem(kNumStages);
  size_t assigned = 0;
  for (int c = 0; c < kNumStages; ++c) {
    const double exact = static_cast<double>(n) * cfg.class_proportions[c];
    counts[c] = static_cast<size_t>(std::floor(exact));
    rem[c] = exact - std::floor(exact);
    assigned += counts[c];
  }
  std::vector<int> order(kNumStages);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return rem[a] > rem[b]; });
  for (size_t i = 0; assigned < n; ++i, ++assigned) ++counts[order[i % kNumStages]];
  for (int c = 0; c < kNumStages; ++c) {
    if (cfg.class_proportions[c] > 0 && counts[c] == 0) {
      throw DataError("n_rows too small: stage " + std::to_string(c) +
                      " would get no rows");
    }
  }
  return counts;
}

Dataset GenerateSynthetic(const SynthConfig& cfg) {
  const auto counts = SynthClassCounts(cfg);
  Rng rng(cfg.seed);

  Labels labels;
  for (int c = 0; c < kNumStages; ++c) labels.insert(labels.end(), counts[c], c);
  rng.Shuffle(labels);

  // PSA offset per class: signal classes get distinct positive offsets in
  // ascending class order, all others share offset 0.
  std::vector<double> offset(kNumStages, 0.0);
  int rank = 0;
  for (int c : cfg.numeric_signal_classes) offset[c] = kPsaSeparation * (++rank);

  const auto& text_cols = TextColumns();
  Dataset ds;
  ds.schema = SynthSchema();
  const auto numeric_names = SynthNumericColumns();
  const size_t n = cfg.n_rows;
  ds.numeric.resize(static_cast<Eigen::Index>(n),
                    static_cast<Eigen::Index>(numeric_names.size()));
  ds.text.assign(n, std::vector<std::string>(text_cols.size()));
  ds.labels = labels;
  ds.row_ids.resize(n);
  std::iota(ds.row_ids.begin(), ds.row_ids.end(), size_t{0});

  for (size_t r = 0; r < n; ++r) {
    const int c = labels[r];
    auto row = ds.numeric.row(static_cast<Eigen::Index>(r));
    const double mean = kPsaBase + offset[c];
    double psa_sum = 0.0;
    for (int k = 0; k < kPsaLevels; ++k) {
      const double v = Round(mean + cfg.noise_scale * rng.Normal(), 1000);
      row(3 + k) = v;
      psa_sum += v;
    }
    row(0) = Round(psa_sum / kPsaLevels, 1000);  // pros_dx_psa
    row(1) = std::round(std::abs(120.0 * rng.Normal()));
    row(2) = std::round(std::max(30.0, 2000.0 + 800.0 * rng.Normal()));
    for (int k = 0; k < kPsaLevels; ++k) {
      row(3 + kPsaLevels + k) = std::round(std::abs(365.0 * k + 30.0 * rng.Normal()));
    }
    row(15) = std::round(1095.0 + 30.0 * rng.Normal());
    row(16) = std::round(63.0 + 5.0 * rng.Normal());
    row(17) = Round(27.0 + 4.0 * rng.Normal(), 10);

    const bool text_signal = cfg.text_signal_classes.count(c) > 0;
    for (size_t j = 0; j < text_cols.size(); ++j) {
      const auto& col = text_cols[j];
      if (col.carries_signal && text_signal && rng.Bernoulli(cfg.text_signal_rate)) {
        ds.text[r][j] = Pick(col.by_class[c], rng);
      } else {
        ds.text[r][j] = Pick(col.shared, rng);
      }
    }
  }

  // MCAR blanking, numeric cells then text cells, row-major.
  for (size_t r = 0; r < n; ++r) {
    for (Eigen::Index j = 0; j < ds.numeric.cols(); ++j) {
      if (rng.Bernoulli(cfg.missing_rate)) {
        ds.numeric(static_cast<Eigen::Index>(r), j) =
            std::numeric_limits<double>::quiet_NaN();
      }
    }
  }
  for (size_t r = 0; r < n; ++r) {
    for (auto& cell : ds.text[r]) {
      if (rng.Bernoulli(cfg.missing_rate)) cell.clear();
    }
  }
  return ds;
}

}  // namespace stagefuse
