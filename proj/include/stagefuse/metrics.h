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

#ifndef STAGEFUSE_METRICS_H_
#define STAGEFUSE_METRICS_H_

#include <string>
#include <vector>

#include "stagefuse/common.h"

namespace stagefuse {

// counts[actual][predicted].
struct ConfusionMatrix {
  std::vector<std::vector<long>> counts;

  int n_classes() const { return static_cast<int>(counts.size()); }
  long Total() const;
  long Support(int c) const;  // row sum
  long Predicted(int c) const;  // column sum
};

ConfusionMatrix ComputeConfusionMatrix(const Labels& y_true,
                                       const Labels& y_pred, int n_classes);

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  long support = 0;
  // Set when any of the three ratios had a zero denominator and was reported
  // as 0.
  bool degenerate = false;
};

struct AveragedMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct PrfReport {
  std::vector<ClassMetrics> per_class;
  AveragedMetrics macro;
  AveragedMetrics weighted;
};

PrfReport PrecisionRecallF1(const ConfusionMatrix& cm);

// trace / total. Throws DataError on an empty matrix.
double Accuracy(const ConfusionMatrix& cm);

struct AucResult {
  // NaN where the class had no positives or no negatives.
  std::vector<double> per_class;
  std::vector<bool> defined;
  double macro = 0.0;  // mean over defined classes; NaN if none
};

// Mann-Whitney statistic for one binary problem, ties counted as one half.
double BinaryAuc(const std::vector<int>& positive,
                 const std::vector<double>& scores);

// One-vs-rest AUC per class on proba[:, c].
AucResult RocAucOvr(const Labels& y_true, const Matrix& proba);

struct CurvePoint {
  double x;
  double y;
  double threshold;
};

// (FPR, TPR) at every distinct threshold in descending order, starting at
// (0, 0) with threshold +inf and ending at (1, 1).
std::vector<CurvePoint> RocCurve(const std::vector<int>& positive,
                                 const std::vector<double>& scores);

// (recall, precision) at every distinct threshold in descending order,
// starting at (0, 1) with threshold +inf.
std::vector<CurvePoint> PrCurve(const std::vector<int>& positive,
                                const std::vector<double>& scores);

// Trapezoidal area under a curve given in x order.
double TrapezoidArea(const std::vector<CurvePoint>& curve);

struct EvalReport {
  ConfusionMatrix confusion;
  PrfReport prf;
  double accuracy = 0.0;
  // Empty when no probabilities were available.
  AucResult auc;
  bool has_auc = false;
};

EvalReport Evaluate(const Labels& y_true, const Labels& y_pred, int n_classes);
EvalReport Evaluate(const Labels& y_true, const Labels& y_pred,
                    const Matrix& proba);

// Per-class rows, then accuracy, macro avg and weighted avg rows, full
// precision.
std::string MetricsCsv(const EvalReport& report);
std::string ConfusionCsv(const ConfusionMatrix& cm);
std::string CurveCsv(const std::vector<CurvePoint>& curve,
                     const std::string& x_name, const std::string& y_name);
// Line plot of a curve on the unit square, drawn from the same points the
// CSV holds.
std::string CurveSvg(const std::vector<CurvePoint>& curve, const std::string& title,
                     const std::string& x_name, const std::string& y_name);
// Human-readable table rounded to 2 decimals.
std::string FormatReport(const EvalReport& report);

}  // namespace stagefuse

#endif  // STAGEFUSE_METRICS_H_
