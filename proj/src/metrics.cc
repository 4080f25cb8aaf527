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

#include "stagefuse/metrics.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace stagefuse {

namespace {

double SafeRatio(double num, double den, bool* degenerate) {
  if (den == 0.0) {
    *degenerate = true;
    return 0.0;
  }
  return num / den;
}

// Indices sorted by descending score.
std::vector<size_t> DescendingOrder(const std::vector<double>& scores) {
  std::vector<size_t> order(scores.size());
  std::iota(order.begin(), order.end(), size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](size_t a, size_t b) { return scores[a] > scores[b]; });
  return order;
}

void CheckBinaryInput(const std::vector<int>& positive,
                      const std::vector<double>& scores) {
  if (positive.size() != scores.size()) {
    throw DataError("label/score length mismatch");
  }
}

}  // namespace

long ConfusionMatrix::Total() const {
  long t = 0;
  for (const auto& row : counts) t += std::accumulate(row.begin(), row.end(), 0L);
  return t;
}

long ConfusionMatrix::Support(int c) const {
  return std::accumulate(counts[c].begin(), counts[c].end(), 0L);
}

long ConfusionMatrix::Predicted(int c) const {
  long t = 0;
  for (const auto& row : counts) t += row[c];
  return t;
}

ConfusionMatrix ComputeConfusionMatrix(const Labels& y_true,
                                       const Labels& y_pred, int n_classes) {
  if (y_true.size() != y_pred.size()) {
    throw DataError("y_true and y_pred lengths differ");
  }
  ConfusionMatrix cm;
  cm.counts.assign(n_classes, std::vector<long>(n_classes, 0));
  for (size_t i = 0; i < y_true.size(); ++i) {
    if (y_true[i] < 0 || y_true[i] >= n_classes || y_pred[i] < 0 ||
        y_pred[i] >= n_classes) {
      throw DataError("label out of range in confusion matrix");
    }
    ++cm.counts[y_true[i]][y_pred[i]];
  }
  return cm;
}

PrfReport PrecisionRecallF1(const ConfusionMatrix& cm) {
  PrfReport r;
  const int C = cm.n_classes();
  const double total = static_cast<double>(cm.Total());
  for (int c = 0; c < C; ++c) {
    ClassMetrics m;
    const double tp = static_cast<double>(cm.counts[c][c]);
    m.support = cm.Support(c);
    m.precision = SafeRatio(tp, static_cast<double>(cm.Predicted(c)), &m.degenerate);
    m.recall = SafeRatio(tp, static_cast<double>(m.support), &m.degenerate);
    m.f1 = SafeRatio(2.0 * m.precision * m.recall, m.precision + m.recall,
                     &m.degenerate);
    r.macro.precision += m.precision / C;
    r.macro.recall += m.recall / C;
    r.macro.f1 += m.f1 / C;
    if (total > 0) {
      const double w = static_cast<double>(m.support) / total;
      r.weighted.precision += w * m.precision;
      r.weighted.f1 += w * m.f1;
    }
    r.per_class.push_back(m);
  }
  // support_c / total * tp_c / support_c telescopes to trace / total; computed
  // that way so that the identity with accuracy is exact.
  if (total > 0) {
    long trace = 0;
    for (int c = 0; c < C; ++c) trace += cm.counts[c][c];
    r.weighted.recall = static_cast<double>(trace) / total;
  }
  return r;
}

double Accuracy(const ConfusionMatrix& cm) {
  const long total = cm.Total();
  if (total == 0) throw DataError("accuracy of an empty confusion matrix");
  long trace = 0;
  for (int c = 0; c < cm.n_classes(); ++c) trace += cm.counts[c][c];
  return static_cast<double>(trace) / static_cast<double>(total);
}

double BinaryAuc(const std::vector<int>& positive,
                 const std::vector<double>& scores) {
  CheckBinaryInput(positive, scores);
  const size_t n = scores.size();
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), size_t{0});
  std::sort(order.begin(), order.end(),
            [&](size_t a, size_t b) { return scores[a] < scores[b]; });
  // Midranks (1-based) summed over positives.
  double rank_sum = 0.0;
  size_t n_pos = 0;
  for (size_t i = 0; i < n;) {
    size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const double midrank = 0.5 * static_cast<double>(i + 1 + j);
    for (size_t k = i; k < j; ++k) {
      if (positive[order[k]]) {
        rank_sum += midrank;
        ++n_pos;
      }
    }
    i = j;
  }
  const size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) return std::numeric_limits<double>::quiet_NaN();
  const double np = static_cast<double>(n_pos);
  return (rank_sum - np * (np + 1.0) / 2.0) / (np * static_cast<double>(n_neg));
}

AucResult RocAucOvr(const Labels& y_true, const Matrix& proba) {
  if (static_cast<size_t>(proba.rows()) != y_true.size()) {
    throw DataError("probability rows do not match labels");
  }
  AucResult r;
  const auto C = proba.cols();
  double sum = 0.0;
  int defined = 0;
  std::vector<double> scores(y_true.size());
  std::vector<int> pos(y_true.size());
  for (Eigen::Index c = 0; c < C; ++c) {
    for (size_t i = 0; i < y_true.size(); ++i) {
      scores[i] = proba(static_cast<Eigen::Index>(i), c);
      pos[i] = y_true[i] == c ? 1 : 0;
    }
    const double auc = BinaryAuc(pos, scores);
    r.per_class.push_back(auc);
    r.defined.push_back(!std::isnan(auc));
    if (!std::isnan(auc)) {
      sum += auc;
      ++defined;
    }
  }
  r.macro = defined ? sum / defined : std::numeric_limits<double>::quiet_NaN();
  return r;
}

std::vector<CurvePoint> RocCurve(const std::vector<int>& positive,
                                 const std::vector<double>& scores) {
  CheckBinaryInput(positive, scores);
  const double P = static_cast<double>(std::count(positive.begin(), positive.end(), 1));
  const double N = static_cast<double>(positive.size()) - P;
  if (P == 0 || N == 0) {
    throw DataError("ROC curve needs at least one positive and one negative");
  }
  const auto order = DescendingOrder(scores);
  std::vector<CurvePoint> curve{{0.0, 0.0, std::numeric_limits<double>::infinity()}};
  double tp = 0, fp = 0;
  for (size_t i = 0; i < order.size();) {
    const double thr = scores[order[i]];
    while (i < order.size() && scores[order[i]] == thr) {
      (positive[order[i]] ? tp : fp) += 1.0;
      ++i;
    }
    curve.push_back({fp / N, tp / P, thr});
  }
  return curve;
}

std::vector<CurvePoint> PrCurve(const std::vector<int>& positive,
                                const std::vector<double>& scores) {
  CheckBinaryInput(positive, scores);
  const double P = static_cast<double>(std::count(positive.begin(), positive.end(), 1));
  if (P == 0) throw DataError("PR curve needs at least one positive");
  const auto order = DescendingOrder(scores);
  std::vector<CurvePoint> curve{{0.0, 1.0, std::numeric_limits<double>::infinity()}};
  double tp = 0, fp = 0;
  for (size_t i = 0; i < order.size();) {
    const double thr = scores[order[i]];
    while (i < order.size() && scores[order[i]] == thr) {
      (positive[order[i]] ? tp : fp) += 1.0;
      ++i;
    }
    curve.push_back({tp / P, tp / (tp + fp), thr});
  }
  return curve;
}

double TrapezoidArea(const std::vector<CurvePoint>& curve) {
  double area = 0.0;
  for (size_t i = 1; i < curve.size(); ++i) {
    area += (curve[i].x - curve[i - 1].x) * (curve[i].y + curve[i - 1].y) / 2.0;
  }
  return area;
}

EvalReport Evaluate(const Labels& y_true, const Labels& y_pred, int n_classes) {
  EvalReport r;
  r.confusion = ComputeConfusionMatrix(y_true, y_pred, n_classes);
  r.prf = PrecisionRecallF1(r.confusion);
  r.accuracy = Accuracy(r.confusion);
  CheckInvariant(r.prf.weighted.recall == r.accuracy,
                 "weighted recall differs from accuracy");
  return r;
}

EvalReport Evaluate(const Labels& y_true, const Labels& y_pred,
                    const Matrix& proba) {
  EvalReport r = Evaluate(y_true, y_pred, static_cast<int>(proba.cols()));
  r.auc = RocAucOvr(y_true, proba);
  r.has_auc = true;
  return r;
}

std::string MetricsCsv(const EvalReport& report) {
  std::ostringstream out;
  out << "row,precision,recall,f1,support,degenerate\n";
  const auto& prf = report.prf;
  const long total = report.confusion.Total();
  for (size_t c = 0; c < prf.per_class.size(); ++c) {
    const auto& m = prf.per_class[c];
    out << "class_" << c << ',' << FormatDouble(m.precision) << ','
        << FormatDouble(m.recall) << ',' << FormatDouble(m.f1) << ','
        << m.support << ',' << (m.degenerate ? 1 : 0) << '\n';
  }
  out << "accuracy,,," << FormatDouble(report.accuracy) << ',' << total << ",0\n";
  out << "macro_avg," << FormatDouble(prf.macro.precision) << ','
      << FormatDouble(prf.macro.recall) << ',' << FormatDouble(prf.macro.f1)
      << ',' << total << ",0\n";
  out << "weighted_avg," << FormatDouble(prf.weighted.precision) << ','
      << FormatDouble(prf.weighted.recall) << ','
      << FormatDouble(prf.weighted.f1) << ',' << total << ",0\n";
  if (report.has_auc) {
    for (size_t c = 0; c < report.auc.per_class.size(); ++c) {
      out << "auc_class_" << c << ",,,"
          << (report.auc.defined[c] ? FormatDouble(report.auc.per_class[c]) : "")
          << ',' << prf.per_class[c].support << ','
          << (report.auc.defined[c] ? 0 : 1) << '\n';
    }
    out << "auc_macro,,," << FormatDouble(report.auc.macro) << ',' << total
        << ",0\n";
  }
  return out.str();
}

std::string ConfusionCsv(const ConfusionMatrix& cm) {
  std::ostringstream out;
  out << "actual";
  for (int c = 0; c < cm.n_classes(); ++c) out << ",pred_" << c;
  out << '\n';
  for (int a = 0; a < cm.n_classes(); ++a) {
    out << a;
    for (int p = 0; p < cm.n_classes(); ++p) out << ',' << cm.counts[a][p];
    out << '\n';
  }
  return out.str();
}

std::string CurveCsv(const std::vector<CurvePoint>& curve,
                     const std::string& x_name, const std::string& y_name) {
  std::ostringstream out;
  out << x_name << ',' << y_name << ",threshold\n";
  for (const auto& p : curve) {
    out << FormatDouble(p.x) << ',' << FormatDouble(p.y) << ','
        << (std::isinf(p.threshold) ? std::string("inf") : FormatDouble(p.threshold))
        << '\n';
  }
  return out.str();
}

std::string CurveSvg(const std::vector<CurvePoint>& curve, const std::string& title,
                     const std::string& x_name, const std::string& y_name) {
  constexpr double kLeft = 50, kTop = 30, kSize = 300;
  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kLeft + kSize + 30
      << "\" height=\"" << kTop + kSize + 50
      << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  svg << "<text x=\"" << kLeft << "\" y=\"18\">" << title << "</text>\n";
  svg << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << kSize
      << "\" height=\"" << kSize << "\" fill=\"none\" stroke=\"#999\"/>\n";
  svg << "<polyline fill=\"none\" stroke=\"#1f5fa8\" stroke-width=\"1.5\" points=\"";
  for (size_t i = 0; i < curve.size(); ++i) {
    if (i) svg << ' ';
    svg << FormatFixed(kLeft + curve[i].x * kSize, 2) << ','
        << FormatFixed(kTop + (1.0 - curve[i].y) * kSize, 2);
  }
  svg << "\"/>\n";
  svg << "<text x=\"" << kLeft + kSize / 2 << "\" y=\"" << kTop + kSize + 30
      << "\" text-anchor=\"middle\">" << x_name << "</text>\n";
  svg << "<text x=\"14\" y=\"" << kTop + kSize / 2
      << "\" transform=\"rotate(-90 14 " << kTop + kSize / 2
      << ")\" text-anchor=\"middle\">" << y_name << "</text>\n</svg>\n";
  return svg.str();
}

std::string FormatReport(const EvalReport& report) {
  std::ostringstream out;
  out << "class  precision  recall  f1    support\n";
  const auto& prf = report.prf;
  for (size_t c = 0; c < prf.per_class.size(); ++c) {
    const auto& m = prf.per_class[c];
    out << c << "      " << FormatFixed(m.precision, 2) << "       "
        << FormatFixed(m.recall, 2) << "    " << FormatFixed(m.f1, 2) << "  "
        << m.support << '\n';
  }
  const long total = report.confusion.Total();
  out << "accuracy                       " << FormatFixed(report.accuracy, 2)
      << "  " << total << '\n';
  out << "macro  " << FormatFixed(prf.macro.precision, 2) << "       "
      << FormatFixed(prf.macro.recall, 2) << "    "
      << FormatFixed(prf.macro.f1, 2) << "  " << total << '\n';
  out << "wtd    " << FormatFixed(prf.weighted.precision, 2) << "       "
      << FormatFixed(prf.weighted.recall, 2) << "    "
      << FormatFixed(prf.weighted.f1, 2) << "  " << total << '\n';
  if (report.has_auc) {
    out << "auc_macro " << FormatFixed(report.auc.macro, 4) << '\n';
  }
  return out.str();
}

}  // namespace stagefuse
