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

#include "stagefuse/explain.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <sstream>

#include "stagefuse/datamodel.h"
#include "stagefuse/parallel.h"
#include "stagefuse/random.h"

namespace stagefuse {

namespace {

// Subsets evaluated per model call in exact mode.
constexpr uint32_t kMaskBatch = 64;

void CheckShapInputs(const Vector& x, const Matrix& background) {
  if (background.rows() == 0) throw DataError("empty SHAP background");
  if (background.cols() != x.size()) {
    throw DataError("SHAP background width differs from sample width");
  }
}

uint64_t Factorial(int n) {
  uint64_t f = 1;
  for (int i = 2; i <= n; ++i) f *= static_cast<uint64_t>(i);
  return f;
}

}  // namespace

ProbaFn ForestProbaFn(const ForestModel& model) {
  return [&model](const Matrix& x) { return PredictProba(model, x); };
}

Vector CoalitionValue(const ProbaFn& model, const Vector& x,
                      const std::vector<bool>& coalition,
                      const Matrix& background) {
  CheckShapInputs(x, background);
  if (coalition.size() != static_cast<size_t>(x.size())) {
    throw DataError("coalition size differs from feature count");
  }
  Matrix composite = background;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    if (coalition[static_cast<size_t>(j)]) composite.col(j).setConstant(x(j));
  }
  return model(composite).colwise().mean().transpose();
}

double ShapleyWeight(int s, int d) {
  return static_cast<double>(Factorial(s)) *
         static_cast<double>(Factorial(d - s - 1)) /
         static_cast<double>(Factorial(d));
}

ShapResult ShapExact(const ProbaFn& model, const Vector& x,
                     const Matrix& background) {
  CheckShapInputs(x, background);
  const int d = static_cast<int>(x.size());
  if (d > kMaxExactFeatures) {
    throw DataError("exact SHAP supports at most " +
                    std::to_string(kMaxExactFeatures) + " features (got " +
                    std::to_string(d) + "); use sampling mode");
  }
  const uint32_t n_masks = 1u << d;
  const Eigen::Index b = background.rows();

  // Coalition values for every mask; mask bit j = feature j present.
  std::vector<Vector> value(n_masks);
  for (uint32_t start = 0; start < n_masks; start += kMaskBatch) {
    const uint32_t end = std::min(n_masks, start + kMaskBatch);
    Matrix composite(static_cast<Eigen::Index>(end - start) * b, d);
    for (uint32_t m = start; m < end; ++m) {
      auto block = composite.middleRows(static_cast<Eigen::Index>(m - start) * b, b);
      block = background;
      for (int j = 0; j < d; ++j) {
        if (m & (1u << j)) block.col(j).setConstant(x(j));
      }
    }
    const Matrix proba = model(composite);
    for (uint32_t m = start; m < end; ++m) {
      value[m] = proba.middleRows(static_cast<Eigen::Index>(m - start) * b, b)
                     .colwise()
                     .mean()
                     .transpose();
    }
  }

  std::vector<double> weight(d);
  for (int s = 0; s < d; ++s) weight[s] = ShapleyWeight(s, d);

  const Eigen::Index classes = value[0].size();
  ShapResult r;
  r.values = Matrix::Zero(d, classes);
  r.std_error = Matrix::Zero(d, classes);
  r.base = value[0];
  r.full = value[n_masks - 1];
  for (int i = 0; i < d; ++i) {
    const uint32_t bit = 1u << i;
    for (uint32_t m = 0; m < n_masks; ++m) {
      if (m & bit) continue;
      const int s = std::popcount(m);
      r.values.row(i) += weight[s] * (value[m | bit] - value[m]).transpose();
    }
  }
  return r;
}

ShapResult ShapSampling(const ProbaFn& model, const Vector& x,
                        const Matrix& background, int n_permutations,
                        uint64_t seed, int threads) {
  CheckShapInputs(x, background);
  if (n_permutations < 1) throw DataError("need at least one permutation");
  const int d = static_cast<int>(x.size());
  const Eigen::Index b = background.rows();

  // Contributions of each permutation, kept separately so the reduction order
  // is fixed.
  std::vector<Matrix> contrib(static_cast<size_t>(n_permutations));
  std::vector<Vector> base(static_cast<size_t>(n_permutations));
  std::vector<Vector> full(static_cast<size_t>(n_permutations));
  ParallelFor(contrib.size(), threads, [&](size_t p) {
    Rng rng(DeriveSeed(seed, p));
    const auto order = RandomPermutation(static_cast<size_t>(d), rng);
    // Block k holds the composite after switching on the first k features.
    Matrix composite(static_cast<Eigen::Index>(d + 1) * b, d);
    Matrix current = background;
    composite.topRows(b) = current;
    for (int k = 0; k < d; ++k) {
      const auto j = static_cast<Eigen::Index>(order[k]);
      current.col(j).setConstant(x(j));
      composite.middleRows(static_cast<Eigen::Index>(k + 1) * b, b) = current;
    }
    const Matrix proba = model(composite);
    Matrix c(d, proba.cols());
    Vector prev = proba.topRows(b).colwise().mean().transpose();
    base[p] = prev;
    for (int k = 0; k < d; ++k) {
      Vector cur = proba.middleRows(static_cast<Eigen::Index>(k + 1) * b, b)
                       .colwise()
                       .mean()
                       .transpose();
      c.row(static_cast<Eigen::Index>(order[k])) = (cur - prev).transpose();
      prev = std::move(cur);
    }
    full[p] = prev;
    contrib[p] = std::move(c);
  });

  const double n = static_cast<double>(n_permutations);
  ShapResult r;
  r.values = Matrix::Zero(d, contrib[0].cols());
  for (const auto& c : contrib) r.values += c;
  r.values /= n;
  Matrix sq = Matrix::Zero(d, contrib[0].cols());
  for (const auto& c : contrib) sq += (c - r.values).cwiseAbs2();
  r.std_error = n > 1 ? Matrix((sq / (n - 1.0) / n).cwiseSqrt())
                      : Matrix(Matrix::Zero(d, contrib[0].cols()));
  r.base = base[0];
  r.full = full[0];
  return r;
}

ShapTensor ExplainBatch(const ProbaFn& model, const Matrix& samples,
                        const Matrix& background,
                        const std::vector<std::string>& feature_names,
                        const ExplainOptions& opts) {
  if (static_cast<size_t>(samples.cols()) != feature_names.size()) {
    throw DataError("feature names do not match sample width");
  }
  ShapTensor t;
  t.feature_names = feature_names;
  for (Eigen::Index i = 0; i < samples.rows(); ++i) {
    const Vector x = samples.row(i).transpose();
    ShapResult r = opts.mode == ShapMode::kExact
                       ? ShapExact(model, x, background)
                       : ShapSampling(model, x, background, opts.n_permutations,
                                      DeriveSeed(opts.seed, static_cast<uint64_t>(i)),
                                      opts.threads);
    if (i == 0) t.base_values = r.base;
    t.values.push_back(std::move(r.values));
  }
  return t;
}

std::vector<FeatureImportance> ShapSummary(const ShapTensor& t) {
  if (t.values.empty()) throw DataError("empty SHAP tensor");
  const int d = t.features();
  const auto classes = t.values[0].cols();
  std::vector<FeatureImportance> out;
  for (int j = 0; j < d; ++j) {
    FeatureImportance fi;
    fi.feature = j;
    fi.name = t.feature_names[j];
    fi.per_class_mean_abs.assign(static_cast<size_t>(classes), 0.0);
    double total = 0.0;
    for (const auto& v : t.values) {
      for (Eigen::Index c = 0; c < classes; ++c) {
        const double a = std::abs(v(j, c));
        fi.per_class_mean_abs[c] += a / static_cast<double>(t.values.size());
        total += a;
      }
    }
    fi.mean_abs = total / static_cast<double>(t.values.size() * classes);
    out.push_back(std::move(fi));
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const FeatureImportance& a, const FeatureImportance& b) {
                     return a.mean_abs > b.mean_abs;
                   });
  return out;
}

std::vector<size_t> StratifiedSubsample(const Labels& y, size_t n_rows,
                                        uint64_t seed) {
  std::vector<size_t> all(y.size());
  std::iota(all.begin(), all.end(), size_t{0});
  if (n_rows >= y.size()) return all;
  const double fraction = static_cast<double>(n_rows) / static_cast<double>(y.size());
  const auto idx = StratifiedSplitIndices(y, fraction, seed);
  return idx.test;
}

std::vector<ShapRecord> ShapRecords(const ShapTensor& t, const Matrix& samples) {
  std::vector<ShapRecord> out;
  for (size_t i = 0; i < t.values.size(); ++i) {
    const auto& v = t.values[i];
    for (Eigen::Index j = 0; j < v.rows(); ++j) {
      for (Eigen::Index c = 0; c < v.cols(); ++c) {
        out.push_back({i, static_cast<int>(j), static_cast<int>(c), v(j, c),
                       samples(static_cast<Eigen::Index>(i), j)});
      }
    }
  }
  return out;
}

std::string ShapValuesCsv(const ShapTensor& t,
                          const std::vector<ShapRecord>& records) {
  std::ostringstream out;
  out << "sample,feature,class,value,feature_value\n";
  for (const auto& r : records) {
    out << r.sample << ',' << t.feature_names[r.feature] << ',' << r.cls << ','
        << FormatDouble(r.value) << ',' << FormatDouble(r.feature_value) << '\n';
  }
  return out.str();
}

std::string ShapSummaryCsv(const std::vector<FeatureImportance>& summary) {
  std::ostringstream out;
  out << "rank,feature,mean_abs";
  const size_t classes = summary.empty() ? 0 : summary[0].per_class_mean_abs.size();
  for (size_t c = 0; c < classes; ++c) out << ",mean_abs_class_" << c;
  out << '\n';
  for (size_t r = 0; r < summary.size(); ++r) {
    out << r + 1 << ',' << summary[r].name << ',' << FormatDouble(summary[r].mean_abs);
    for (double v : summary[r].per_class_mean_abs) out << ',' << FormatDouble(v);
    out << '\n';
  }
  return out.str();
}

std::string ShapBeeswarmSvg(const std::vector<ShapRecord>& records,
                            const std::vector<FeatureImportance>& summary,
                            int cls, int max_features) {
  const int lanes = std::min<int>(max_features, static_cast<int>(summary.size()));
  constexpr double kLeft = 180, kWidth = 560, kLane = 28, kTop = 30;
  double lim = 1e-12;
  for (const auto& r : records) {
    if (r.cls == cls) lim = std::max(lim, std::abs(r.value));
  }
  const double height = kTop + lanes * kLane + 40;
  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kLeft + kWidth + 40
      << "\" height=\"" << height << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  svg << "<text x=\"" << kLeft << "\" y=\"18\">SHAP values, class " << cls
      << "</text>\n";
  const double zero_x = kLeft + kWidth / 2;
  svg << "<line x1=\"" << zero_x << "\" y1=\"" << kTop << "\" x2=\"" << zero_x
      << "\" y2=\"" << kTop + lanes * kLane << "\" stroke=\"#999\"/>\n";
  for (int lane = 0; lane < lanes; ++lane) {
    const int f = summary[lane].feature;
    const double cy = kTop + lane * kLane + kLane / 2;
    svg << "<text x=\"" << kLeft - 8 << "\" y=\"" << cy + 4
        << "\" text-anchor=\"end\">" << summary[lane].name << "</text>\n";
    std::vector<double> fvals;
    for (const auto& r : records) {
      if (r.feature == f && r.cls == cls) fvals.push_back(r.feature_value);
    }
    std::sort(fvals.begin(), fvals.end());
    int k = 0;
    for (const auto& r : records) {
      if (r.feature != f || r.cls != cls) continue;
      const double q =
          fvals.size() > 1
              ? static_cast<double>(std::lower_bound(fvals.begin(), fvals.end(),
                                                     r.feature_value) -
                                    fvals.begin()) /
                    static_cast<double>(fvals.size() - 1)
              : 0.5;
      const double cx = zero_x + r.value / lim * (kWidth / 2 - 6);
      const double jitter = ((k++ % 7) - 3) * 2.5;
      const int red = static_cast<int>(std::lround(255 * q));
      svg << "<circle cx=\"" << FormatFixed(cx, 2) << "\" cy=\""
          << FormatFixed(cy + jitter, 2) << "\" r=\"2.5\" fill=\"rgb(" << red
          << ",40," << 255 - red << ")\"/>\n";
    }
  }
  svg << "<text x=\"" << zero_x << "\" y=\"" << height - 12
      << "\" text-anchor=\"middle\">attribution (colour: feature value quantile)"
      << "</text>\n</svg>\n";
  return svg.str();
}

}  // namespace stagefuse
