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

#include "stagefuse/pca.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/SVD>

namespace stagefuse {

PcaModel FitPca(const Matrix& x, double threshold) {
  if (x.rows() < 2) throw DataError("PCA needs at least 2 rows");
  if (!(threshold > 0.0 && threshold <= 1.0)) {
    throw DataError("PCA variance threshold must lie in (0, 1]");
  }
  if (!x.allFinite()) throw DataError("PCA input contains non-finite values");

  PcaModel m;
  m.threshold = threshold;
  m.mean = x.colwise().mean().transpose();
  const Eigen::MatrixXd centered = x.rowwise() - m.mean.transpose();

  Eigen::BDCSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinV);
  const Vector s = svd.singularValues();
  const double denom = static_cast<double>(x.rows() - 1);
  const Vector variance = s.array().square() / denom;
  m.total_variance = variance.sum();
  if (!(m.total_variance > 0.0) || s(0) == 0.0) {
    throw DataError("PCA input has zero total variance");
  }

  const double tol = static_cast<double>(std::max(x.rows(), x.cols())) *
                     std::numeric_limits<double>::epsilon() * s(0);
  Eigen::Index rank = 0;
  while (rank < s.size() && s(rank) > tol) ++rank;

  Eigen::Index k = rank;
  double cum = 0.0;
  for (Eigen::Index i = 0; i < rank; ++i) {
    cum += variance(i) / m.total_variance;
    if (cum >= threshold) {
      k = i + 1;
      break;
    }
  }

  m.components = svd.matrixV().leftCols(k).transpose();
  for (Eigen::Index i = 0; i < k; ++i) {
    Eigen::Index arg = 0;
    m.components.row(i).cwiseAbs().maxCoeff(&arg);
    if (m.components(i, arg) < 0) m.components.row(i) *= -1.0;
  }
  m.explained_variance = variance.head(k);
  m.explained_variance_ratio = m.explained_variance / m.total_variance;
  m.cumulative_variance.resize(k);
  double acc = 0.0;
  for (Eigen::Index i = 0; i < k; ++i) {
    acc += m.explained_variance_ratio(i);
    m.cumulative_variance(i) = acc;
  }
  return m;
}

Matrix PcaTransform(const PcaModel& model, const Matrix& x) {
  if (x.cols() != model.mean.size()) {
    throw DataError("PCA dimension mismatch: model has " +
                    std::to_string(model.mean.size()) + " inputs, data has " +
                    std::to_string(x.cols()));
  }
  return (x.rowwise() - model.mean.transpose()) * model.components.transpose();
}

std::vector<ExplainedVarianceRow> ExplainedVarianceTable(const PcaModel& model) {
  std::vector<ExplainedVarianceRow> rows;
  for (int i = 0; i < model.n_components(); ++i) {
    rows.push_back({i + 1, model.explained_variance_ratio(i),
                    model.cumulative_variance(i)});
  }
  return rows;
}

std::string ExplainedVarianceCsv(const PcaModel& model) {
  std::string out = "component,explained_variance_ratio,cumulative_variance\n";
  for (const auto& r : ExplainedVarianceTable(model)) {
    out += std::to_string(r.component) + "," + FormatFixed(r.ratio, 4) + "," +
           FormatFixed(r.cumulative, 4) + "\n";
  }
  return out;
}

}  // namespace stagefuse
