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

// Independent reference implementations used by the unit and acceptance
// tests. None of these call into the library code they check.
#ifndef STAGEFUSE_TESTS_ORACLES_H_
#define STAGEFUSE_TESTS_ORACLES_H_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <string_view>
#include <utility>
#include <vector>

#include "stagefuse/common.h"

namespace stagefuse::oracle {

// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, descending.
inline std::vector<double> JacobiEigenvalues(Eigen::MatrixXd a) {
  const Eigen::Index n = a.rows();
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (Eigen::Index p = 0; p < n; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    }
    if (off < 1e-30 * std::max(1.0, a.squaredNorm())) break;
    for (Eigen::Index p = 0; p < n; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        if (a(p, q) == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (Eigen::Index k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
      }
    }
  }
  std::vector<double> ev(static_cast<size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) ev[static_cast<size_t>(i)] = a(i, i);
  std::sort(ev.rbegin(), ev.rend());
  return ev;
}

// Sample covariance (divisor n - 1), by explicit loops.
inline Eigen::MatrixXd Covariance(const Matrix& x) {
  const Eigen::Index n = x.rows(), d = x.cols();
  std::vector<double> mean(static_cast<size_t>(d), 0.0);
  for (Eigen::Index j = 0; j < d; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) mean[j] += x(i, j);
    mean[j] /= static_cast<double>(n);
  }
  Eigen::MatrixXd c(d, d);
  for (Eigen::Index a = 0; a < d; ++a) {
    for (Eigen::Index b = 0; b < d; ++b) {
      double s = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) s += (x(i, a) - mean[a]) * (x(i, b) - mean[b]);
      c(a, b) = s / static_cast<double>(n - 1);
    }
  }
  return c;
}

inline double Factorial(int n) {
  double f = 1.0;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

// Shapley values of every feature for every class, transcribed term by term:
// phi_i = sum over S subset of N \ {i} of |S|!(|N|-|S|-1)!/|N|! *
// [v(S u {i}) - v(S)], with v(S) the background mean of the model on rows
// taking S from x and the rest from the background row.
inline Matrix BruteForceShapley(
    const std::function<Matrix(const Matrix&)>& model, const Vector& x,
    const Matrix& background) {
  const int d = static_cast<int>(x.size());
  auto value = [&](uint32_t subset) {
    Matrix rows = background;
    for (Eigen::Index b = 0; b < rows.rows(); ++b) {
      for (int j = 0; j < d; ++j) {
        if (subset & (1u << j)) rows(b, j) = x(j);
      }
    }
    const Matrix p = model(rows);
    Vector v = Vector::Zero(p.cols());
    for (Eigen::Index b = 0; b < p.rows(); ++b) v += p.row(b).transpose();
    return Vector(v / static_cast<double>(p.rows()));
  };
  Matrix phi;
  for (int i = 0; i < d; ++i) {
    for (uint32_t s = 0; s < (1u << d); ++s) {
      if (s & (1u << i)) continue;
      const int size = __builtin_popcount(s);
      const double w = Factorial(size) * Factorial(d - size - 1) / Factorial(d);
      const Vector diff = value(s | (1u << i)) - value(s);
      if (phi.size() == 0) phi = Matrix::Zero(d, diff.size());
      phi.row(i) += w * diff.transpose();
    }
  }
  return phi;
}

// Indices of the k nearest same-set rows of `q` by squared Euclidean
// distance, ties to the lower index.
inline std::vector<size_t> BruteKnn(const Matrix& x, size_t q,
                                    const std::vector<size_t>& members, int k) {
  std::vector<std::pair<double, size_t>> d;
  for (size_t m : members) {
    if (m == q) continue;
    double s = 0.0;
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      const double t = x(static_cast<Eigen::Index>(m), j) - x(static_cast<Eigen::Index>(q), j);
      s += t * t;
    }
    d.push_back({s, m});
  }
  std::sort(d.begin(), d.end());
  std::vector<size_t> out;
  for (int i = 0; i < k && i < static_cast<int>(d.size()); ++i) out.push_back(d[i].second);
  return out;
}

// Distance from z to the segment [a, b].
inline double SegmentDistance(const Vector& z, const Vector& a, const Vector& b) {
  const Vector ab = b - a;
  const double len2 = ab.squaredNorm();
  double t = len2 > 0 ? (z - a).dot(ab) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return (z - (a + t * ab)).norm();
}

// Same as above on raw rows of length d, without allocating.
inline double SegmentDistance(const double* z, const double* a, const double* b, long d) {
  double len2 = 0.0, dot = 0.0;
  for (long j = 0; j < d; ++j) {
    len2 += (b[j] - a[j]) * (b[j] - a[j]);
    dot += (z[j] - a[j]) * (b[j] - a[j]);
  }
  const double t = len2 > 0 ? std::clamp(dot / len2, 0.0, 1.0) : 0.0;
  double s = 0.0;
  for (long j = 0; j < d; ++j) {
    const double r = z[j] - (a[j] + t * (b[j] - a[j]));
    s += r * r;
  }
  return std::sqrt(s);
}

// Best weighted Gini decrease over every feature and every threshold between
// distinct values, recomputing both children from scratch each time.
inline double BruteForceBestGain(const Matrix& x, const Labels& y,
                                 const std::vector<double>& w, int n_classes,
                                 int min_leaf) {
  auto gini_mass = [&](const std::vector<double>& sums) {
    double t = 0.0, sq = 0.0;
    for (double s : sums) t += s;
    if (t <= 0) return 0.0;
    for (double s : sums) sq += (s / t) * (s / t);
    return t * (1.0 - sq);
  };
  std::vector<double> all(n_classes, 0.0);
  for (size_t i = 0; i < y.size(); ++i) all[y[i]] += w[i];
  double total = 0.0;
  for (double s : all) total += s;
  const double parent = gini_mass(all) / total;
  double best = 0.0;
  for (Eigen::Index f = 0; f < x.cols(); ++f) {
    std::vector<double> vals;
    for (Eigen::Index i = 0; i < x.rows(); ++i) vals.push_back(x(i, f));
    std::sort(vals.begin(), vals.end());
    vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
    for (size_t t = 0; t + 1 < vals.size(); ++t) {
      std::vector<double> l(n_classes, 0.0), r(n_classes, 0.0);
      int nl = 0, nr = 0;
      for (Eigen::Index i = 0; i < x.rows(); ++i) {
        if (x(i, f) <= vals[t]) {
          l[y[i]] += w[i];
          ++nl;
        } else {
          r[y[i]] += w[i];
          ++nr;
        }
      }
      if (nl < min_leaf || nr < min_leaf) continue;
      const double gain = parent - (gini_mass(l) + gini_mass(r)) / total;
      best = std::max(best, gain);
    }
  }
  return best;
}

// Area under the ROC step curve by explicit pair counting.
inline double PairCountAuc(const std::vector<int>& pos, const std::vector<double>& s) {
  double num = 0.0, np = 0.0, nn = 0.0;
  for (size_t i = 0; i < pos.size(); ++i) {
    if (pos[i]) np += 1; else nn += 1;
  }
  for (size_t i = 0; i < pos.size(); ++i) {
    if (!pos[i]) continue;
    for (size_t j = 0; j < pos.size(); ++j) {
      if (pos[j]) continue;
      num += s[i] > s[j] ? 1.0 : (s[i] == s[j] ? 0.5 : 0.0);
    }
  }
  return num / (np * nn);
}

// 64-bit FNV-1a with the offset basis xor'ed with a seed.
inline uint64_t Fnv1a(std::string_view s, uint64_t seed) {
  uint64_t h = 0xcbf29ce484222325ULL ^ seed;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace stagefuse::oracle

#endif  // STAGEFUSE_TESTS_ORACLES_H_
