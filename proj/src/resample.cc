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

#include "stagefuse/resample.h"

#include <algorithm>
#include <map>
#include <optional>
#include <utility>

#include "stagefuse/parallel.h"
#include "stagefuse/random.h"

namespace stagefuse {

std::vector<size_t> NearestNeighbors(const Matrix& x, size_t query,
                                     const std::vector<size_t>& candidates,
                                     int k) {
  std::vector<std::pair<double, size_t>> dist;
  dist.reserve(candidates.size());
  const auto q = x.row(static_cast<Eigen::Index>(query));
  for (size_t c : candidates) {
    if (c == query) continue;
    dist.emplace_back((x.row(static_cast<Eigen::Index>(c)) - q).squaredNorm(),
                      c);
  }
  const size_t kk = std::min<size_t>(static_cast<size_t>(k), dist.size());
  std::partial_sort(dist.begin(), dist.begin() + kk, dist.end());
  std::vector<size_t> out;
  out.reserve(kk);
  for (size_t i = 0; i < kk; ++i) out.push_back(dist[i].second);
  return out;
}

SmoteResult Smote(const Matrix& x, const Labels& y, const SmoteConfig& cfg,
                  int threads) {
  if (y.empty() || x.rows() == 0) throw DataError("SMOTE on empty input");
  if (static_cast<size_t>(x.rows()) != y.size()) {
    throw DataError("SMOTE row/label count mismatch");
  }
  if (cfg.k_neighbors < 1) throw DataError("SMOTE k_neighbors must be >= 1");

  std::map<int, std::vector<size_t>> members;
  for (size_t i = 0; i < y.size(); ++i) members[y[i]].push_back(i);
  size_t majority = 0;
  for (const auto& [c, idx] : members) majority = std::max(majority, idx.size());

  std::vector<int> classes;
  for (const auto& [c, idx] : members) classes.push_back(c);
  std::vector<Matrix> synthetic(classes.size());

  ParallelFor(classes.size(), threads, [&](size_t ci) {
    const int c = classes[ci];
    const auto& idx = members.at(c);
    const size_t need = majority - idx.size();
    Matrix out(static_cast<Eigen::Index>(need), x.cols());
    if (need == 0) {
      synthetic[ci] = std::move(out);
      return;
    }
    Rng rng(DeriveSeed(cfg.seed, static_cast<uint64_t>(c)));
    const int k = std::min<int>(cfg.k_neighbors, static_cast<int>(idx.size()) - 1);
    std::vector<std::optional<std::vector<size_t>>> nn_cache(idx.size());
    for (size_t s = 0; s < need; ++s) {
      const size_t pick = rng.Below(idx.size());
      const auto base = x.row(static_cast<Eigen::Index>(idx[pick]));
      if (k == 0) {
        out.row(static_cast<Eigen::Index>(s)) = base;
        continue;
      }
      if (!nn_cache[pick]) nn_cache[pick] = NearestNeighbors(x, idx[pick], idx, k);
      const size_t nn = (*nn_cache[pick])[rng.Below(static_cast<uint64_t>(k))];
      const double u = rng.Uniform();
      out.row(static_cast<Eigen::Index>(s)) =
          base + u * (x.row(static_cast<Eigen::Index>(nn)) - base);
    }
    synthetic[ci] = std::move(out);
  });

  size_t total = y.size();
  for (const auto& m : synthetic) total += static_cast<size_t>(m.rows());
  SmoteResult res;
  res.n_original = y.size();
  res.x.resize(static_cast<Eigen::Index>(total), x.cols());
  res.x.topRows(x.rows()) = x;
  res.y = y;
  Eigen::Index at = x.rows();
  for (size_t ci = 0; ci < classes.size(); ++ci) {
    const auto& m = synthetic[ci];
    res.x.middleRows(at, m.rows()) = m;
    at += m.rows();
    res.y.insert(res.y.end(), static_cast<size_t>(m.rows()), classes[ci]);
  }
  return res;
}

}  // namespace stagefuse
