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

#include "stagefuse/forest.h"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>

#include "stagefuse/parallel.h"
#include "stagefuse/random.h"

namespace stagefuse {

namespace {

// Gains below this fraction of the node weight are treated as no gain.
constexpr double kRelativeGainEpsilon = 1e-12;

// Per-feature dense ranks of the training values, shared by all trees. Two
// rows compare on a feature exactly as their ranks do, so nodes sort integer
// keys instead of doubles.
struct RankedColumns {
  std::vector<std::vector<uint32_t>> rank;   // feature -> row -> rank
  std::vector<std::vector<double>> values;   // feature -> rank -> value
  std::vector<int> rank_bits;                // bits needed for the top rank

  explicit RankedColumns(const Matrix& x) {
    const auto n = static_cast<size_t>(x.rows());
    const auto d = static_cast<size_t>(x.cols());
    rank.assign(d, std::vector<uint32_t>(n));
    values.resize(d);
    rank_bits.resize(d);
    std::vector<uint32_t> order(n);
    for (size_t f = 0; f < d; ++f) {
      const auto fi = static_cast<Eigen::Index>(f);
      std::iota(order.begin(), order.end(), 0u);
      std::sort(order.begin(), order.end(), [&](uint32_t a, uint32_t b) {
        return x(a, fi) < x(b, fi);
      });
      auto& vals = values[f];
      for (uint32_t r : order) {
        const double v = x(r, fi);
        if (vals.empty() || vals.back() != v) vals.push_back(v);
        rank[f][r] = static_cast<uint32_t>(vals.size() - 1);
      }
      int bits = 0;
      while ((vals.size() - 1) >> bits) ++bits;
      rank_bits[f] = bits;
    }
  }
};

// Node sort keys: rank in the high 32 bits, row index in the low 32.
constexpr int kRadixBits = 11;
constexpr size_t kRadixMin = 256;

void SortKeys(std::vector<uint64_t>& keys, std::vector<uint64_t>& scratch,
              int rank_bits) {
  if (keys.size() < kRadixMin) {
    std::sort(keys.begin(), keys.end());
    return;
  }
  // Stable LSD passes over the rank bits; equal ranks keep input order.
  scratch.resize(keys.size());
  constexpr size_t kBuckets = size_t{1} << kRadixBits;
  std::vector<size_t> count(kBuckets);
  for (int shift = 0; shift < rank_bits; shift += kRadixBits) {
    std::fill(count.begin(), count.end(), 0);
    const int s = 32 + shift;
    for (uint64_t k : keys) ++count[(k >> s) & (kBuckets - 1)];
    size_t sum = 0;
    for (auto& c : count) {
      const size_t t = c;
      c = sum;
      sum += t;
    }
    for (uint64_t k : keys) scratch[count[(k >> s) & (kBuckets - 1)]++] = k;
    keys.swap(scratch);
  }
}

class TreeBuilder {
 public:
  TreeBuilder(const RankedColumns& cols, const Labels& y,
              const std::vector<double>& weights, int n_classes,
              const ForestParams& params, uint64_t seed)
      : cols_(cols),
        y_(y),
        w_(weights),
        n_classes_(n_classes),
        params_(params),
        mtry_(params.features_per_split.Resolve(static_cast<int>(cols.rank.size()))),
        rng_(seed) {
    features_.resize(cols.rank.size());
    std::iota(features_.begin(), features_.end(), 0);
  }

  Tree Build() {
    const size_t n = y_.size();
    samples_.resize(n);
    if (params_.bootstrap) {
      for (auto& s : samples_) s = static_cast<uint32_t>(rng_.Below(n));
      // Sorted so the tree does not depend on draw order beyond the multiset.
      std::sort(samples_.begin(), samples_.end());
    } else {
      std::iota(samples_.begin(), samples_.end(), 0u);
    }
    keys_.reserve(n);
    tree_.nodes.clear();
    BuildNode(0, n, 0);
    return std::move(tree_);
  }

 private:
  std::vector<double> ClassSums(size_t begin, size_t end) const {
    std::vector<double> sums(n_classes_, 0.0);
    for (size_t i = begin; i < end; ++i) sums[y_[samples_[i]]] += w_[samples_[i]];
    return sums;
  }

  int BuildNode(size_t begin, size_t end, int depth) {
    const int id = static_cast<int>(tree_.nodes.size());
    tree_.nodes.emplace_back();
    auto sums = ClassSums(begin, end);
    const size_t count = end - begin;
    const double total = std::accumulate(sums.begin(), sums.end(), 0.0);
    const int nonzero = static_cast<int>(
        std::count_if(sums.begin(), sums.end(), [](double v) { return v > 0; }));

    const auto min_leaf = static_cast<size_t>(params_.min_samples_leaf);
    const bool stop = nonzero <= 1 || count < 2 * min_leaf ||
                      (params_.max_depth && depth >= *params_.max_depth) ||
                      total <= 0.0;
    int best_feature = -1;
    uint32_t best_rank = 0;
    double best_threshold = 0.0;
    if (!stop) {
      FindSplit(begin, end, sums, total, &best_feature, &best_rank, &best_threshold);
    }

    if (best_feature < 0) {
      tree_.nodes[id].distribution = std::move(sums);
      return id;
    }

    const auto& rank = cols_.rank[best_feature];
    auto mid_it = std::stable_partition(
        samples_.begin() + static_cast<std::ptrdiff_t>(begin),
        samples_.begin() + static_cast<std::ptrdiff_t>(end),
        [&](uint32_t s) { return rank[s] <= best_rank; });
    const size_t mid = static_cast<size_t>(mid_it - samples_.begin());
    CheckInvariant(mid > begin && mid < end, "degenerate split partition");

    tree_.nodes[id].feature = best_feature;
    tree_.nodes[id].threshold = best_threshold;
    const int left = BuildNode(begin, mid, depth + 1);
    const int right = BuildNode(mid, end, depth + 1);
    tree_.nodes[id].left = left;
    tree_.nodes[id].right = right;
    return id;
  }

  void FindSplit(size_t begin, size_t end, const std::vector<double>& sums,
                 double total, int* best_feature, uint32_t* best_rank,
                 double* best_threshold) {
    double parent_score = 0.0;
    for (double s : sums) parent_score += s * s;
    parent_score /= total;

    // Partial Fisher-Yates: the first mtry entries are the candidates.
    const int d = static_cast<int>(features_.size());
    for (int i = 0; i < mtry_; ++i) {
      const int j = i + static_cast<int>(rng_.Below(static_cast<uint64_t>(d - i)));
      std::swap(features_[i], features_[j]);
    }

    const auto min_leaf = static_cast<size_t>(params_.min_samples_leaf);
    const size_t count = end - begin;
    double best_gain = kRelativeGainEpsilon * total;
    std::vector<double> left(n_classes_);
    for (int fi = 0; fi < mtry_; ++fi) {
      const int f = features_[fi];
      const auto& rank = cols_.rank[f];
      keys_.clear();
      for (size_t i = begin; i < end; ++i) {
        const uint32_t s = samples_[i];
        keys_.push_back((static_cast<uint64_t>(rank[s]) << 32) | s);
      }
      SortKeys(keys_, scratch_, cols_.rank_bits[f]);
      if ((keys_.front() >> 32) == (keys_.back() >> 32)) continue;

      std::fill(left.begin(), left.end(), 0.0);
      double left_total = 0.0;
      double left_sq = 0.0;  // sum_c left_c^2
      double right_sq = parent_score * total;  // sum_c right_c^2
      for (size_t i = 0; i + 1 < count; ++i) {
        const auto s = static_cast<uint32_t>(keys_[i]);
        const int cls = y_[s];
        const double w = w_[s];
        const double l_old = left[cls];
        const double r_old = sums[cls] - l_old;
        left[cls] = l_old + w;
        left_sq += w * (2.0 * l_old + w);
        right_sq += w * (w - 2.0 * r_old);
        left_total += w;

        const size_t n_left = i + 1;
        if (n_left < min_leaf) continue;
        if (count - n_left < min_leaf) break;
        const auto r_here = static_cast<uint32_t>(keys_[i] >> 32);
        const auto r_next = static_cast<uint32_t>(keys_[i + 1] >> 32);
        if (r_here == r_next) continue;
        const double right_total = total - left_total;
        if (left_total <= 0.0 || right_total <= 0.0) continue;
        const double gain =
            left_sq / left_total + right_sq / right_total - parent_score;
        if (gain > best_gain) {
          best_gain = gain;
          *best_feature = f;
          *best_rank = r_here;
          const double lo = cols_.values[f][r_here];
          const double hi = cols_.values[f][r_next];
          double thr = 0.5 * (lo + hi);
          if (!(thr < hi)) thr = lo;
          *best_threshold = thr;
        }
      }
    }
  }

  const RankedColumns& cols_;
  const Labels& y_;
  const std::vector<double>& w_;
  const int n_classes_;
  const ForestParams& params_;
  const int mtry_;
  Rng rng_;
  std::vector<int> features_;
  std::vector<uint32_t> samples_;
  std::vector<uint64_t> keys_;
  std::vector<uint64_t> scratch_;
  Tree tree_;
};

}  // namespace

int FeatureSubset::Resolve(int n_features) const {
  switch (kind) {
    case Kind::kSqrt:
      return std::max(1, static_cast<int>(std::sqrt(static_cast<double>(n_features))));
    case Kind::kAll:
      return n_features;
    case Kind::kFixed:
      return std::clamp(fixed, 1, std::max(1, n_features));
  }
  return n_features;
}

std::string FeatureSubset::ToString() const {
  switch (kind) {
    case Kind::kSqrt:
      return "sqrt";
    case Kind::kAll:
      return "all";
    case Kind::kFixed:
      return std::to_string(fixed);
  }
  return "?";
}

FeatureSubset FeatureSubset::Parse(const std::string& s) {
  if (s == "sqrt") return {Kind::kSqrt, 0};
  if (s == "all") return {Kind::kAll, 0};
  try {
    size_t pos = 0;
    const int k = std::stoi(s, &pos);
    if (pos == s.size() && k >= 1) return {Kind::kFixed, k};
  } catch (const std::exception&) {
  }
  throw DataError("features per split must be sqrt, all or a positive integer: " + s);
}

void ForestParams::Validate() const {
  if (n_trees < 1) throw DataError("n_trees must be >= 1");
  if (min_samples_leaf < 1) throw DataError("min_samples_leaf must be >= 1");
  if (max_depth && *max_depth < 0) throw DataError("max_depth must be >= 0");
}

const TreeNode& Tree::Leaf(const double* x) const {
  const TreeNode* node = &nodes[0];
  while (!node->is_leaf()) {
    node = &nodes[x[node->feature] <= node->threshold ? node->left : node->right];
  }
  return *node;
}

int Tree::Depth() const {
  std::vector<int> depth(nodes.size(), 0);
  int best = 0;
  for (size_t i = 0; i < nodes.size(); ++i) {
    best = std::max(best, depth[i]);
    if (!nodes[i].is_leaf()) {
      depth[nodes[i].left] = depth[i] + 1;
      depth[nodes[i].right] = depth[i] + 1;
    }
  }
  return best;
}

double GiniImpurity(const std::vector<double>& class_sums) {
  const double total = std::accumulate(class_sums.begin(), class_sums.end(), 0.0);
  if (total <= 0.0) return 0.0;
  double sq = 0.0;
  for (double s : class_sums) sq += (s / total) * (s / total);
  return 1.0 - sq;
}

std::vector<double> ClassWeightsBalanced(const Labels& y, int n_classes) {
  if (y.empty()) throw DataError("class weights of an empty label vector");
  std::vector<size_t> counts(n_classes, 0);
  for (int v : y) {
    if (v < 0 || v >= n_classes) throw DataError("label out of range");
    ++counts[v];
  }
  std::vector<double> w(n_classes, 0.0);
  for (int c = 0; c < n_classes; ++c) {
    if (counts[c]) {
      w[c] = static_cast<double>(y.size()) /
             (static_cast<double>(n_classes) * static_cast<double>(counts[c]));
    }
  }
  return w;
}

ForestModel FitForestWeighted(const Matrix& x, const Labels& y, int n_classes,
                              const std::vector<double>& sample_weights,
                              const ForestParams& params,
                              std::vector<double> class_weights) {
  params.Validate();
  if (static_cast<size_t>(x.rows()) != y.size() || sample_weights.size() != y.size()) {
    throw DataError("forest input row counts disagree");
  }
  if (y.size() < 2) throw DataError("forest needs at least 2 rows");
  if (x.cols() < 1) throw DataError("forest needs at least 1 feature");
  if (!x.allFinite()) throw DataError("forest input contains non-finite values");
  for (int v : y) {
    if (v < 0 || v >= n_classes) throw DataError("label out of range");
  }
  for (double w : sample_weights) {
    if (!(w > 0.0) || !std::isfinite(w)) {
      throw DataError("sample weights must be positive and finite");
    }
  }

  if (x.rows() > static_cast<Eigen::Index>(UINT32_MAX)) {
    throw DataError("too many rows for the forest");
  }
  const RankedColumns cols(x);
  ForestModel model;
  model.n_classes = n_classes;
  model.n_features = static_cast<int>(x.cols());
  model.class_weights = std::move(class_weights);
  model.params = params;
  model.trees.resize(static_cast<size_t>(params.n_trees));
  ParallelFor(model.trees.size(), params.threads, [&](size_t t) {
    TreeBuilder builder(cols, y, sample_weights, n_classes, params,
                        DeriveSeed(params.seed, t));
    model.trees[t] = builder.Build();
  });
  return model;
}

ForestModel FitForest(const Matrix& x, const Labels& y, int n_classes,
                      const ForestParams& params) {
  auto cw = ClassWeightsBalanced(y, n_classes);
  std::vector<double> sw(y.size());
  for (size_t i = 0; i < y.size(); ++i) sw[i] = cw[y[i]];
  return FitForestWeighted(x, y, n_classes, sw, params, std::move(cw));
}

Matrix PredictProba(const ForestModel& model, const Matrix& x) {
  if (x.cols() != model.n_features) {
    throw DataError("feature count mismatch: model expects " +
                    std::to_string(model.n_features) + ", got " +
                    std::to_string(x.cols()));
  }
  Matrix out = Matrix::Zero(x.rows(), model.n_classes);
  constexpr size_t kChunk = 64;
  const size_t n = static_cast<size_t>(x.rows());
  const size_t chunks = (n + kChunk - 1) / kChunk;
  ParallelFor(chunks, model.params.threads, [&](size_t chunk) {
    const size_t end = std::min(n, (chunk + 1) * kChunk);
    for (size_t r = chunk * kChunk; r < end; ++r) {
      const auto ri = static_cast<Eigen::Index>(r);
      const double* row = x.data() + ri * x.cols();
      for (const auto& tree : model.trees) {
        const auto& dist = tree.Leaf(row).distribution;
        const double total = std::accumulate(dist.begin(), dist.end(), 0.0);
        for (int c = 0; c < model.n_classes; ++c) out(ri, c) += dist[c] / total;
      }
      out.row(ri) /= static_cast<double>(model.trees.size());
    }
  });
  return out;
}

Labels ArgmaxRows(const Matrix& proba) {
  Labels out(static_cast<size_t>(proba.rows()));
  for (Eigen::Index r = 0; r < proba.rows(); ++r) {
    int best = 0;
    for (Eigen::Index c = 1; c < proba.cols(); ++c) {
      if (proba(r, c) > proba(r, best)) best = static_cast<int>(c);
    }
    out[static_cast<size_t>(r)] = best;
  }
  return out;
}

Labels Predict(const ForestModel& model, const Matrix& x) {
  return ArgmaxRows(PredictProba(model, x));
}

}  // namespace stagefuse
