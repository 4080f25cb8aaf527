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

#ifndef STAGEFUSE_FOREST_H_
#define STAGEFUSE_FOREST_H_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "stagefuse/common.h"

namespace stagefuse {

// Number of candidate features drawn (without replacement) at every node.
struct FeatureSubset {
  enum class Kind { kSqrt, kAll, kFixed };
  Kind kind = Kind::kSqrt;
  int fixed = 0;

  int Resolve(int n_features) const;
  std::string ToString() const;
  // Accepts "sqrt", "all" or a positive integer.
  static FeatureSubset Parse(const std::string& s);
  bool operator==(const FeatureSubset&) const = default;
};

struct ForestParams {
  int n_trees = 200;
  std::optional<int> max_depth;
  int min_samples_leaf = 2;
  FeatureSubset features_per_split;
  bool bootstrap = true;
  uint64_t seed = 0;
  // Worker cap. Not part of the model: results are identical for any value.
  int threads = 1;

  void Validate() const;
  bool SameModelParams(const ForestParams& o) const {
    return n_trees == o.n_trees && max_depth == o.max_depth &&
           min_samples_leaf == o.min_samples_leaf &&
           features_per_split == o.features_per_split &&
           bootstrap == o.bootstrap && seed == o.seed;
  }
};

// Split nodes send x[feature] <= threshold to `left`. Leaves carry the
// weighted class counts of the training samples that reached them.
struct TreeNode {
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  std::vector<double> distribution;

  bool is_leaf() const { return feature < 0; }
  bool operator==(const TreeNode&) const = default;
};

// Nodes are stored in preorder; the root is node 0.
struct Tree {
  std::vector<TreeNode> nodes;

  const TreeNode& Leaf(const double* x) const;
  int Depth() const;
  bool operator==(const Tree&) const = default;
};

struct ForestModel {
  std::vector<Tree> trees;
  int n_classes = 0;
  int n_features = 0;
  std::vector<double> class_weights;
  ForestParams params;
};

// w_c = n / (n_classes * count_c) for present classes, 0 for absent ones.
std::vector<double> ClassWeightsBalanced(const Labels& y, int n_classes);

// Trains with balanced class weights as per-sample weights.
ForestModel FitForest(const Matrix& x, const Labels& y, int n_classes,
                      const ForestParams& params);

// Trains with explicit per-sample weights; `class_weights` is only recorded.
ForestModel FitForestWeighted(const Matrix& x, const Labels& y, int n_classes,
                              const std::vector<double>& sample_weights,
                              const ForestParams& params,
                              std::vector<double> class_weights = {});

// Mean over trees of each leaf's normalised class distribution.
Matrix PredictProba(const ForestModel& model, const Matrix& x);

// Argmax of each row, ties to the lowest class index.
Labels ArgmaxRows(const Matrix& proba);

Labels Predict(const ForestModel& model, const Matrix& x);

// Weighted Gini impurity 1 - sum_c p_c^2 of a class-weight vector.
double GiniImpurity(const std::vector<double>& class_sums);

}  // namespace stagefuse

#endif  // STAGEFUSE_FOREST_H_
