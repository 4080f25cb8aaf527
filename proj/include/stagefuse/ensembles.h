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

#ifndef STAGEFUSE_ENSEMBLES_H_
#define STAGEFUSE_ENSEMBLES_H_

#include <functional>
#include <string>
#include <vector>

#include "stagefuse/embed.h"
#include "stagefuse/forest.h"
#include "stagefuse/impute.h"
#include "stagefuse/pca.h"
#include "stagefuse/resample.h"

namespace stagefuse {

struct EnsembleConfig {
  ForestParams forest;
  SmoteConfig smote;
  bool use_smote = true;
  int n_classes = kNumStages;
  // Internal folds for out-of-fold meta-features (stacking).
  int meta_folds = 5;
  uint64_t seed = 0;
};

struct AveragingModel {
  ForestModel numeric;
  ForestModel text;
};

// Two forests, one per modality. Each modality's training matrix is
// oversampled independently when SMOTE is on.
AveragingModel AveragingFit(const Matrix& xn, const Matrix& xt, const Labels& y,
                            const EnsembleConfig& cfg);

// Mean of the two probability vectors.
Matrix AveragingPredictProba(const AveragingModel& m, const Matrix& xn,
                             const Matrix& xt);
Labels AveragingPredict(const AveragingModel& m, const Matrix& xn,
                        const Matrix& xt);

struct StackedModel {
  ForestModel base_numeric;
  ForestModel base_text;
  ForestModel meta;
  // Names of the 2C meta-feature columns: numeric_p0.., text_p0..
  std::vector<std::string> meta_feature_layout;
};

// Observes each internal fold: rows the bases were trained on and rows whose
// meta-features they produced.
using StackingFoldObserver =
    std::function<void(const std::vector<size_t>& train_rows,
                       const std::vector<size_t>& predicted_rows)>;

// Out-of-fold base probabilities (stratified meta_folds) form the meta
// training matrix; the final bases are retrained on all rows.
StackedModel StackingFit(const Matrix& xn, const Matrix& xt, const Labels& y,
                         const EnsembleConfig& cfg,
                         const StackingFoldObserver& observer = {},
                         Matrix* meta_features_out = nullptr);

// [numeric proba | text proba], rows x 2C.
Matrix StackingMetaFeatures(const StackedModel& m, const Matrix& xn,
                            const Matrix& xt);
Matrix StackingPredictProba(const StackedModel& m, const Matrix& xn,
                            const Matrix& xt);
Labels StackingPredict(const StackedModel& m, const Matrix& xn, const Matrix& xt);

// Turns raw rows into the two modality matrices the ensembles consume:
// imputed numerics, and PCA-reduced text embeddings.
struct ModalityInputs {
  ImputationPlan imputation;
  PcaModel pca;
  std::vector<std::string> numeric_columns;
};

struct ModalityMatrices {
  Matrix numeric;
  Matrix text;
};

// Fits imputation and PCA on `train` (class-conditional medians) and returns
// the transformed training matrices in `out`.
ModalityInputs FitModalityInputs(const Dataset& train,
                                 const EmbeddingMatrix& embeddings,
                                 double pca_threshold,
                                 const std::string& placeholder,
                                 ModalityMatrices* out);

// Global-median imputation and the fitted projection.
ModalityMatrices ApplyModalityInputs(const ModalityInputs& in, const Dataset& ds,
                                     const EmbeddingMatrix& embeddings);

}  // namespace stagefuse

#endif  // STAGEFUSE_ENSEMBLES_H_
