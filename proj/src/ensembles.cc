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

#include "stagefuse/ensembles.h"

#include "stagefuse/pipeline.h"
#include "stagefuse/random.h"

namespace stagefuse {

namespace {

enum Stream : uint64_t {
  kNumericBase = 1,
  kTextBase = 2,
  kMeta = 3,
  kMetaFolds = 4,
  kFoldBase = 16,
};

void CheckAligned(const Matrix& xn, const Matrix& xt, size_t n) {
  if (static_cast<size_t>(xn.rows()) != n || static_cast<size_t>(xt.rows()) != n) {
    throw DataError("ensemble inputs are not row-aligned");
  }
}

ForestModel FitBase(const Matrix& x, const Labels& y, const EnsembleConfig& cfg,
                    uint64_t stream) {
  ForestParams fp = cfg.forest;
  fp.seed = DeriveSeed(cfg.forest.seed, stream);
  if (!cfg.use_smote) return FitForest(x, y, cfg.n_classes, fp);
  SmoteConfig sc = cfg.smote;
  sc.seed = DeriveSeed(cfg.smote.seed, stream);
  const auto res = Smote(x, y, sc, cfg.forest.threads);
  return FitForest(res.x, res.y, cfg.n_classes, fp);
}

}  // namespace

AveragingModel AveragingFit(const Matrix& xn, const Matrix& xt, const Labels& y,
                            const EnsembleConfig& cfg) {
  CheckAligned(xn, xt, y.size());
  return {FitBase(xn, y, cfg, kNumericBase), FitBase(xt, y, cfg, kTextBase)};
}

Matrix AveragingPredictProba(const AveragingModel& m, const Matrix& xn,
                             const Matrix& xt) {
  CheckAligned(xn, xt, static_cast<size_t>(xn.rows()));
  return 0.5 * (PredictProba(m.numeric, xn) + PredictProba(m.text, xt));
}

Labels AveragingPredict(const AveragingModel& m, const Matrix& xn,
                        const Matrix& xt) {
  return ArgmaxRows(AveragingPredictProba(m, xn, xt));
}

StackedModel StackingFit(const Matrix& xn, const Matrix& xt, const Labels& y,
                         const EnsembleConfig& cfg,
                         const StackingFoldObserver& observer,
                         Matrix* meta_features_out) {
  CheckAligned(xn, xt, y.size());
  const int C = cfg.n_classes;
  const auto folds =
      StratifiedKFold(y, cfg.meta_folds, DeriveSeed(cfg.seed, kMetaFolds));
  Matrix meta(static_cast<Eigen::Index>(y.size()), 2 * C);
  for (size_t f = 0; f < folds.size(); ++f) {
    const auto& fold = folds[f];
    if (observer) observer(fold.train, fold.validation);
    const Labels ytr = SelectLabels(y, fold.train);
    const auto bn = FitBase(SelectRows(xn, fold.train), ytr, cfg,
                            kFoldBase + 2 * f);
    const auto bt = FitBase(SelectRows(xt, fold.train), ytr, cfg,
                            kFoldBase + 2 * f + 1);
    const Matrix pn = PredictProba(bn, SelectRows(xn, fold.validation));
    const Matrix pt = PredictProba(bt, SelectRows(xt, fold.validation));
    for (size_t i = 0; i < fold.validation.size(); ++i) {
      const auto r = static_cast<Eigen::Index>(fold.validation[i]);
      const auto ii = static_cast<Eigen::Index>(i);
      meta.row(r).head(C) = pn.row(ii);
      meta.row(r).tail(C) = pt.row(ii);
    }
  }
  StackedModel m;
  ForestParams meta_params = cfg.forest;
  meta_params.seed = DeriveSeed(cfg.forest.seed, kMeta);
  m.meta = FitForest(meta, y, C, meta_params);
  m.base_numeric = FitBase(xn, y, cfg, kNumericBase);
  m.base_text = FitBase(xt, y, cfg, kTextBase);
  for (int c = 0; c < C; ++c) m.meta_feature_layout.push_back("numeric_p" + std::to_string(c));
  for (int c = 0; c < C; ++c) m.meta_feature_layout.push_back("text_p" + std::to_string(c));
  if (meta_features_out) *meta_features_out = std::move(meta);
  return m;
}

Matrix StackingMetaFeatures(const StackedModel& m, const Matrix& xn,
                            const Matrix& xt) {
  CheckAligned(xn, xt, static_cast<size_t>(xn.rows()));
  return FuseFeatures(PredictProba(m.base_numeric, xn), PredictProba(m.base_text, xt));
}

Matrix StackingPredictProba(const StackedModel& m, const Matrix& xn,
                            const Matrix& xt) {
  return PredictProba(m.meta, StackingMetaFeatures(m, xn, xt));
}

Labels StackingPredict(const StackedModel& m, const Matrix& xn, const Matrix& xt) {
  return ArgmaxRows(StackingPredictProba(m, xn, xt));
}

ModalityInputs FitModalityInputs(const Dataset& train,
                                 const EmbeddingMatrix& embeddings,
                                 double pca_threshold,
                                 const std::string& placeholder,
                                 ModalityMatrices* out) {
  train.Validate();
  if (embeddings.rows() != train.rows()) {
    throw DataError("embeddings row count mismatch");
  }
  ModalityInputs in;
  in.numeric_columns = train.schema.NumericNames();
  in.imputation = FitImputation(train, placeholder);
  in.pca = FitPca(embeddings.data, pca_threshold);
  if (out) {
    out->numeric =
        ApplyImputation(in.imputation, train, MedianSource::kClassConditional).numeric;
    out->text = PcaTransform(in.pca, embeddings.data);
  }
  return in;
}

ModalityMatrices ApplyModalityInputs(const ModalityInputs& in, const Dataset& ds,
                                     const EmbeddingMatrix& embeddings) {
  if (ds.schema.NumericNames() != in.numeric_columns) {
    throw DataError("numeric columns differ from the fitted model's manifest");
  }
  if (embeddings.rows() != ds.rows()) {
    throw DataError("embeddings row count mismatch");
  }
  if (embeddings.dim() != in.pca.dim()) {
    throw DataError("embedding dim differs from the fitted dim");
  }
  return {ApplyImputation(in.imputation, ds, MedianSource::kGlobalOnly).numeric,
          PcaTransform(in.pca, embeddings.data)};
}

}  // namespace stagefuse
