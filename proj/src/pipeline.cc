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

#include "stagefuse/pipeline.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "stagefuse/random.h"

namespace stagefuse {

namespace {

// Substream ids for seeds derived from PipelineConfig::seed.
constexpr uint64_t kSplitStream = 1;
constexpr uint64_t kFoldStream = 2;

void Notify(const FitObserver& observer, int fold, const std::string& stage,
            const std::vector<size_t>& rows) {
  if (observer) observer(fold, stage, rows);
}

// Stage-wise imputation of the whole labeled dataset (kPreSplit only).
Dataset PreImpute(const Dataset& ds, const PipelineConfig& cfg,
                  const FitObserver& observer) {
  if (cfg.impute_mode != ImputeMode::kPreSplit) return ds;
  const auto plan = FitImputation(ds, cfg.text_placeholder);
  Notify(observer, -1, "imputation", ds.row_ids);
  return ApplyImputation(plan, ds, MedianSource::kClassConditional);
}

std::optional<PcaModel> MaybeGlobalPca(const Dataset& ds,
                                       const EmbeddingMatrix* embeddings,
                                       const PipelineConfig& cfg,
                                       const FitObserver& observer) {
  if (!cfg.UsesText() || cfg.pca_scope != PcaScope::kGlobal) return std::nullopt;
  Notify(observer, -1, "pca", ds.row_ids);
  return FitPca(embeddings->data, cfg.pca_threshold);
}

void CheckEmbeddings(const Dataset& ds, const EmbeddingMatrix* embeddings,
                     const PipelineConfig& cfg) {
  if (!cfg.UsesText()) return;
  if (embeddings == nullptr) {
    throw DataError("modality " + ModalityName(cfg.modality) +
                    " needs text embeddings");
  }
  if (embeddings->rows() != ds.rows()) {
    throw DataError("embeddings row count mismatch: " +
                    std::to_string(embeddings->rows()) + " vs " +
                    std::to_string(ds.rows()));
  }
}

// Unscaled fused features of already-imputed rows.
Matrix FusedInputs(const Dataset& imputed, const EmbeddingMatrix* embeddings,
                   const PipelineConfig& cfg, const PcaModel* pca) {
  const Matrix numeric = cfg.UsesNumeric() ? imputed.numeric
                                           : Matrix(imputed.numeric.rows(), 0);
  const Matrix reduced = cfg.UsesText() ? PcaTransform(*pca, embeddings->data)
                                        : Matrix(imputed.numeric.rows(), 0);
  return FuseFeatures(numeric, reduced);
}

}  // namespace

ScalerModel FitScaler(const Matrix& x) {
  if (x.rows() < 2) throw DataError("scaler needs at least 2 rows");
  ScalerModel s;
  s.means = x.colwise().mean().transpose();
  s.stds.resize(x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    const double var =
        (x.col(j).array() - s.means(j)).square().sum() / static_cast<double>(x.rows());
    const double sd = std::sqrt(var);
    if (sd > 0.0) {
      s.stds(j) = sd;
    } else {
      // Identity transform for constant columns.
      s.means(j) = 0.0;
      s.stds(j) = 1.0;
    }
  }
  return s;
}

Matrix ApplyScaler(const ScalerModel& s, const Matrix& x) {
  if (x.cols() != s.means.size()) {
    throw DataError("scaler dimension mismatch: fitted on " +
                    std::to_string(s.means.size()) + " columns, got " +
                    std::to_string(x.cols()));
  }
  return (x.rowwise() - s.means.transpose()).array().rowwise() /
         s.stds.transpose().array();
}

std::string ModalityName(Modality m) {
  switch (m) {
    case Modality::kNumericOnly:
      return "numeric";
    case Modality::kTextOnly:
      return "text";
    case Modality::kCombined:
      return "combined";
  }
  return "?";
}

Modality ParseModality(const std::string& s) {
  if (s == "numeric") return Modality::kNumericOnly;
  if (s == "text") return Modality::kTextOnly;
  if (s == "combined") return Modality::kCombined;
  throw DataError("unknown modality: " + s);
}

std::string ImputeModeName(ImputeMode m) {
  return m == ImputeMode::kPreSplit ? "pre-split" : "leak-free";
}

ImputeMode ParseImputeMode(const std::string& s) {
  if (s == "pre-split") return ImputeMode::kPreSplit;
  if (s == "leak-free") return ImputeMode::kLeakFree;
  throw DataError("unknown impute mode: " + s);
}

std::string PcaScopeName(PcaScope s) {
  return s == PcaScope::kFold ? "fold" : "global";
}

PcaScope ParsePcaScope(const std::string& s) {
  if (s == "fold") return PcaScope::kFold;
  if (s == "global") return PcaScope::kGlobal;
  throw DataError("unknown PCA scope: " + s);
}

void PipelineConfig::Validate() const {
  if (folds < 2) throw DataError("folds must be >= 2");
  if (!(pca_threshold > 0.0 && pca_threshold <= 1.0)) {
    throw DataError("PCA threshold must lie in (0, 1]");
  }
  if (smote.k_neighbors < 1) throw DataError("SMOTE k must be >= 1");
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw DataError("test fraction must lie in (0, 1)");
  }
  forest.Validate();
}

std::vector<std::string> TransformChain(const PipelineConfig& cfg) {
  std::vector<std::string> chain{"impute"};
  if (cfg.UsesText()) chain.push_back("pca");
  chain.push_back("fuse");
  chain.push_back("scale");
  return chain;
}

Matrix FuseFeatures(const Matrix& numeric, const Matrix& embedded_reduced) {
  if (numeric.rows() != embedded_reduced.rows()) {
    throw DataError("cannot fuse blocks with different row counts");
  }
  Matrix out(numeric.rows(), numeric.cols() + embedded_reduced.cols());
  out.leftCols(numeric.cols()) = numeric;
  out.rightCols(embedded_reduced.cols()) = embedded_reduced;
  return out;
}

std::vector<std::string> FusedFeatureNames(
    const std::vector<std::string>& numeric_names, int n_text_components) {
  std::vector<std::string> names = numeric_names;
  for (int i = 0; i < n_text_components; ++i) {
    names.push_back("textual_feature_" + std::to_string(i));
  }
  return names;
}

std::vector<Fold> StratifiedKFold(const Labels& y, int k, uint64_t seed) {
  if (k < 2) throw DataError("k must be >= 2");
  if (static_cast<size_t>(k) > y.size()) {
    throw DataError("more folds than rows");
  }
  const int n_classes = *std::max_element(y.begin(), y.end()) + 1;
  std::vector<std::vector<size_t>> members(n_classes);
  for (size_t i = 0; i < y.size(); ++i) members[y[i]].push_back(i);

  std::vector<int> fold_of(y.size(), 0);
  size_t deal = 0;
  for (int c = 0; c < n_classes; ++c) {
    Rng rng(DeriveSeed(seed, static_cast<uint64_t>(c)));
    auto idx = members[c];
    rng.Shuffle(idx);
    for (size_t i : idx) fold_of[i] = static_cast<int>(deal++ % k);
  }
  std::vector<Fold> folds(k);
  for (size_t i = 0; i < y.size(); ++i) {
    for (int f = 0; f < k; ++f) {
      (fold_of[i] == f ? folds[f].validation : folds[f].train).push_back(i);
    }
  }
  return folds;
}

EmbeddingMatrix EmbedForPipeline(const Dataset& ds, const EmbeddingSpec& spec,
                                 const std::string& placeholder) {
  if (spec.source != EmbeddingSource::kHashing) {
    throw DataError("precomputed embeddings must be supplied from file");
  }
  return EmbedDatasetHashing(FillTextPlaceholder(ds, placeholder), spec.dim,
                             spec.hash_seed);
}

FittedPipeline TrainFinal(const Dataset& train, const EmbeddingMatrix* embeddings,
                          const PipelineConfig& cfg, const PcaModel* global_pca,
                          const FitObserver& observer, int fold) {
  cfg.Validate();
  train.Validate();
  CheckEmbeddings(train, embeddings, cfg);

  FittedPipeline p;
  p.config = cfg;
  p.numeric_columns = train.schema.NumericNames();
  p.transform_chain = TransformChain(cfg);

  p.imputation = FitImputation(train, cfg.text_placeholder);
  Notify(observer, fold, "imputation", train.row_ids);
  const Dataset imputed =
      ApplyImputation(p.imputation, train, MedianSource::kClassConditional);

  if (cfg.UsesText()) {
    if (global_pca) {
      p.pca = *global_pca;
    } else {
      p.pca = FitPca(embeddings->data, cfg.pca_threshold);
      Notify(observer, fold, "pca", train.row_ids);
    }
  }
  Matrix x = FusedInputs(imputed, embeddings, cfg, p.pca ? &*p.pca : nullptr);
  p.feature_names = FusedFeatureNames(
      cfg.UsesNumeric() ? p.numeric_columns : std::vector<std::string>{},
      p.pca ? p.pca->n_components() : 0);
  Labels y = imputed.labels;

  if (cfg.use_smote) {
    auto res = Smote(x, y, cfg.smote, cfg.forest.threads);
    Notify(observer, fold, "smote", train.row_ids);
    x = std::move(res.x);
    y = std::move(res.y);
  }
  p.scaler = FitScaler(x);
  Notify(observer, fold, "scaler", train.row_ids);
  x = ApplyScaler(p.scaler, x);
  p.forest = FitForest(x, y, kNumStages, cfg.forest);
  Notify(observer, fold, "forest", train.row_ids);
  return p;
}

Matrix TransformFeatures(const FittedPipeline& p, const Dataset& ds,
                         const EmbeddingMatrix* embeddings) {
  CheckInvariant(p.transform_chain == TransformChain(p.config),
                 "pipeline transform chain does not match its configuration");
  if (ds.schema.NumericNames() != p.numeric_columns) {
    throw DataError("numeric columns differ from the fitted pipeline's manifest");
  }
  CheckEmbeddings(ds, embeddings, p.config);
  if (p.config.UsesText() && embeddings->dim() != p.pca->dim()) {
    throw DataError("embedding dim " + std::to_string(embeddings->dim()) +
                    " differs from fitted dim " + std::to_string(p.pca->dim()));
  }
  const Dataset imputed =
      ApplyImputation(p.imputation, ds, MedianSource::kGlobalOnly);
  Matrix x = FusedInputs(imputed, embeddings, p.config, p.pca ? &*p.pca : nullptr);
  CheckInvariant(static_cast<size_t>(x.cols()) == p.feature_names.size(),
                 "fused width differs from the feature manifest");
  return ApplyScaler(p.scaler, x);
}

Matrix PipelinePredictProba(const FittedPipeline& p, const Dataset& ds,
                            const EmbeddingMatrix* embeddings) {
  return PredictProba(p.forest, TransformFeatures(p, ds, embeddings));
}

Labels PipelinePredict(const FittedPipeline& p, const Dataset& ds,
                       const EmbeddingMatrix* embeddings) {
  return ArgmaxRows(PipelinePredictProba(p, ds, embeddings));
}

CvReport RunCv(const Dataset& ds, const EmbeddingMatrix* embeddings,
               const PipelineConfig& cfg, const FitObserver& observer) {
  cfg.Validate();
  CheckEmbeddings(ds, embeddings, cfg);
  const Dataset work = PreImpute(ds, cfg, observer);
  const auto global_pca = MaybeGlobalPca(work, embeddings, cfg, observer);
  const auto folds = StratifiedKFold(work.labels, cfg.folds,
                                     DeriveSeed(cfg.seed, kFoldStream));
  CvReport report;
  report.config = cfg;
  report.mean_per_class.assign(kNumStages, AveragedMetrics{});
  for (size_t f = 0; f < folds.size(); ++f) {
    PipelineConfig fold_cfg = cfg;
    fold_cfg.smote.seed = DeriveSeed(cfg.smote.seed, f + 1);
    fold_cfg.forest.seed = DeriveSeed(cfg.forest.seed, f + 1);
    const Dataset train = work.Subset(folds[f].train);
    const Dataset val = work.Subset(folds[f].validation);
    std::optional<EmbeddingMatrix> train_emb, val_emb;
    if (cfg.UsesText()) {
      train_emb = embeddings->Subset(folds[f].train);
      val_emb = embeddings->Subset(folds[f].validation);
    }
    const auto p = TrainFinal(train, train_emb ? &*train_emb : nullptr, fold_cfg,
                              global_pca ? &*global_pca : nullptr, observer,
                              static_cast<int>(f));
    const Matrix proba =
        PipelinePredictProba(p, val, val_emb ? &*val_emb : nullptr);
    FoldResult fr;
    fr.report = Evaluate(val.labels, ArgmaxRows(proba), proba);
    fr.train_rows = train.row_ids;
    fr.validation_rows = val.row_ids;
    report.folds.push_back(std::move(fr));
  }
  const double k = static_cast<double>(report.folds.size());
  for (const auto& fr : report.folds) {
    report.mean_accuracy += fr.report.accuracy / k;
    report.mean_macro.precision += fr.report.prf.macro.precision / k;
    report.mean_macro.recall += fr.report.prf.macro.recall / k;
    report.mean_macro.f1 += fr.report.prf.macro.f1 / k;
    for (int c = 0; c < kNumStages; ++c) {
      const auto& m = fr.report.prf.per_class[c];
      report.mean_per_class[c].precision += m.precision / k;
      report.mean_per_class[c].recall += m.recall / k;
      report.mean_per_class[c].f1 += m.f1 / k;
    }
  }
  return report;
}

TrainTestResult TrainAndTest(const Dataset& ds, const EmbeddingMatrix* embeddings,
                             const PipelineConfig& cfg,
                             const FitObserver& observer) {
  cfg.Validate();
  CheckEmbeddings(ds, embeddings, cfg);
  const Dataset work = PreImpute(ds, cfg, observer);
  const auto global_pca = MaybeGlobalPca(work, embeddings, cfg, observer);
  const auto split = StratifiedSplitIndices(work.labels, cfg.test_fraction,
                                            DeriveSeed(cfg.seed, kSplitStream));
  const Dataset train = work.Subset(split.train);
  const Dataset test = work.Subset(split.test);
  std::optional<EmbeddingMatrix> train_emb, test_emb;
  if (cfg.UsesText()) {
    train_emb = embeddings->Subset(split.train);
    test_emb = embeddings->Subset(split.test);
  }
  TrainTestResult r;
  r.pipeline = TrainFinal(train, train_emb ? &*train_emb : nullptr, cfg,
                          global_pca ? &*global_pca : nullptr, observer);
  r.test_proba =
      PipelinePredictProba(r.pipeline, test, test_emb ? &*test_emb : nullptr);
  r.test_labels = test.labels;
  r.test_rows = test.row_ids;
  r.test_report = Evaluate(test.labels, ArgmaxRows(r.test_proba), r.test_proba);
  return r;
}

AblationTable AblationRun(const Dataset& ds, const EmbeddingMatrix* embeddings,
                          const PipelineConfig& base_cfg) {
  AblationTable table;
  table.smote = false;
  for (Modality m : {Modality::kNumericOnly, Modality::kTextOnly,
                     Modality::kCombined}) {
    PipelineConfig cfg = base_cfg;
    cfg.modality = m;
    cfg.use_smote = false;
    const auto r = TrainAndTest(ds, embeddings, cfg);
    AblationRow row;
    row.modality = m;
    for (const auto& pc : r.test_report.prf.per_class) row.recall.push_back(pc.recall);
    row.report = r.test_report;
    row.test_rows = r.test_rows;
    table.rows.push_back(std::move(row));
  }
  return table;
}

std::string CvReportCsv(const CvReport& report) {
  std::ostringstream out;
  const std::string prefix = ModalityName(report.config.modality) + "," +
                             (report.config.use_smote ? "1" : "0") + ",";
  out << "fold,modality,smote,row,precision,recall,f1,support\n";
  for (size_t f = 0; f < report.folds.size(); ++f) {
    const auto& r = report.folds[f].report;
    for (size_t c = 0; c < r.prf.per_class.size(); ++c) {
      const auto& m = r.prf.per_class[c];
      out << f << ',' << prefix << "class_" << c << ',' << FormatDouble(m.precision)
          << ',' << FormatDouble(m.recall) << ',' << FormatDouble(m.f1) << ','
          << m.support << '\n';
    }
    out << f << ',' << prefix << "macro_avg," << FormatDouble(r.prf.macro.precision)
        << ',' << FormatDouble(r.prf.macro.recall) << ','
        << FormatDouble(r.prf.macro.f1) << ',' << r.confusion.Total() << '\n';
    out << f << ',' << prefix << "accuracy,,," << FormatDouble(r.accuracy) << ','
        << r.confusion.Total() << '\n';
  }
  for (size_t c = 0; c < report.mean_per_class.size(); ++c) {
    const auto& m = report.mean_per_class[c];
    out << "mean," << prefix << "class_" << c << ',' << FormatDouble(m.precision)
        << ',' << FormatDouble(m.recall) << ',' << FormatDouble(m.f1) << ",\n";
  }
  out << "mean," << prefix << "macro_avg," << FormatDouble(report.mean_macro.precision)
      << ',' << FormatDouble(report.mean_macro.recall) << ','
      << FormatDouble(report.mean_macro.f1) << ",\n";
  out << "mean," << prefix << "accuracy,,," << FormatDouble(report.mean_accuracy)
      << ",\n";
  return out.str();
}

std::string AblationCsv(const AblationTable& table) {
  std::ostringstream out;
  out << "config,smote,class,recall,precision,f1,support\n";
  for (const auto& row : table.rows) {
    for (size_t c = 0; c < row.recall.size(); ++c) {
      const auto& m = row.report.prf.per_class[c];
      out << ModalityName(row.modality) << ',' << (table.smote ? 1 : 0) << ','
          << c << ',' << FormatDouble(m.recall) << ',' << FormatDouble(m.precision)
          << ',' << FormatDouble(m.f1) << ',' << m.support << '\n';
    }
  }
  return out.str();
}

}  // namespace stagefuse
