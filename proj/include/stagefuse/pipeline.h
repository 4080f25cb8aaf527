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

#ifndef STAGEFUSE_PIPELINE_H_
#define STAGEFUSE_PIPELINE_H_

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "stagefuse/datamodel.h"
#include "stagefuse/embed.h"
#include "stagefuse/forest.h"
#include "stagefuse/impute.h"
#include "stagefuse/metrics.h"
#include "stagefuse/pca.h"
#include "stagefuse/resample.h"

namespace stagefuse {

// Per-column standardisation with population std. Constant columns are
// stored as mean 0, std 1 so they pass through unchanged.
struct ScalerModel {
  Vector means;
  Vector stds;
};

ScalerModel FitScaler(const Matrix& x);
Matrix ApplyScaler(const ScalerModel& s, const Matrix& x);

enum class Modality { kNumericOnly, kTextOnly, kCombined };
std::string ModalityName(Modality m);
Modality ParseModality(const std::string& s);

// kPreSplit imputes the full labeled dataset stage-wise before any split, which
// lets test labels steer test imputation.
// kLeakFree fits imputation inside each training portion only.
enum class ImputeMode { kPreSplit, kLeakFree };
std::string ImputeModeName(ImputeMode m);
ImputeMode ParseImputeMode(const std::string& s);

// kFold fits PCA on training rows only; kGlobal fits it on every embedding
// row before splitting.
enum class PcaScope { kFold, kGlobal };
std::string PcaScopeName(PcaScope s);
PcaScope ParsePcaScope(const std::string& s);

struct PipelineConfig {
  Modality modality = Modality::kCombined;
  double pca_threshold = 0.98;
  SmoteConfig smote;
  bool use_smote = true;
  ForestParams forest;
  int folds = 5;
  ImputeMode impute_mode = ImputeMode::kPreSplit;
  PcaScope pca_scope = PcaScope::kFold;
  double test_fraction = 0.2;
  std::string text_placeholder = kDefaultTextPlaceholder;
  // Drives the train/test split and fold assignment.
  uint64_t seed = 0;

  void Validate() const;
  bool UsesNumeric() const { return modality != Modality::kTextOnly; }
  bool UsesText() const { return modality != Modality::kNumericOnly; }
};

// Stages applied between raw rows and the forest, in order.
std::vector<std::string> TransformChain(const PipelineConfig& cfg);

// How the pipeline obtains text vectors at predict time.
struct EmbeddingSpec {
  EmbeddingSource source = EmbeddingSource::kHashing;
  int dim = 64;
  uint64_t hash_seed = 0;
};

struct FittedPipeline {
  PipelineConfig config;
  ImputationPlan imputation;
  std::optional<PcaModel> pca;
  ScalerModel scaler;
  ForestModel forest;
  std::optional<EmbeddingSpec> embedding;
  // Column-order manifest.
  std::vector<std::string> numeric_columns;
  std::vector<std::string> feature_names;
  std::vector<std::string> transform_chain;
};

// Numeric columns first, then the reduced embedding columns.
Matrix FuseFeatures(const Matrix& numeric, const Matrix& embedded_reduced);

std::vector<std::string> FusedFeatureNames(
    const std::vector<std::string>& numeric_names, int n_text_components);

struct Fold {
  std::vector<size_t> train;
  std::vector<size_t> validation;
};

// Each class's shuffled members are dealt round-robin over the folds; the
// dealing position carries over from one class to the next so fold sizes
// stay balanced.
std::vector<Fold> StratifiedKFold(const Labels& y, int k, uint64_t seed);

// Receives every fit call: `fold` is -1 outside cross-validation, `row_ids`
// are the original dataset rows whose values reached the fit (for stages after
// SMOTE these are the rows SMOTE interpolated between).
using FitObserver = std::function<void(int fold, const std::string& stage,
                                       const std::vector<size_t>& row_ids)>;

// Fits the chain impute -> PCA -> fuse -> SMOTE -> scale -> forest on `train`.
// `embeddings` is row-aligned with `train` and may be null for NumericOnly.
// When `global_pca` is set it replaces the fold-local PCA fit.
FittedPipeline TrainFinal(const Dataset& train, const EmbeddingMatrix* embeddings,
                          const PipelineConfig& cfg,
                          const PcaModel* global_pca = nullptr,
                          const FitObserver& observer = {}, int fold = -1);

// Applies the recorded chain (global medians for missing numerics) and
// returns the scaled forest inputs.
Matrix TransformFeatures(const FittedPipeline& p, const Dataset& ds,
                         const EmbeddingMatrix* embeddings);
Matrix PipelinePredictProba(const FittedPipeline& p, const Dataset& ds,
                            const EmbeddingMatrix* embeddings);
Labels PipelinePredict(const FittedPipeline& p, const Dataset& ds,
                       const EmbeddingMatrix* embeddings);

// Text placeholder fill followed by hashing.
EmbeddingMatrix EmbedForPipeline(const Dataset& ds, const EmbeddingSpec& spec,
                                 const std::string& placeholder);

struct FoldResult {
  EvalReport report;
  std::vector<size_t> train_rows;       // original row ids
  std::vector<size_t> validation_rows;  // original row ids
};

struct CvReport {
  std::vector<FoldResult> folds;
  double mean_accuracy = 0.0;
  AveragedMetrics mean_macro;
  std::vector<AveragedMetrics> mean_per_class;
  PipelineConfig config;
};

CvReport RunCv(const Dataset& ds, const EmbeddingMatrix* embeddings,
               const PipelineConfig& cfg, const FitObserver& observer = {});

struct TrainTestResult {
  FittedPipeline pipeline;
  EvalReport test_report;
  std::vector<size_t> test_rows;  // original row ids
  Labels test_labels;
  Matrix test_proba;
};

// 80/20 style stratified split, final-model training and test evaluation.
TrainTestResult TrainAndTest(const Dataset& ds, const EmbeddingMatrix* embeddings,
                             const PipelineConfig& cfg,
                             const FitObserver& observer = {});

struct AblationRow {
  Modality modality;
  std::vector<double> recall;
  EvalReport report;
  std::vector<size_t> test_rows;
};

struct AblationTable {
  std::vector<AblationRow> rows;
  bool smote = false;
};

// NumericOnly, TextOnly and Combined on the same split with SMOTE disabled.
AblationTable AblationRun(const Dataset& ds, const EmbeddingMatrix* embeddings,
                          const PipelineConfig& base_cfg);

std::string CvReportCsv(const CvReport& report);
std::string AblationCsv(const AblationTable& table);

}  // namespace stagefuse

#endif  // STAGEFUSE_PIPELINE_H_
