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

#include "commands.h"

#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "stagefuse/datamodel.h"
#include "stagefuse/ensembles.h"
#include "stagefuse/explain.h"
#include "stagefuse/metrics.h"
#include "stagefuse/model_io.h"
#include "stagefuse/pipeline.h"
#include "stagefuse/random.h"
#include "stagefuse/synth.h"

namespace stagefuse {

namespace {

namespace fs = std::filesystem;

// Substreams of --seed.
constexpr uint64_t kSmoteSeedStream = 101;
constexpr uint64_t kForestSeedStream = 102;
constexpr uint64_t kExplainSampleStream = 201;
constexpr uint64_t kExplainBackgroundStream = 202;
constexpr uint64_t kExplainPermutationStream = 203;

struct DataOpts {
  std::string data;
  std::string schema;
  std::string embeddings;
  int hash_dim = 64;
  uint64_t hash_seed = 0;
};

struct ModelOpts {
  std::string model_kind = "pipeline";
  std::string modality = "combined";
  std::string impute_mode = "pre-split";
  std::string pca_scope = "fold";
  double pca_threshold = 0.98;
  int smote_k = 5;
  bool no_smote = false;
  int trees = 200;
  int max_depth = 0;
  int min_samples_leaf = 2;
  std::string max_features = "sqrt";
  int folds = 5;
  double test_fraction = 0.2;
  uint64_t seed = 0;
  int threads = 1;
};

struct LoadedData {
  Dataset ds;
  std::optional<EmbeddingMatrix> embeddings;
  std::optional<EmbeddingSpec> spec;
  const EmbeddingMatrix* emb() const { return embeddings ? &*embeddings : nullptr; }
};

void WriteFile(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << content;
  if (!out) throw DataError("cannot write " + path.string());
}

void AddDataOpts(CLI::App* cmd, DataOpts& o) {
  cmd->add_option("--data", o.data, "Dataset CSV")->required();
  cmd->add_option("--schema", o.schema,
                  "Schema JSON sidecar (default: schema.json next to --data)");
  auto* emb = cmd->add_option("--embeddings", o.embeddings,
                              "Precomputed text embeddings CSV (e0..e{d-1})");
  cmd->add_option("--hash-dim", o.hash_dim,
                  "Hashed text embedding width when --embeddings is absent")
      ->excludes(emb)
      ->check(CLI::Range(2, 1 << 20));
  cmd->add_option("--hash-seed", o.hash_seed, "Seed of the token hash");
}

void AddCommonOpts(CLI::App* cmd, ModelOpts& o) {
  cmd->add_option("--seed", o.seed, "Master seed (required)")->required();
  cmd->add_option("--threads", o.threads, "Worker cap; results do not depend on it")
      ->check(CLI::Range(1, 1024));
}

void AddPipelineOpts(CLI::App* cmd, ModelOpts& o) {
  cmd->add_option("--modality", o.modality, "numeric | text | combined")
      ->check(CLI::IsMember({"numeric", "text", "combined"}));
  cmd->add_option("--impute-mode", o.impute_mode,
                  "pre-split (impute all rows before splitting) | leak-free")
      ->check(CLI::IsMember({"pre-split", "leak-free"}));
  cmd->add_option("--pca-scope", o.pca_scope, "fold | global")
      ->check(CLI::IsMember({"fold", "global"}));
  cmd->add_option("--pca-threshold", o.pca_threshold,
                  "Cumulative explained variance to keep");
  cmd->add_option("--smote-k", o.smote_k, "SMOTE neighbours")
      ->check(CLI::PositiveNumber);
  cmd->add_flag("--no-smote", o.no_smote, "Disable SMOTE");
  cmd->add_option("--trees", o.trees, "Trees per forest")->check(CLI::PositiveNumber);
  cmd->add_option("--max-depth", o.max_depth, "Maximum tree depth, 0 = unlimited")
      ->check(CLI::NonNegativeNumber);
  cmd->add_option("--min-samples-leaf", o.min_samples_leaf, "Minimum rows per leaf")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--max-features", o.max_features,
                  "Features tried per split: sqrt | all | <n>");
  AddCommonOpts(cmd, o);
}

PipelineConfig ToPipelineConfig(const ModelOpts& o) {
  PipelineConfig cfg;
  cfg.modality = ParseModality(o.modality);
  cfg.impute_mode = ParseImputeMode(o.impute_mode);
  cfg.pca_scope = ParsePcaScope(o.pca_scope);
  cfg.pca_threshold = o.pca_threshold;
  cfg.smote.k_neighbors = o.smote_k;
  cfg.smote.seed = DeriveSeed(o.seed, kSmoteSeedStream);
  cfg.use_smote = !o.no_smote;
  cfg.forest.n_trees = o.trees;
  if (o.max_depth > 0) cfg.forest.max_depth = o.max_depth;
  cfg.forest.min_samples_leaf = o.min_samples_leaf;
  cfg.forest.features_per_split = FeatureSubset::Parse(o.max_features);
  cfg.forest.seed = DeriveSeed(o.seed, kForestSeedStream);
  cfg.forest.threads = o.threads;
  cfg.folds = o.folds;
  cfg.test_fraction = o.test_fraction;
  cfg.seed = o.seed;
  cfg.Validate();
  return cfg;
}

EnsembleConfig ToEnsembleConfig(const PipelineConfig& p) {
  EnsembleConfig e;
  e.forest = p.forest;
  e.smote = p.smote;
  e.use_smote = p.use_smote;
  e.seed = p.seed;
  return e;
}

Schema ResolveSchema(const DataOpts& o) {
  if (!o.schema.empty()) return LoadSchema(o.schema);
  return LoadSchema((fs::path(o.data).parent_path() / "schema.json").string());
}

// Loads the dataset and, when text is needed, its embeddings: from file if
// given, else hashed with `hash_spec` (or the flags when that is empty).
LoadedData LoadData(const DataOpts& o, bool needs_text,
                    const std::string& placeholder,
                    std::optional<EmbeddingSpec> hash_spec = std::nullopt) {
  LoadedData d;
  d.ds = LoadCsv(o.data, ResolveSchema(o));
  if (!o.embeddings.empty()) {
    d.embeddings = LoadPrecomputedEmbeddings(o.embeddings, d.ds.rows());
  } else if (needs_text) {
    if (!hash_spec) {
      hash_spec = EmbeddingSpec{EmbeddingSource::kHashing, o.hash_dim, o.hash_seed};
    }
    d.spec = hash_spec;
    d.embeddings = EmbedForPipeline(d.ds, *d.spec, placeholder);
  }
  return d;
}

std::string CsvRow(const std::string& a, const std::string& b, const std::string& c) {
  return a + "," + b + "," + c + "\n";
}

std::string EvalSection(const std::string& section, const EvalReport& r) {
  std::string s = CsvRow(section, "accuracy", FormatDouble(r.accuracy));
  s += CsvRow(section, "macro_precision", FormatDouble(r.prf.macro.precision));
  s += CsvRow(section, "macro_recall", FormatDouble(r.prf.macro.recall));
  s += CsvRow(section, "macro_f1", FormatDouble(r.prf.macro.f1));
  for (size_t c = 0; c < r.prf.per_class.size(); ++c) {
    s += CsvRow(section, "recall_class_" + std::to_string(c),
                FormatDouble(r.prf.per_class[c].recall));
  }
  if (r.has_auc) s += CsvRow(section, "auc_macro", FormatDouble(r.auc.macro));
  return s;
}

// ---------------------------------------------------------------- synth

int CmdSynth(size_t rows, uint64_t seed, double noise, double missing,
             const std::string& out_dir, std::ostream& out) {
  SynthConfig cfg;
  cfg.n_rows = rows;
  cfg.seed = seed;
  cfg.noise_scale = noise;
  cfg.missing_rate = missing;
  const Dataset ds = GenerateSynthetic(cfg);
  WriteFile(fs::path(out_dir) / "dataset.csv", DatasetToCsv(ds));
  WriteFile(fs::path(out_dir) / "schema.json", SchemaToJson(ds.schema));
  const auto counts = ClassCounts(ds.labels, kNumStages);
  out << "wrote " << ds.rows() << " rows (stage counts";
  for (size_t c : counts) out << ' ' << c;
  out << ")\n";
  return kExitOk;
}

// ---------------------------------------------------------------- train

ModelFile FitEnsembleFile(ModelKind kind, const Dataset& train,
                          const EmbeddingMatrix& emb,
                          const std::optional<EmbeddingSpec>& spec,
                          const PipelineConfig& cfg) {
  ModelFile m;
  m.kind = kind;
  EnsembleBundle b;
  b.config = ToEnsembleConfig(cfg);
  b.embedding = spec;
  b.text_placeholder = cfg.text_placeholder;
  ModalityMatrices mm;
  b.inputs = FitModalityInputs(train, emb, cfg.pca_threshold, cfg.text_placeholder, &mm);
  if (kind == ModelKind::kAveraging) {
    b.averaging = AveragingFit(mm.numeric, mm.text, train.labels, b.config);
  } else {
    b.stacking = StackingFit(mm.numeric, mm.text, train.labels, b.config);
  }
  m.ensemble = std::move(b);
  return m;
}

int CmdTrain(const DataOpts& dopts, const ModelOpts& mopts, bool holdout,
             const std::string& model_path, std::string report_path,
             std::ostream& out) {
  const ModelKind kind = ParseModelKind(mopts.model_kind);
  PipelineConfig cfg = ToPipelineConfig(mopts);
  if (kind != ModelKind::kPipeline) cfg.modality = Modality::kCombined;
  const LoadedData d = LoadData(dopts, cfg.UsesText(), cfg.text_placeholder);

  ModelFile m;
  m.kind = kind;
  std::optional<EvalReport> test_report;
  size_t n_train = d.ds.rows();
  if (kind == ModelKind::kPipeline) {
    if (holdout) {
      auto r = TrainAndTest(d.ds, d.emb(), cfg);
      test_report = r.test_report;
      n_train -= r.test_rows.size();
      m.pipeline = std::move(r.pipeline);
    } else {
      m.pipeline = TrainFinal(d.ds, d.emb(), cfg);
    }
    m.pipeline->embedding = d.spec;
  } else if (holdout) {
    const auto split = StratifiedSplitIndices(d.ds.labels, cfg.test_fraction,
                                              DeriveSeed(cfg.seed, 1));
    const Dataset train = d.ds.Subset(split.train);
    const Dataset test = d.ds.Subset(split.test);
    m = FitEnsembleFile(kind, train, d.embeddings->Subset(split.train), d.spec, cfg);
    const EmbeddingMatrix test_emb = d.embeddings->Subset(split.test);
    const Matrix proba = ModelPredictProba(m, test, &test_emb);
    test_report = Evaluate(test.labels, ArgmaxRows(proba), proba);
    n_train = train.rows();
  } else {
    m = FitEnsembleFile(kind, d.ds, *d.embeddings, d.spec, cfg);
  }
  if (fs::path(model_path).has_parent_path()) {
    fs::create_directories(fs::path(model_path).parent_path());
  }
  SaveModel(m, model_path);

  std::string report = "section,name,value\n";
  report += CsvRow("config", "model_kind", ModelKindName(kind));
  report += CsvRow("config", "modality", ModalityName(cfg.modality));
  report += CsvRow("config", "impute_mode", ImputeModeName(cfg.impute_mode));
  report += CsvRow("config", "smote", cfg.use_smote ? "1" : "0");
  report += CsvRow("config", "smote_k", std::to_string(cfg.smote.k_neighbors));
  report += CsvRow("config", "trees", std::to_string(cfg.forest.n_trees));
  report += CsvRow("config", "seed", std::to_string(cfg.seed));
  report += CsvRow("config", "text_source",
                   !cfg.UsesText() ? "none" : d.spec ? "hashing" : "precomputed");
  report += CsvRow("data", "rows", std::to_string(d.ds.rows()));
  report += CsvRow("data", "train_rows", std::to_string(n_train));
  const auto counts = ClassCounts(d.ds.labels, kNumStages);
  for (int c = 0; c < kNumStages; ++c) {
    report += CsvRow("data", "count_class_" + std::to_string(c), std::to_string(counts[c]));
  }
  if (m.pipeline) {
    report += CsvRow("model", "features", std::to_string(m.pipeline->feature_names.size()));
    report += CsvRow("model", "pca_components",
                     std::to_string(m.pipeline->pca ? m.pipeline->pca->n_components() : 0));
  } else {
    report += CsvRow("model", "pca_components",
                     std::to_string(m.ensemble->inputs.pca.n_components()));
  }
  if (test_report) report += EvalSection("test", *test_report);
  if (report_path.empty()) {
    report_path = (fs::path(model_path).parent_path() / "train_report.csv").string();
  }
  WriteFile(report_path, report);
  out << "saved " << ModelKindName(kind) << " model to " << model_path << "\n";
  if (test_report) out << FormatReport(*test_report);
  return kExitOk;
}

// ---------------------------------------------------------------- cv, ablate

int CmdCv(const DataOpts& dopts, const ModelOpts& mopts, const std::string& out_dir,
          std::ostream& out) {
  const PipelineConfig cfg = ToPipelineConfig(mopts);
  const LoadedData d = LoadData(dopts, cfg.UsesText(), cfg.text_placeholder);
  const CvReport r = RunCv(d.ds, d.emb(), cfg);
  WriteFile(fs::path(out_dir) / "cv_report.csv", CvReportCsv(r));
  out << "mean accuracy " << FormatFixed(r.mean_accuracy, 4) << ", macro F1 "
      << FormatFixed(r.mean_macro.f1, 4) << " over " << r.folds.size() << " folds\n";
  return kExitOk;
}

int CmdAblate(const DataOpts& dopts, const ModelOpts& mopts, const std::string& out_dir,
              std::ostream& out) {
  const PipelineConfig cfg = ToPipelineConfig(mopts);
  const LoadedData d = LoadData(dopts, true, cfg.text_placeholder);
  const AblationTable t = AblationRun(d.ds, d.emb(), cfg);
  const std::string csv = AblationCsv(t);
  WriteFile(fs::path(out_dir) / "ablation.csv", csv);
  out << csv;
  return kExitOk;
}

// ---------------------------------------------------------------- evaluate

int ParsePredictionLabel(const std::string& cell) {
  int v = 0;
  try {
    size_t pos = 0;
    v = std::stoi(cell, &pos);
    if (pos != cell.size()) throw std::invalid_argument(cell);
  } catch (const std::exception&) {
    throw DataError("bad label in predictions: '" + cell + "'");
  }
  if (v >= 0 && v < kNumStages) return v;
  return EncodeStage(v);
}

// y_true,y_pred[,p0..p{C-1}]. Labels are class ids 0..3 or stage codes.
void ReadPredictions(const std::string& path, Labels& y_true, Labels& y_pred,
                     Matrix& proba) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read " + path);
  std::string line;
  if (!std::getline(in, line)) throw DataError("empty predictions file");
  auto split = [](const std::string& s) {
    std::vector<std::string> cells;
    std::stringstream ss(s);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!s.empty() && s.back() == ',') cells.emplace_back();
    return cells;
  };
  const auto header = split(line);
  std::vector<std::string> expected{"y_true", "y_pred"};
  const bool has_proba = header.size() > 2;
  if (has_proba) {
    for (int c = 0; c < kNumStages; ++c) expected.push_back("p" + std::to_string(c));
  }
  if (header != expected) {
    throw DataError("predictions header must be y_true,y_pred[,p0..p3]");
  }
  std::vector<std::vector<double>> rows;
  size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split(line);
    if (cells.size() != expected.size()) {
      throw DataError("predictions line " + std::to_string(line_no) +
                      ": expected " + std::to_string(expected.size()) + " cells");
    }
    y_true.push_back(ParsePredictionLabel(cells[0]));
    y_pred.push_back(ParsePredictionLabel(cells[1]));
    if (has_proba) {
      std::vector<double> p;
      for (size_t j = 2; j < cells.size(); ++j) {
        try {
          p.push_back(std::stod(cells[j]));
        } catch (const std::exception&) {
          throw DataError("bad probability on line " + std::to_string(line_no));
        }
      }
      rows.push_back(std::move(p));
    }
  }
  if (y_true.empty()) throw DataError("predictions file has no rows");
  proba.resize(has_proba ? static_cast<Eigen::Index>(rows.size()) : 0, kNumStages);
  for (size_t i = 0; i < rows.size(); ++i) {
    for (int c = 0; c < kNumStages; ++c) {
      proba(static_cast<Eigen::Index>(i), c) = rows[i][static_cast<size_t>(c)];
    }
  }
}

void WriteEvaluation(const EvalReport& r, const Labels& y_true, const Matrix& proba,
                     const fs::path& dir, std::ostream& out) {
  WriteFile(dir / "metrics.csv", MetricsCsv(r));
  WriteFile(dir / "confusion.csv", ConfusionCsv(r.confusion));
  if (proba.rows() > 0) {
    for (int c = 0; c < kNumStages; ++c) {
      std::vector<int> pos(y_true.size());
      std::vector<double> scores(y_true.size());
      for (size_t i = 0; i < y_true.size(); ++i) {
        pos[i] = y_true[i] == c ? 1 : 0;
        scores[i] = proba(static_cast<Eigen::Index>(i), c);
      }
      const std::string suffix = "_class" + std::to_string(c);
      const auto roc = RocCurve(pos, scores);
      const auto pr = PrCurve(pos, scores);
      WriteFile(dir / ("roc" + suffix + ".csv"), CurveCsv(roc, "fpr", "tpr"));
      WriteFile(dir / ("roc" + suffix + ".svg"),
                CurveSvg(roc, "ROC, class " + std::to_string(c), "fpr", "tpr"));
      WriteFile(dir / ("pr" + suffix + ".csv"), CurveCsv(pr, "recall", "precision"));
      WriteFile(dir / ("pr" + suffix + ".svg"),
                CurveSvg(pr, "Precision-recall, class " + std::to_string(c), "recall",
                         "precision"));
    }
  }
  out << FormatReport(r);
}

LoadedData LoadForModel(const DataOpts& dopts, const ModelFile& m) {
  const auto spec = ModelEmbeddingSpec(m);
  const bool needs_text = ModelNeedsText(m);
  if (needs_text && !spec && dopts.embeddings.empty()) {
    throw DataError("model was trained on precomputed embeddings; pass --embeddings");
  }
  if (needs_text && spec && !dopts.embeddings.empty()) {
    throw DataError("model hashes its own text; do not pass --embeddings");
  }
  return LoadData(dopts, needs_text, ModelTextPlaceholder(m), spec);
}

int CmdEvaluate(const DataOpts& dopts, const std::string& model_path,
                const std::string& predictions, int threads,
                const std::string& out_dir, std::ostream& out) {
  Labels y_true, y_pred;
  Matrix proba;
  if (!predictions.empty()) {
    ReadPredictions(predictions, y_true, y_pred, proba);
  } else {
    if (model_path.empty() || dopts.data.empty()) {
      throw CLI::ValidationError("evaluate needs --predictions or --model with --data");
    }
    ModelFile m = LoadModel(model_path);
    SetModelThreads(m, threads);
    const LoadedData d = LoadForModel(dopts, m);
    proba = ModelPredictProba(m, d.ds, d.emb());
    y_true = d.ds.labels;
    y_pred = ArgmaxRows(proba);
  }
  const EvalReport r = proba.rows() > 0 ? Evaluate(y_true, y_pred, proba)
                                        : Evaluate(y_true, y_pred, kNumStages);
  WriteEvaluation(r, y_true, proba, out_dir, out);
  return kExitOk;
}

// ---------------------------------------------------------------- explain

struct ExplainArgs {
  std::string model;
  std::string mode = "exact";
  size_t background_rows = 100;
  size_t samples = 20;
  int permutations = 256;
  std::string out_dir = ".";
};

int CmdExplain(const DataOpts& dopts, const ExplainArgs& a, const ModelOpts& mopts,
               std::ostream& out) {
  ModelFile m = LoadModel(a.model);
  if (m.kind != ModelKind::kPipeline) {
    throw DataError("explain supports pipeline models only");
  }
  SetModelThreads(m, mopts.threads);
  const LoadedData d = LoadForModel(dopts, m);
  const FittedPipeline& p = *m.pipeline;
  const Matrix x = TransformFeatures(p, d.ds, d.emb());
  const auto sample_rows = StratifiedSubsample(
      d.ds.labels, a.samples, DeriveSeed(mopts.seed, kExplainSampleStream));
  const auto background_rows = StratifiedSubsample(
      d.ds.labels, a.background_rows, DeriveSeed(mopts.seed, kExplainBackgroundStream));
  const Matrix samples = SelectRows(x, sample_rows);
  const Matrix background = SelectRows(x, background_rows);

  ExplainOptions opts;
  opts.mode = a.mode == "exact" ? ShapMode::kExact : ShapMode::kSampling;
  opts.n_permutations = a.permutations;
  opts.seed = DeriveSeed(mopts.seed, kExplainPermutationStream);
  opts.threads = mopts.threads;
  const ShapTensor t =
      ExplainBatch(ForestProbaFn(p.forest), samples, background, p.feature_names, opts);
  const auto records = ShapRecords(t, samples);
  const auto summary = ShapSummary(t);
  const fs::path dir(a.out_dir);
  WriteFile(dir / "shap_values.csv", ShapValuesCsv(t, records));
  WriteFile(dir / "shap_summary.csv", ShapSummaryCsv(summary));
  for (int c = 0; c < static_cast<int>(t.base_values.size()); ++c) {
    WriteFile(dir / ("shap_summary_class" + std::to_string(c) + ".svg"),
              ShapBeeswarmSvg(records, summary, c));
  }
  out << "top features:";
  for (size_t i = 0; i < summary.size() && i < 5; ++i) out << ' ' << summary[i].name;
  out << "\n";
  return kExitOk;
}

}  // namespace

int RunCli(const std::vector<std::string>& args, std::ostream& out,
           std::ostream& err) {
  CLI::App app{"Prostate cancer stage classification from fused numeric and text features"};
  app.require_subcommand(1);

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a synthetic dataset");
  size_t synth_rows = 5000;
  uint64_t synth_seed = 0;
  double synth_noise = 1.0, synth_missing = 0.05;
  std::string synth_out = ".";
  synth->add_option("--rows", synth_rows, "Row count")->required();
  synth->add_option("--seed", synth_seed, "Seed (required)")->required();
  synth->add_option("--noise-scale", synth_noise, "Gaussian noise scale on PSA columns");
  synth->add_option("--missing-rate", synth_missing, "MCAR blanking rate per cell");
  synth->add_option("--out", synth_out, "Output directory");

  // train
  auto* train = app.add_subcommand("train", "Fit a model and save it");
  DataOpts train_data;
  ModelOpts train_opts;
  std::string train_model, train_report;
  bool train_holdout = false;
  AddDataOpts(train, train_data);
  AddPipelineOpts(train, train_opts);
  train->add_option("--model-kind", train_opts.model_kind,
                    "pipeline | averaging | stacking")
      ->check(CLI::IsMember({"pipeline", "averaging", "stacking"}));
  train->add_option("--out", train_model, "Model file to write")->required();
  train->add_option("--report", train_report,
                    "Training report CSV (default: train_report.csv next to --out)");
  auto* holdout_opt = train->add_option(
      "--test-fraction", train_opts.test_fraction,
      "Hold out this stratified fraction and report test metrics");

  // cv
  auto* cv = app.add_subcommand("cv", "Stratified k-fold cross-validation");
  DataOpts cv_data;
  ModelOpts cv_opts;
  std::string cv_out = ".";
  AddDataOpts(cv, cv_data);
  AddPipelineOpts(cv, cv_opts);
  cv->add_option("--folds", cv_opts.folds, "Fold count")->check(CLI::Range(2, 1000));
  cv->add_option("--out", cv_out, "Output directory");

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "Score predictions or a saved model");
  DataOpts eval_data;
  std::string eval_model, eval_predictions, eval_out = ".";
  int eval_threads = 1;
  evaluate->add_option("--model", eval_model, "Model file");
  evaluate->add_option("--data", eval_data.data, "Dataset CSV");
  evaluate->add_option("--schema", eval_data.schema, "Schema JSON sidecar");
  evaluate->add_option("--embeddings", eval_data.embeddings, "Precomputed embeddings CSV");
  evaluate->add_option("--predictions", eval_predictions,
                       "CSV y_true,y_pred[,p0..p3] instead of a model");
  evaluate->add_option("--threads", eval_threads, "Worker cap")->check(CLI::Range(1, 1024));
  evaluate->add_option("--out", eval_out, "Output directory");

  // ablate
  auto* ablate = app.add_subcommand(
      "ablate", "Numeric, text and combined pipelines on one split, SMOTE off");
  DataOpts ablate_data;
  ModelOpts ablate_opts;
  std::string ablate_out = ".";
  AddDataOpts(ablate, ablate_data);
  AddPipelineOpts(ablate, ablate_opts);
  ablate->add_option("--test-fraction", ablate_opts.test_fraction, "Test fraction");
  ablate->add_option("--out", ablate_out, "Output directory");

  // explain
  auto* explain = app.add_subcommand("explain", "Shapley attributions of a pipeline model");
  DataOpts explain_data;
  ModelOpts explain_opts;
  ExplainArgs explain_args;
  explain->add_option("--model", explain_args.model, "Model file")->required();
  explain->add_option("--data", explain_data.data, "Dataset CSV")->required();
  explain->add_option("--schema", explain_data.schema, "Schema JSON sidecar");
  explain->add_option("--embeddings", explain_data.embeddings,
                      "Precomputed embeddings CSV");
  explain->add_option("--mode", explain_args.mode, "exact | sampling")
      ->check(CLI::IsMember({"exact", "sampling"}));
  explain->add_option("--background-rows", explain_args.background_rows,
                      "Stratified background rows drawn from --data")
      ->check(CLI::PositiveNumber);
  explain->add_option("--samples", explain_args.samples,
                      "Stratified rows to explain")
      ->check(CLI::PositiveNumber);
  explain->add_option("--permutations", explain_args.permutations,
                      "Permutations per sample in sampling mode")
      ->check(CLI::PositiveNumber);
  explain->add_option("--out", explain_args.out_dir, "Output directory");
  AddCommonOpts(explain, explain_opts);

  std::vector<std::string> argv_store{"stagefuse"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& s : argv_store) argv.push_back(s.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
    if (*synth) {
      return CmdSynth(synth_rows, synth_seed, synth_noise, synth_missing, synth_out, out);
    }
    if (*train) {
      train_holdout = holdout_opt->count() > 0;
      return CmdTrain(train_data, train_opts, train_holdout, train_model,
                      train_report, out);
    }
    if (*cv) return CmdCv(cv_data, cv_opts, cv_out, out);
    if (*evaluate) {
      return CmdEvaluate(eval_data, eval_model, eval_predictions, eval_threads,
                         eval_out, out);
    }
    if (*ablate) return CmdAblate(ablate_data, ablate_opts, ablate_out, out);
    if (*explain) return CmdExplain(explain_data, explain_args, explain_opts, out);
    return kExitUsage;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  } catch (const DataError& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const InvariantError& e) {
    err << "internal error: " << e.what() << "\n";
    return kExitInternal;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
}

}  // namespace stagefuse
