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

#include "stagefuse/model_io.h"

#include <fstream>
#include <sstream>

#include "json.hpp"

namespace stagefuse {

namespace {

using nlohmann::json;

[[noreturn]] void Corrupt(const std::string& what) {
  throw DataError("corrupt model file: " + what);
}

json VecToJson(const Vector& v) {
  json j = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) j.push_back(v(i));
  return j;
}

Vector VecFromJson(const json& j) {
  if (!j.is_array()) Corrupt("expected array");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  return v;
}

json MatToJson(const Matrix& m) {
  json j = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    j.push_back(std::move(row));
  }
  return j;
}

Matrix MatFromJson(const json& j, Eigen::Index cols) {
  if (!j.is_array()) Corrupt("expected matrix");
  Matrix m(static_cast<Eigen::Index>(j.size()), cols);
  for (size_t r = 0; r < j.size(); ++r) {
    if (!j[r].is_array() || static_cast<Eigen::Index>(j[r].size()) != cols) {
      Corrupt("ragged matrix");
    }
    for (Eigen::Index c = 0; c < cols; ++c) {
      m(static_cast<Eigen::Index>(r), c) = j[r][static_cast<size_t>(c)].get<double>();
    }
  }
  return m;
}

json ForestParamsToJson(const ForestParams& p) {
  return {{"n_trees", p.n_trees},
          {"max_depth", p.max_depth ? json(*p.max_depth) : json(nullptr)},
          {"min_samples_leaf", p.min_samples_leaf},
          {"features_per_split", p.features_per_split.ToString()},
          {"bootstrap", p.bootstrap},
          {"seed", p.seed}};
}

ForestParams ForestParamsFromJson(const json& j) {
  ForestParams p;
  p.n_trees = j.at("n_trees").get<int>();
  if (!j.at("max_depth").is_null()) p.max_depth = j.at("max_depth").get<int>();
  p.min_samples_leaf = j.at("min_samples_leaf").get<int>();
  p.features_per_split =
      FeatureSubset::Parse(j.at("features_per_split").get<std::string>());
  p.bootstrap = j.at("bootstrap").get<bool>();
  p.seed = j.at("seed").get<uint64_t>();
  return p;
}

// Split nodes: [feature, threshold, left, right]. Leaves: [-1, dist...].
json TreeToJson(const Tree& t) {
  json j = json::array();
  for (const auto& n : t.nodes) {
    json node = json::array();
    if (n.is_leaf()) {
      node.push_back(-1);
      for (double d : n.distribution) node.push_back(d);
    } else {
      node = {n.feature, n.threshold, n.left, n.right};
    }
    j.push_back(std::move(node));
  }
  return j;
}

Tree TreeFromJson(const json& j, int n_classes, int n_features) {
  Tree t;
  const int n = static_cast<int>(j.size());
  for (int i = 0; i < n; ++i) {
    const json& node = j[static_cast<size_t>(i)];
    if (!node.is_array() || node.empty()) Corrupt("bad tree node");
    TreeNode tn;
    tn.feature = node[0].get<int>();
    if (tn.feature < 0) {
      if (static_cast<int>(node.size()) != n_classes + 1) Corrupt("bad leaf width");
      for (int c = 0; c < n_classes; ++c) {
        tn.distribution.push_back(node[static_cast<size_t>(c + 1)].get<double>());
      }
    } else {
      if (node.size() != 4 || tn.feature >= n_features) Corrupt("bad split node");
      tn.threshold = node[1].get<double>();
      tn.left = node[2].get<int>();
      tn.right = node[3].get<int>();
      if (tn.left <= i || tn.right <= i || tn.left >= n || tn.right >= n) {
        Corrupt("child index out of range");
      }
    }
    t.nodes.push_back(std::move(tn));
  }
  if (t.nodes.empty()) Corrupt("empty tree");
  return t;
}

json ForestToJson(const ForestModel& f) {
  json trees = json::array();
  for (const auto& t : f.trees) trees.push_back(TreeToJson(t));
  return {{"n_classes", f.n_classes},
          {"n_features", f.n_features},
          {"class_weights", f.class_weights},
          {"params", ForestParamsToJson(f.params)},
          {"trees", std::move(trees)}};
}

ForestModel ForestFromJson(const json& j) {
  ForestModel f;
  f.n_classes = j.at("n_classes").get<int>();
  f.n_features = j.at("n_features").get<int>();
  if (f.n_classes < 1 || f.n_features < 0) Corrupt("bad forest shape");
  f.class_weights = j.at("class_weights").get<std::vector<double>>();
  f.params = ForestParamsFromJson(j.at("params"));
  for (const auto& t : j.at("trees")) {
    f.trees.push_back(TreeFromJson(t, f.n_classes, f.n_features));
  }
  if (f.trees.empty()) Corrupt("forest without trees");
  return f;
}

json ImputationToJson(const ImputationPlan& p) {
  json per_class = json::array();
  for (const auto& [key, v] : p.per_class_medians) {
    per_class.push_back({key.first, key.second, v});
  }
  json global = json::array();
  for (const auto& [col, v] : p.global_medians) global.push_back({col, v});
  return {{"numeric_columns", p.numeric_columns},
          {"per_class_medians", std::move(per_class)},
          {"global_medians", std::move(global)},
          {"text_placeholder", p.text_placeholder}};
}

ImputationPlan ImputationFromJson(const json& j) {
  ImputationPlan p;
  p.numeric_columns = j.at("numeric_columns").get<std::vector<std::string>>();
  for (const auto& e : j.at("per_class_medians")) {
    p.per_class_medians[{e.at(0).get<int>(), e.at(1).get<int>()}] =
        e.at(2).get<double>();
  }
  for (const auto& e : j.at("global_medians")) {
    p.global_medians[e.at(0).get<int>()] = e.at(1).get<double>();
  }
  p.text_placeholder = j.at("text_placeholder").get<std::string>();
  return p;
}

json PcaToJson(const PcaModel& m) {
  return {{"mean", VecToJson(m.mean)},
          {"components", MatToJson(m.components)},
          {"explained_variance", VecToJson(m.explained_variance)},
          {"explained_variance_ratio", VecToJson(m.explained_variance_ratio)},
          {"cumulative_variance", VecToJson(m.cumulative_variance)},
          {"total_variance", m.total_variance},
          {"threshold", m.threshold}};
}

PcaModel PcaFromJson(const json& j) {
  PcaModel m;
  m.mean = VecFromJson(j.at("mean"));
  m.components = MatFromJson(j.at("components"), m.mean.size());
  m.explained_variance = VecFromJson(j.at("explained_variance"));
  m.explained_variance_ratio = VecFromJson(j.at("explained_variance_ratio"));
  m.cumulative_variance = VecFromJson(j.at("cumulative_variance"));
  m.total_variance = j.at("total_variance").get<double>();
  m.threshold = j.at("threshold").get<double>();
  return m;
}

json SmoteToJson(const SmoteConfig& s) {
  return {{"k_neighbors", s.k_neighbors}, {"seed", s.seed}};
}

SmoteConfig SmoteFromJson(const json& j) {
  return {j.at("k_neighbors").get<int>(), j.at("seed").get<uint64_t>()};
}

json PipelineConfigToJson(const PipelineConfig& c) {
  return {{"modality", ModalityName(c.modality)},
          {"pca_threshold", c.pca_threshold},
          {"smote", SmoteToJson(c.smote)},
          {"use_smote", c.use_smote},
          {"forest", ForestParamsToJson(c.forest)},
          {"folds", c.folds},
          {"impute_mode", ImputeModeName(c.impute_mode)},
          {"pca_scope", PcaScopeName(c.pca_scope)},
          {"test_fraction", c.test_fraction},
          {"text_placeholder", c.text_placeholder},
          {"seed", c.seed}};
}

PipelineConfig PipelineConfigFromJson(const json& j) {
  PipelineConfig c;
  c.modality = ParseModality(j.at("modality").get<std::string>());
  c.pca_threshold = j.at("pca_threshold").get<double>();
  c.smote = SmoteFromJson(j.at("smote"));
  c.use_smote = j.at("use_smote").get<bool>();
  c.forest = ForestParamsFromJson(j.at("forest"));
  c.folds = j.at("folds").get<int>();
  c.impute_mode = ParseImputeMode(j.at("impute_mode").get<std::string>());
  c.pca_scope = ParsePcaScope(j.at("pca_scope").get<std::string>());
  c.test_fraction = j.at("test_fraction").get<double>();
  c.text_placeholder = j.at("text_placeholder").get<std::string>();
  c.seed = j.at("seed").get<uint64_t>();
  return c;
}

json EmbeddingSpecToJson(const std::optional<EmbeddingSpec>& e) {
  if (!e) return nullptr;
  return {{"source", "hashing"}, {"dim", e->dim}, {"hash_seed", e->hash_seed}};
}

std::optional<EmbeddingSpec> EmbeddingSpecFromJson(const json& j) {
  if (j.is_null()) return std::nullopt;
  if (j.at("source").get<std::string>() != "hashing") Corrupt("unknown embedding source");
  EmbeddingSpec e;
  e.source = EmbeddingSource::kHashing;
  e.dim = j.at("dim").get<int>();
  e.hash_seed = j.at("hash_seed").get<uint64_t>();
  return e;
}

json PipelineToJson(const FittedPipeline& p) {
  return {{"config", PipelineConfigToJson(p.config)},
          {"imputation", ImputationToJson(p.imputation)},
          {"pca", p.pca ? PcaToJson(*p.pca) : json(nullptr)},
          {"scaler", {{"means", VecToJson(p.scaler.means)},
                      {"stds", VecToJson(p.scaler.stds)}}},
          {"forest", ForestToJson(p.forest)},
          {"embedding", EmbeddingSpecToJson(p.embedding)},
          {"manifest", {{"numeric_columns", p.numeric_columns},
                        {"feature_names", p.feature_names},
                        {"transform_chain", p.transform_chain}}}};
}

FittedPipeline PipelineFromJson(const json& j) {
  FittedPipeline p;
  p.config = PipelineConfigFromJson(j.at("config"));
  p.imputation = ImputationFromJson(j.at("imputation"));
  if (!j.at("pca").is_null()) p.pca = PcaFromJson(j.at("pca"));
  p.scaler.means = VecFromJson(j.at("scaler").at("means"));
  p.scaler.stds = VecFromJson(j.at("scaler").at("stds"));
  p.forest = ForestFromJson(j.at("forest"));
  p.embedding = EmbeddingSpecFromJson(j.at("embedding"));
  const json& m = j.at("manifest");
  p.numeric_columns = m.at("numeric_columns").get<std::vector<std::string>>();
  p.feature_names = m.at("feature_names").get<std::vector<std::string>>();
  p.transform_chain = m.at("transform_chain").get<std::vector<std::string>>();
  p.config.forest.threads = 1;
  if (p.transform_chain != TransformChain(p.config)) Corrupt("transform chain mismatch");
  if (p.config.UsesText() != p.pca.has_value()) Corrupt("PCA section mismatch");
  if (static_cast<size_t>(p.forest.n_features) != p.feature_names.size() ||
      static_cast<size_t>(p.scaler.means.size()) != p.feature_names.size()) {
    Corrupt("feature manifest width mismatch");
  }
  return p;
}

json EnsembleToJson(const EnsembleBundle& b, ModelKind kind) {
  json j = {{"config", {{"forest", ForestParamsToJson(b.config.forest)},
                        {"smote", SmoteToJson(b.config.smote)},
                        {"use_smote", b.config.use_smote},
                        {"n_classes", b.config.n_classes},
                        {"meta_folds", b.config.meta_folds},
                        {"seed", b.config.seed}}},
            {"imputation", ImputationToJson(b.inputs.imputation)},
            {"pca", PcaToJson(b.inputs.pca)},
            {"embedding", EmbeddingSpecToJson(b.embedding)},
            {"text_placeholder", b.text_placeholder},
            {"manifest", {{"numeric_columns", b.inputs.numeric_columns}}}};
  if (kind == ModelKind::kAveraging) {
    j["forests"] = {{"numeric", ForestToJson(b.averaging.numeric)},
                    {"text", ForestToJson(b.averaging.text)}};
  } else {
    j["forests"] = {{"base_numeric", ForestToJson(b.stacking.base_numeric)},
                    {"base_text", ForestToJson(b.stacking.base_text)},
                    {"meta", ForestToJson(b.stacking.meta)}};
    j["manifest"]["meta_feature_layout"] = b.stacking.meta_feature_layout;
  }
  return j;
}

EnsembleBundle EnsembleFromJson(const json& j, ModelKind kind) {
  EnsembleBundle b;
  const json& c = j.at("config");
  b.config.forest = ForestParamsFromJson(c.at("forest"));
  b.config.smote = SmoteFromJson(c.at("smote"));
  b.config.use_smote = c.at("use_smote").get<bool>();
  b.config.n_classes = c.at("n_classes").get<int>();
  b.config.meta_folds = c.at("meta_folds").get<int>();
  b.config.seed = c.at("seed").get<uint64_t>();
  b.inputs.imputation = ImputationFromJson(j.at("imputation"));
  b.inputs.pca = PcaFromJson(j.at("pca"));
  b.inputs.numeric_columns =
      j.at("manifest").at("numeric_columns").get<std::vector<std::string>>();
  b.embedding = EmbeddingSpecFromJson(j.at("embedding"));
  b.text_placeholder = j.at("text_placeholder").get<std::string>();
  const json& f = j.at("forests");
  if (kind == ModelKind::kAveraging) {
    b.averaging.numeric = ForestFromJson(f.at("numeric"));
    b.averaging.text = ForestFromJson(f.at("text"));
  } else {
    b.stacking.base_numeric = ForestFromJson(f.at("base_numeric"));
    b.stacking.base_text = ForestFromJson(f.at("base_text"));
    b.stacking.meta = ForestFromJson(f.at("meta"));
    b.stacking.meta_feature_layout =
        j.at("manifest").at("meta_feature_layout").get<std::vector<std::string>>();
    if (b.stacking.meta.n_features != 2 * b.config.n_classes) {
      Corrupt("meta forest width mismatch");
    }
  }
  return b;
}

}  // namespace

std::string ModelKindName(ModelKind k) {
  switch (k) {
    case ModelKind::kPipeline:
      return "pipeline";
    case ModelKind::kAveraging:
      return "averaging";
    case ModelKind::kStacking:
      return "stacking";
  }
  return "?";
}

ModelKind ParseModelKind(const std::string& s) {
  if (s == "pipeline") return ModelKind::kPipeline;
  if (s == "averaging") return ModelKind::kAveraging;
  if (s == "stacking") return ModelKind::kStacking;
  throw DataError("unknown model kind: " + s);
}

std::string SerializeModel(const ModelFile& m) {
  json j = {{"format_version", m.format_version},
            {"model_kind", ModelKindName(m.kind)}};
  if (m.kind == ModelKind::kPipeline) {
    CheckInvariant(m.pipeline.has_value(), "pipeline model without pipeline");
    j["pipeline"] = PipelineToJson(*m.pipeline);
  } else {
    CheckInvariant(m.ensemble.has_value(), "ensemble model without ensemble");
    j["ensemble"] = EnsembleToJson(*m.ensemble, m.kind);
  }
  return j.dump() + "\n";
}

ModelFile DeserializeModel(const std::string& text) {
  try {
    const json j = json::parse(text);
    ModelFile m;
    m.format_version = j.at("format_version").get<int>();
    if (m.format_version != kModelFormatVersion) {
      throw DataError("unsupported model format version " +
                      std::to_string(m.format_version));
    }
    m.kind = ParseModelKind(j.at("model_kind").get<std::string>());
    if (m.kind == ModelKind::kPipeline) {
      m.pipeline = PipelineFromJson(j.at("pipeline"));
    } else {
      m.ensemble = EnsembleFromJson(j.at("ensemble"), m.kind);
    }
    return m;
  } catch (const json::exception& e) {
    Corrupt(e.what());
  }
}

void SaveModel(const ModelFile& m, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  out << SerializeModel(m);
  if (!out) throw DataError("cannot write " + path);
}

ModelFile LoadModel(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return DeserializeModel(ss.str());
}

std::optional<EmbeddingSpec> ModelEmbeddingSpec(const ModelFile& m) {
  return m.kind == ModelKind::kPipeline ? m.pipeline->embedding : m.ensemble->embedding;
}

bool ModelNeedsText(const ModelFile& m) {
  return m.kind != ModelKind::kPipeline || m.pipeline->config.UsesText();
}

std::string ModelTextPlaceholder(const ModelFile& m) {
  return m.kind == ModelKind::kPipeline ? m.pipeline->config.text_placeholder
                                        : m.ensemble->text_placeholder;
}

void SetModelThreads(ModelFile& m, int threads) {
  if (m.pipeline) {
    m.pipeline->config.forest.threads = threads;
    m.pipeline->forest.params.threads = threads;
  }
  if (m.ensemble) {
    m.ensemble->config.forest.threads = threads;
    for (ForestModel* f : {&m.ensemble->averaging.numeric, &m.ensemble->averaging.text,
                           &m.ensemble->stacking.base_numeric,
                           &m.ensemble->stacking.base_text, &m.ensemble->stacking.meta}) {
      f->params.threads = threads;
    }
  }
}

Matrix ModelPredictProba(const ModelFile& m, const Dataset& ds,
                         const EmbeddingMatrix* embeddings) {
  if (m.kind == ModelKind::kPipeline) {
    return PipelinePredictProba(*m.pipeline, ds, embeddings);
  }
  if (embeddings == nullptr) throw DataError("ensemble models need text embeddings");
  const auto mm = ApplyModalityInputs(m.ensemble->inputs, ds, *embeddings);
  if (m.kind == ModelKind::kAveraging) {
    return AveragingPredictProba(m.ensemble->averaging, mm.numeric, mm.text);
  }
  return StackingPredictProba(m.ensemble->stacking, mm.numeric, mm.text);
}

}  // namespace stagefuse
