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

#ifndef STAGEFUSE_MODEL_IO_H_
#define STAGEFUSE_MODEL_IO_H_

#include <optional>
#include <string>

#include "stagefuse/ensembles.h"
#include "stagefuse/pipeline.h"

namespace stagefuse {

inline constexpr int kModelFormatVersion = 1;

enum class ModelKind { kPipeline, kAveraging, kStacking };
std::string ModelKindName(ModelKind k);
ModelKind ParseModelKind(const std::string& s);

// Averaging or stacking model together with the preprocessing that feeds it.
struct EnsembleBundle {
  EnsembleConfig config;
  ModalityInputs inputs;
  // Absent when the model was trained on precomputed embeddings.
  std::optional<EmbeddingSpec> embedding;
  std::string text_placeholder = kDefaultTextPlaceholder;
  AveragingModel averaging;  // kAveraging
  StackedModel stacking;     // kStacking
};

struct ModelFile {
  int format_version = kModelFormatVersion;
  ModelKind kind = ModelKind::kPipeline;
  std::optional<FittedPipeline> pipeline;
  std::optional<EnsembleBundle> ensemble;
};

// JSON text. Doubles are written in shortest round-trip form, so a loaded
// model predicts bit-identically to the saved one.
std::string SerializeModel(const ModelFile& m);
ModelFile DeserializeModel(const std::string& text);
void SaveModel(const ModelFile& m, const std::string& path);
ModelFile LoadModel(const std::string& path);

// Hashing spec the model needs at predict time; nullopt means precomputed
// embeddings (or none, for a numeric-only pipeline).
std::optional<EmbeddingSpec> ModelEmbeddingSpec(const ModelFile& m);
bool ModelNeedsText(const ModelFile& m);
std::string ModelTextPlaceholder(const ModelFile& m);

// Sets the worker cap on every forest in the model.
void SetModelThreads(ModelFile& m, int threads);

Matrix ModelPredictProba(const ModelFile& m, const Dataset& ds,
                         const EmbeddingMatrix* embeddings);

}  // namespace stagefuse

#endif  // STAGEFUSE_MODEL_IO_H_
