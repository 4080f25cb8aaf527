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

#ifndef STAGEFUSE_DATAMODEL_H_
#define STAGEFUSE_DATAMODEL_H_

#include <string>
#include <utility>
#include <vector>

#include "stagefuse/common.h"

namespace stagefuse {

enum class ColumnRole { kNumeric, kText, kLabel };

std::string RoleName(ColumnRole role);
ColumnRole ParseRole(const std::string& name);

struct ColumnSpec {
  std::string name;
  ColumnRole role;

  bool operator==(const ColumnSpec&) const = default;
};

// Ordered list of columns. Exactly one column is the label; names are unique.
class Schema {
 public:
  Schema() = default;
  explicit Schema(std::vector<ColumnSpec> columns);

  const std::vector<ColumnSpec>& columns() const { return columns_; }
  std::vector<std::string> NumericNames() const;
  std::vector<std::string> TextNames() const;
  const std::string& LabelName() const;
  // Returns -1 when absent.
  int Find(const std::string& name) const;

  bool operator==(const Schema&) const = default;

 private:
  std::vector<ColumnSpec> columns_;
};

// Reads the JSON sidecar `[{"name": ..., "role": "numeric|text|label"}, ...]`.
Schema LoadSchema(const std::string& path);
Schema ParseSchemaJson(const std::string& json_text);
std::string SchemaToJson(const Schema& schema);

// AJCC raw stage codes 100/200/300/400 <-> class ids 0..3.
int EncodeStage(int raw_code);
int DecodeStage(int class_id);

// Column-role-tagged table. Missing numerics are NaN, missing text is "".
// `row_ids` track each row's index in the originally loaded table so that
// subsets can be traced back (used by leakage instrumentation).
struct Dataset {
  Schema schema;
  Matrix numeric;
  std::vector<std::vector<std::string>> text;  // rows x text columns
  Labels labels;
  std::vector<size_t> row_ids;

  size_t rows() const { return labels.size(); }
  // Throws InvariantError if the shape invariants do not hold.
  void Validate() const;
  Dataset Subset(const std::vector<size_t>& rows) const;
};

Dataset LoadCsv(const std::string& path, const Schema& schema);
Dataset ParseCsv(const std::string& csv_text, const Schema& schema);
// Header follows schema order; NaN is written as an empty cell, labels as raw
// AJCC codes.
std::string DatasetToCsv(const Dataset& ds);

// Number of rows per class, indexed by class id.
std::vector<size_t> ClassCounts(const Labels& y, int n_classes);

// Per-class test quotas for a stratified split of `counts` at `fraction`:
// floor of the proportional share plus a largest-remainder correction that
// makes the total equal round(n * fraction). Singleton classes get 0.
std::vector<size_t> StratifiedQuotas(const std::vector<size_t>& counts,
                                     double fraction);

struct TrainTestIndices {
  std::vector<size_t> train;
  std::vector<size_t> test;
};

TrainTestIndices StratifiedSplitIndices(const Labels& y, double test_fraction,
                                        uint64_t seed);

// Returns (train, test).
std::pair<Dataset, Dataset> SplitTrainTest(const Dataset& ds,
                                           double test_fraction,
                                           uint64_t seed);

}  // namespace stagefuse

#endif  // STAGEFUSE_DATAMODEL_H_
