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

#include "stagefuse/datamodel.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>

#include "json.hpp"
#include "stagefuse/random.h"

namespace stagefuse {

namespace {

std::string ReadFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// RFC 4180 style records. Quoted fields may contain commas, quotes ("") and
// newlines. A trailing newline does not produce an empty record.
std::vector<std::vector<std::string>> ParseCsvRecords(const std::string& s) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool in_quotes = false;
  bool any = false;
  for (size_t i = 0; i < s.size(); ++i) {
    const char c = s[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < s.size() && s[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        in_quotes = true;
        any = true;
        break;
      case ',':
        record.push_back(std::move(field));
        field.clear();
        any = true;
        break;
      case '\r':
        break;
      case '\n':
        record.push_back(std::move(field));
        field.clear();
        records.push_back(std::move(record));
        record.clear();
        any = false;
        break;
      default:
        field.push_back(c);
        any = true;
    }
  }
  if (in_quotes) throw DataError("unterminated quoted CSV field");
  if (any || !field.empty() || !record.empty()) {
    record.push_back(std::move(field));
    records.push_back(std::move(record));
  }
  return records;
}

std::string Trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

bool ParseDouble(const std::string& token, double* out) {
  const std::string t = Trim(token);
  if (t.empty()) return false;
  const char* first = t.data();
  if (*first == '+') ++first;
  auto res = std::from_chars(first, t.data() + t.size(), *out);
  return res.ec == std::errc() && res.ptr == t.data() + t.size();
}

std::string QuoteCsv(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

}  // namespace

std::string RoleName(ColumnRole role) {
  switch (role) {
    case ColumnRole::kNumeric:
      return "numeric";
    case ColumnRole::kText:
      return "text";
    case ColumnRole::kLabel:
      return "label";
  }
  return "?";
}

ColumnRole ParseRole(const std::string& name) {
  if (name == "numeric") return ColumnRole::kNumeric;
  if (name == "text") return ColumnRole::kText;
  if (name == "label") return ColumnRole::kLabel;
  throw DataError("unknown column role: " + name);
}

Schema::Schema(std::vector<ColumnSpec> columns) : columns_(std::move(columns)) {
  std::set<std::string> names;
  int labels = 0;
  for (const auto& c : columns_) {
    if (!names.insert(c.name).second) {
      throw DataError("duplicate column name in schema: " + c.name);
    }
    if (c.role == ColumnRole::kLabel) ++labels;
  }
  if (labels != 1) {
    throw DataError("schema must have exactly one label column, found " +
                    std::to_string(labels));
  }
}

std::vector<std::string> Schema::NumericNames() const {
  std::vector<std::string> out;
  for (const auto& c : columns_) {
    if (c.role == ColumnRole::kNumeric) out.push_back(c.name);
  }
  return out;
}

std::vector<std::string> Schema::TextNames() const {
  std::vector<std::string> out;
  for (const auto& c : columns_) {
    if (c.role == ColumnRole::kText) out.push_back(c.name);
  }
  return out;
}

const std::string& Schema::LabelName() const {
  for (const auto& c : columns_) {
    if (c.role == ColumnRole::kLabel) return c.name;
  }
  throw InvariantError("schema without label column");
}

int Schema::Find(const std::string& name) const {
  for (size_t i = 0; i < columns_.size(); ++i) {
    if (columns_[i].name == name) return static_cast<int>(i);
  }
  return -1;
}

Schema ParseSchemaJson(const std::string& json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("invalid schema JSON: ") + e.what());
  }
  if (!j.is_array()) throw DataError("schema JSON must be an array");
  std::vector<ColumnSpec> cols;
  for (const auto& item : j) {
    if (!item.is_object() || !item.contains("name") || !item.contains("role")) {
      throw DataError("schema entries need \"name\" and \"role\"");
    }
    cols.push_back({item.at("name").get<std::string>(),
                    ParseRole(item.at("role").get<std::string>())});
  }
  return Schema(std::move(cols));
}

Schema LoadSchema(const std::string& path) {
  return ParseSchemaJson(ReadFile(path));
}

std::string SchemaToJson(const Schema& schema) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& c : schema.columns()) {
    j.push_back({{"name", c.name}, {"role", RoleName(c.role)}});
  }
  return j.dump(2) + "\n";
}

int EncodeStage(int raw_code) {
  switch (raw_code) {
    case 100:
      return 0;
    case 200:
      return 1;
    case 300:
      return 2;
    case 400:
      return 3;
  }
  throw DataError("unknown stage code: " + std::to_string(raw_code));
}

int DecodeStage(int class_id) {
  if (class_id < 0 || class_id >= kNumStages) {
    throw DataError("class id out of range: " + std::to_string(class_id));
  }
  return (class_id + 1) * 100;
}

void Dataset::Validate() const {
  const size_t n = labels.size();
  CheckInvariant(static_cast<size_t>(numeric.rows()) == n,
                 "numeric row count mismatch");
  CheckInvariant(text.size() == n, "text row count mismatch");
  CheckInvariant(row_ids.size() == n, "row id count mismatch");
  CheckInvariant(static_cast<size_t>(numeric.cols()) ==
                     schema.NumericNames().size(),
                 "numeric column count mismatch");
  const size_t tcols = schema.TextNames().size();
  for (const auto& r : text) {
    CheckInvariant(r.size() == tcols, "text column count mismatch");
  }
}

Dataset Dataset::Subset(const std::vector<size_t>& rows) const {
  Dataset out;
  out.schema = schema;
  out.numeric = SelectRows(numeric, rows);
  out.text.reserve(rows.size());
  out.labels.reserve(rows.size());
  out.row_ids.reserve(rows.size());
  for (size_t r : rows) {
    out.text.push_back(text[r]);
    out.labels.push_back(labels[r]);
    out.row_ids.push_back(row_ids[r]);
  }
  return out;
}

Dataset ParseCsv(const std::string& csv_text, const Schema& schema) {
  auto records = ParseCsvRecords(csv_text);
  if (records.empty()) throw DataError("CSV has no header row");
  const auto& header = records.front();

  std::set<std::string> seen;
  std::vector<int> col_to_schema(header.size());
  for (size_t c = 0; c < header.size(); ++c) {
    const int idx = schema.Find(header[c]);
    if (idx < 0) throw DataError("CSV column not in schema: " + header[c]);
    if (!seen.insert(header[c]).second) {
      throw DataError("duplicate CSV column: " + header[c]);
    }
    col_to_schema[c] = idx;
  }
  for (const auto& spec : schema.columns()) {
    if (!seen.count(spec.name)) {
      throw DataError("CSV is missing schema column: " + spec.name);
    }
  }

  // Position of each schema column within its role block.
  std::vector<int> role_pos(schema.columns().size());
  int n_num = 0, n_text = 0;
  for (size_t i = 0; i < schema.columns().size(); ++i) {
    switch (schema.columns()[i].role) {
      case ColumnRole::kNumeric:
        role_pos[i] = n_num++;
        break;
      case ColumnRole::kText:
        role_pos[i] = n_text++;
        break;
      case ColumnRole::kLabel:
        role_pos[i] = 0;
        break;
    }
  }

  const size_t n = records.size() - 1;
  Dataset ds;
  ds.schema = schema;
  ds.numeric = Matrix(static_cast<Eigen::Index>(n), n_num);
  ds.text.assign(n, std::vector<std::string>(n_text));
  ds.labels.resize(n);
  ds.row_ids.resize(n);
  std::iota(ds.row_ids.begin(), ds.row_ids.end(), size_t{0});

  for (size_t r = 0; r < n; ++r) {
    const auto& rec = records[r + 1];
    if (rec.size() != header.size()) {
      throw DataError("CSV row " + std::to_string(r + 1) + " has " +
                      std::to_string(rec.size()) + " fields, expected " +
                      std::to_string(header.size()));
    }
    for (size_t c = 0; c < rec.size(); ++c) {
      const int si = col_to_schema[c];
      const auto& spec = schema.columns()[si];
      switch (spec.role) {
        case ColumnRole::kNumeric: {
          double v = std::numeric_limits<double>::quiet_NaN();
          if (!Trim(rec[c]).empty() && !ParseDouble(rec[c], &v)) {
            throw DataError("non-numeric value '" + rec[c] + "' in column " +
                            spec.name + " at row " + std::to_string(r + 1));
          }
          ds.numeric(static_cast<Eigen::Index>(r), role_pos[si]) = v;
          break;
        }
        case ColumnRole::kText:
          ds.text[r][role_pos[si]] = rec[c];
          break;
        case ColumnRole::kLabel: {
          double v = 0;
          if (!ParseDouble(rec[c], &v) || v != std::floor(v)) {
            throw DataError("unknown stage code: '" + rec[c] + "' at row " +
                            std::to_string(r + 1));
          }
          ds.labels[r] = EncodeStage(static_cast<int>(v));
          break;
        }
      }
    }
  }
  return ds;
}

Dataset LoadCsv(const std::string& path, const Schema& schema) {
  return ParseCsv(ReadFile(path), schema);
}

std::string DatasetToCsv(const Dataset& ds) {
  std::string out;
  const auto& cols = ds.schema.columns();
  for (size_t i = 0; i < cols.size(); ++i) {
    if (i) out += ',';
    out += QuoteCsv(cols[i].name);
  }
  out += '\n';
  for (size_t r = 0; r < ds.rows(); ++r) {
    int num = 0, txt = 0;
    for (size_t i = 0; i < cols.size(); ++i) {
      if (i) out += ',';
      switch (cols[i].role) {
        case ColumnRole::kNumeric: {
          const double v = ds.numeric(static_cast<Eigen::Index>(r), num++);
          if (!std::isnan(v)) out += FormatDouble(v);
          break;
        }
        case ColumnRole::kText:
          out += QuoteCsv(ds.text[r][txt++]);
          break;
        case ColumnRole::kLabel:
          out += std::to_string(DecodeStage(ds.labels[r]));
          break;
      }
    }
    out += '\n';
  }
  return out;
}

std::vector<size_t> ClassCounts(const Labels& y, int n_classes) {
  std::vector<size_t> counts(n_classes, 0);
  for (int v : y) {
    if (v < 0 || v >= n_classes) {
      throw DataError("label out of range: " + std::to_string(v));
    }
    ++counts[v];
  }
  return counts;
}

std::vector<size_t> StratifiedQuotas(const std::vector<size_t>& counts,
                                     double fraction) {
  const size_t n = std::accumulate(counts.begin(), counts.end(), size_t{0});
  size_t target = static_cast<size_t>(std::llround(n * fraction));
  std::vector<size_t> quota(counts.size(), 0);
  std::vector<double> remainder(counts.size(), -1.0);
  size_t assigned = 0;
  size_t capacity = 0;
  for (size_t c = 0; c < counts.size(); ++c) {
    if (counts[c] <= 1) continue;
    const double exact = counts[c] * fraction;
    quota[c] = std::min(static_cast<size_t>(std::floor(exact)), counts[c] - 1);
    remainder[c] = exact - std::floor(exact);
    assigned += quota[c];
    capacity += counts[c] - 1;
  }
  target = std::min(target, capacity);
  // Largest remainder first; ties go to the lower class id.
  std::vector<size_t> order(counts.size());
  std::iota(order.begin(), order.end(), size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    return remainder[a] > remainder[b];
  });
  while (assigned < target) {
    bool progressed = false;
    for (size_t c : order) {
      if (assigned >= target) break;
      if (counts[c] <= 1 || quota[c] + 1 > counts[c] - 1) continue;
      ++quota[c];
      ++assigned;
      progressed = true;
    }
    if (!progressed) break;
  }
  while (assigned > target) {
    for (auto it = order.rbegin(); it != order.rend() && assigned > target;
         ++it) {
      if (quota[*it] > 0) {
        --quota[*it];
        --assigned;
      }
    }
  }
  return quota;
}

TrainTestIndices StratifiedSplitIndices(const Labels& y, double test_fraction,
                                        uint64_t seed) {
  if (y.empty()) throw DataError("cannot split an empty dataset");
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw DataError("test fraction must lie in (0, 1)");
  }
  const int n_classes = *std::max_element(y.begin(), y.end()) + 1;
  const auto counts = ClassCounts(y, n_classes);
  const auto quota = StratifiedQuotas(counts, test_fraction);

  std::vector<std::vector<size_t>> members(n_classes);
  for (size_t i = 0; i < y.size(); ++i) members[y[i]].push_back(i);

  TrainTestIndices out;
  for (int c = 0; c < n_classes; ++c) {
    Rng rng(DeriveSeed(seed, static_cast<uint64_t>(c)));
    auto idx = members[c];
    rng.Shuffle(idx);
    out.test.insert(out.test.end(), idx.begin(), idx.begin() + quota[c]);
    out.train.insert(out.train.end(), idx.begin() + quota[c], idx.end());
  }
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.test.begin(), out.test.end());
  return out;
}

std::pair<Dataset, Dataset> SplitTrainTest(const Dataset& ds,
                                           double test_fraction,
                                           uint64_t seed) {
  const auto idx = StratifiedSplitIndices(ds.labels, test_fraction, seed);
  return {ds.Subset(idx.train), ds.Subset(idx.test)};
}

}  // namespace stagefuse
