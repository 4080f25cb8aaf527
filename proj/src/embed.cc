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

#include "stagefuse/embed.h"

#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace stagefuse {

namespace {

constexpr uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
constexpr uint64_t kFnvPrime = 0x100000001b3ULL;

std::vector<std::string> SplitComma(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

std::string ConcatTextFields(const Dataset& ds, size_t row) {
  std::string out;
  const auto& fields = ds.text.at(row);
  for (size_t i = 0; i < fields.size(); ++i) {
    if (i) out += ' ';
    out += fields[i];
  }
  return out;
}

EmbeddingMatrix ParsePrecomputedEmbeddings(const std::string& csv_text,
                                           size_t expected_rows) {
  std::istringstream in(csv_text);
  std::string line;
  if (!std::getline(in, line)) throw DataError("embeddings file is empty");
  const auto header = SplitComma(line);
  for (size_t i = 0; i < header.size(); ++i) {
    if (header[i] != "e" + std::to_string(i)) {
      throw DataError("embeddings header must be e0..e{d-1}, got '" +
                      header[i] + "'");
    }
  }
  const size_t dim = header.size();
  std::vector<double> values;
  size_t rows = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    const auto cells = SplitComma(line);
    if (cells.size() != dim) {
      throw DataError("ragged embeddings row " + std::to_string(rows + 1));
    }
    for (const auto& cell : cells) {
      double v = 0;
      const char* first = cell.data();
      const char* last = cell.data() + cell.size();
      if (first != last && *first == '+') ++first;
      auto res = std::from_chars(first, last, v);
      if (res.ec != std::errc() || res.ptr != last) {
        throw DataError("invalid embedding value '" + cell + "'");
      }
      if (!std::isfinite(v)) throw DataError("non-finite embedding value");
      values.push_back(v);
    }
    ++rows;
  }
  if (rows != expected_rows) {
    throw DataError("embeddings row count mismatch: file has " +
                    std::to_string(rows) + ", dataset has " +
                    std::to_string(expected_rows));
  }
  EmbeddingMatrix out;
  out.source = EmbeddingSource::kPrecomputed;
  out.data = Eigen::Map<Matrix>(values.data(), static_cast<Eigen::Index>(rows),
                                static_cast<Eigen::Index>(dim));
  return out;
}

EmbeddingMatrix LoadPrecomputedEmbeddings(const std::string& path,
                                          size_t expected_rows) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open embeddings file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ParsePrecomputedEmbeddings(ss.str(), expected_rows);
}

std::string EmbeddingsToCsv(const Matrix& data) {
  std::string out;
  for (Eigen::Index j = 0; j < data.cols(); ++j) {
    if (j) out += ',';
    out += "e" + std::to_string(j);
  }
  out += '\n';
  for (Eigen::Index i = 0; i < data.rows(); ++i) {
    for (Eigen::Index j = 0; j < data.cols(); ++j) {
      if (j) out += ',';
      out += FormatDouble(data(i, j));
    }
    out += '\n';
  }
  return out;
}

uint64_t HashToken(std::string_view token, uint64_t seed) {
  uint64_t h = kFnvOffset ^ seed;
  for (unsigned char c : token) {
    h ^= c;
    h *= kFnvPrime;
  }
  return h;
}

std::vector<std::string> Tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string cur;
  for (unsigned char c : text) {
    if (std::isalnum(c)) {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else if (!cur.empty()) {
      tokens.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) tokens.push_back(std::move(cur));
  return tokens;
}

EmbeddingMatrix EmbedHashing(const std::vector<std::string>& texts, int dim,
                             uint64_t seed) {
  if (dim < 2) throw DataError("hashing embedding dim must be >= 2");
  EmbeddingMatrix out;
  out.source = EmbeddingSource::kHashing;
  out.data = Matrix::Zero(static_cast<Eigen::Index>(texts.size()), dim);
  for (size_t i = 0; i < texts.size(); ++i) {
    auto row = out.data.row(static_cast<Eigen::Index>(i));
    for (const auto& tok : Tokenize(texts[i])) {
      const uint64_t h = HashToken(tok, seed);
      const auto bucket = static_cast<Eigen::Index>(h % static_cast<uint64_t>(dim));
      row(bucket) += (h >> 63) ? -1.0 : 1.0;
    }
    const double norm = row.norm();
    if (norm > 0) row /= norm;
  }
  return out;
}

EmbeddingMatrix EmbedDatasetHashing(const Dataset& ds, int dim, uint64_t seed) {
  std::vector<std::string> texts;
  texts.reserve(ds.rows());
  for (size_t r = 0; r < ds.rows(); ++r) texts.push_back(ConcatTextFields(ds, r));
  return EmbedHashing(texts, dim, seed);
}

}  // namespace stagefuse
