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

#ifndef STAGEFUSE_EMBED_H_
#define STAGEFUSE_EMBED_H_

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "stagefuse/datamodel.h"

namespace stagefuse {

enum class EmbeddingSource { kPrecomputed, kHashing };

// Dense row-aligned text representation. Entries are finite.
struct EmbeddingMatrix {
  Matrix data;
  EmbeddingSource source = EmbeddingSource::kHashing;

  size_t rows() const { return static_cast<size_t>(data.rows()); }
  int dim() const { return static_cast<int>(data.cols()); }
  EmbeddingMatrix Subset(const std::vector<size_t>& rows) const {
    return {SelectRows(data, rows), source};
  }
};

// Text columns of `row` joined in schema order with single spaces.
std::string ConcatTextFields(const Dataset& ds, size_t row);

// Reads the embeddings CSV (header e0..e{d-1}, one row per dataset row).
EmbeddingMatrix LoadPrecomputedEmbeddings(const std::string& path,
                                          size_t expected_rows);
EmbeddingMatrix ParsePrecomputedEmbeddings(const std::string& csv_text,
                                           size_t expected_rows);
std::string EmbeddingsToCsv(const Matrix& data);

// Seeded 64-bit FNV-1a: the state starts at the FNV offset basis xor'ed with
// the seed, then for every byte `h ^= byte; h *= 0x100000001b3`.
uint64_t HashToken(std::string_view token, uint64_t seed);

// Lowercases ASCII and splits on runs of non-alphanumeric bytes.
std::vector<std::string> Tokenize(std::string_view text);

// Signed feature hashing. Each token adds sign(h) to bucket h mod dim, with
// sign +1 when bit 63 of h is clear and -1 otherwise. Nonzero rows are then
// L2-normalised; empty text gives the zero vector.
EmbeddingMatrix EmbedHashing(const std::vector<std::string>& texts, int dim,
                             uint64_t seed);

// Concatenates each row's text fields and hashes them.
EmbeddingMatrix EmbedDatasetHashing(const Dataset& ds, int dim, uint64_t seed);

}  // namespace stagefuse

#endif  // STAGEFUSE_EMBED_H_
