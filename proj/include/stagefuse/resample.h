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

#ifndef STAGEFUSE_RESAMPLE_H_
#define STAGEFUSE_RESAMPLE_H_

#include <cstdint>
#include <vector>

#include "stagefuse/common.h"

namespace stagefuse {

struct SmoteConfig {
  int k_neighbors = 5;
  uint64_t seed = 0;
};

struct SmoteResult {
  Matrix x;
  Labels y;
  // Number of leading rows copied verbatim from the input.
  size_t n_original = 0;
};

// Oversamples every class up to the majority count. Synthetic rows are
// x + u * (nn - x) for a random class member x, one of its
// min(k, n_c - 1) nearest same-class neighbours nn (exact Euclidean search,
// ties to the lower row index) and u ~ U[0, 1). A singleton class is
// duplicated. Originals come first, then synthetic rows grouped by class in
// ascending class order. Each class draws from its own derived RNG stream, so
// the output does not depend on `threads`.
SmoteResult Smote(const Matrix& x, const Labels& y, const SmoteConfig& cfg,
                  int threads = 1);

// Indices of the k nearest rows to `query` among `candidates` (excluding the
// query itself), ordered by (distance, index).
std::vector<size_t> NearestNeighbors(const Matrix& x, size_t query,
                                     const std::vector<size_t>& candidates,
                                     int k);

}  // namespace stagefuse

#endif  // STAGEFUSE_RESAMPLE_H_
