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

#ifndef STAGEFUSE_COMMON_H_
#define STAGEFUSE_COMMON_H_

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace stagefuse {

// Row-major so that a dataset row is contiguous.
using Matrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using Labels = std::vector<int>;

// Number of AJCC stage classes.
inline constexpr int kNumStages = 4;

// Input data or a caller contract was violated. Maps to CLI exit code 2.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An internal invariant failed. Maps to CLI exit code 3.
class InvariantError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Throws InvariantError with `what` when `cond` is false.
inline void CheckInvariant(bool cond, const std::string& what) {
  if (!cond) throw InvariantError(what);
}

// Selects rows of `m` in the given order.
Matrix SelectRows(const Matrix& m, const std::vector<size_t>& rows);

// Selects entries of `y` in the given order.
Labels SelectLabels(const Labels& y, const std::vector<size_t>& rows);

// Formats a double with the shortest representation that round-trips.
std::string FormatDouble(double v);

// Formats with a fixed number of decimals, e.g. FormatFixed(0.98567, 2) ==
// "0.99".
std::string FormatFixed(double v, int decimals);

}  // namespace stagefuse

#endif  // STAGEFUSE_COMMON_H_
