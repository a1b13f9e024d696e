// Copyright 2026 The idtrack Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef IDTRACK_ASSIGNMENT_HPP_
#define IDTRACK_ASSIGNMENT_HPP_

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include "idtrack/affinity.hpp"

namespace idtrack {

struct Assignment {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;  // sorted by row
  std::vector<std::size_t> unassigned_rows;
  std::vector<std::size_t> unassigned_cols;

  // Sum of the selected entries, accumulated in row order.
  double total(const AffinityMatrix& m) const {
    double s = 0.0;
    for (const auto& [r, c] : pairs) s += m(r, c);
    return s;
  }
};

namespace detail {

// Kuhn-Munkres with row/column potentials on a square cost matrix
// (row-major, n x n). Returns the column assigned to each row.
inline std::vector<std::size_t> min_cost_square(const std::vector<double>& cost, std::size_t n) {
  constexpr double kInf = std::numeric_limits<double>::infinity();
  // 1-based internals; index 0 is the virtual source column.
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
  std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
  std::vector<char> used(n + 1);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::fill(minv.begin(), minv.end(), kInf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = p[j0];
      double delta = kInf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost[(i0 - 1) * n + (j - 1)] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<std::size_t> row_to_col(n);
  for (std::size_t j = 1; j <= n; ++j) row_to_col[p[j] - 1] = j - 1;
  return row_to_col;
}

}  // namespace detail

// Maximum-weight bipartite matching. Rectangular inputs are padded to a
// square with a value below every real entry, so exactly min(rows, cols)
// real pairs are produced; pairs scoring below `min_affinity` are then
// dropped and their endpoints reported unassigned.
inline Assignment solve_max(const AffinityMatrix& m, double min_affinity = 0.2) {
  Assignment out;
  if (m.empty()) {
    for (std::size_t r = 0; r < m.rows(); ++r) out.unassigned_rows.push_back(r);
    for (std::size_t c = 0; c < m.cols(); ++c) out.unassigned_cols.push_back(c);
    return out;
  }
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (double x : m.values()) {
    if (!std::isfinite(x)) throw Error("solve_max: non-finite matrix entry");
    lo = std::min(lo, x);
    hi = std::max(hi, x);
  }
  const std::size_t n = std::max(m.rows(), m.cols());
  // Cost = hi - value keeps every real cost >= 0; padding costs more than any.
  const double pad_cost = (hi - lo) + 1.0;
  std::vector<double> cost(n * n, pad_cost);
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t c = 0; c < m.cols(); ++c) cost[r * n + c] = hi - m(r, c);
  }
  const std::vector<std::size_t> row_to_col = detail::min_cost_square(cost, n);

  std::vector<char> row_done(m.rows(), 0), col_done(m.cols(), 0);
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const std::size_t c = row_to_col[r];
    if (c >= m.cols()) continue;
    if (m(r, c) < min_affinity) continue;
    out.pairs.emplace_back(r, c);
    row_done[r] = 1;
    col_done[c] = 1;
  }
  for (std::size_t r = 0; r < m.rows(); ++r) {
    if (!row_done[r]) out.unassigned_rows.push_back(r);
  }
  for (std::size_t c = 0; c < m.cols(); ++c) {
    if (!col_done[c]) out.unassigned_cols.push_back(c);
  }
  return out;
}

inline constexpr std::size_t kBruteForceMaxDim = 9;

namespace detail {

inline void brute_force_rec(const AffinityMatrix& m, std::size_t row, std::size_t skips_left,
                            std::vector<char>& col_used, double acc, double& best) {
  if (row == m.rows()) {
    best = std::max(best, acc);
    return;
  }
  for (std::size_t c = 0; c < m.cols(); ++c) {
    if (col_used[c]) continue;
    col_used[c] = 1;
    brute_force_rec(m, row + 1, skips_left, col_used, acc + m(row, c), best);
    col_used[c] = 0;
  }
  if (skips_left > 0) brute_force_rec(m, row + 1, skips_left - 1, col_used, acc, best);
}

}  // namespace detail

// Exact optimum over all matchings of size min(rows, cols), by enumeration.
// Entries are summed in row order, matching Assignment::total.
inline double brute_force_max(const AffinityMatrix& m) {
  if (std::min(m.rows(), m.cols()) > kBruteForceMaxDim) {
    throw Error("brute_force_max: matrix too large to enumerate");
  }
  if (m.empty()) return 0.0;
  const std::size_t skips = m.rows() > m.cols() ? m.rows() - m.cols() : 0;
  std::vector<char> col_used(m.cols(), 0);
  double best = -std::numeric_limits<double>::infinity();
  detail::brute_force_rec(m, 0, skips, col_used, 0.0, best);
  return best;
}

}  // namespace idtrack

#endif  // IDTRACK_ASSIGNMENT_HPP_
