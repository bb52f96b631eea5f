// Copyright 2026 The hoikit Authors
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

#pragma once

// Optimal bipartite assignment of predicted triplets to ground truth.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "hoikit/core.hpp"

namespace hoikit {

// Dense row-major cost matrix; rows are predictions, columns ground truths.
class CostMatrix {
 public:
  CostMatrix() = default;
  CostMatrix(int rows, int cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(static_cast<size_t>(rows) * cols, fill) {
    if (rows < 0 || cols < 0) throw InvalidArgument("negative cost matrix size");
  }
  static CostMatrix from_rows(const std::vector<std::vector<double>>& rows) {
    const int r = static_cast<int>(rows.size());
    const int c = r ? static_cast<int>(rows[0].size()) : 0;
    CostMatrix m(r, c);
    for (int i = 0; i < r; ++i) {
      if (static_cast<int>(rows[i].size()) != c)
        throw InvalidArgument("cost matrix is not rectangular");
      for (int j = 0; j < c; ++j) m(i, j) = rows[i][j];
    }
    return m;
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  bool empty() const { return rows_ == 0 || cols_ == 0; }
  double& operator()(int r, int c) { return data_[static_cast<size_t>(r) * cols_ + c]; }
  double operator()(int r, int c) const {
    return data_[static_cast<size_t>(r) * cols_ + c];
  }
  bool all_finite() const {
    return std::all_of(data_.begin(), data_.end(),
                       [](double v) { return std::isfinite(v); });
  }

 private:
  int rows_ = 0, cols_ = 0;
  std::vector<double> data_;
};

struct MatchResult {
  // Sorted by prediction index.
  std::vector<std::pair<int, int>> pairs;
  std::vector<int> unmatched_predictions;
  double total_cost = 0.0;

  std::optional<int> gt_for(int pred) const {
    for (const auto& [p, g] : pairs)
      if (p == pred) return g;
    return std::nullopt;
  }
  int num_predictions() const {
    return static_cast<int>(pairs.size() + unmatched_predictions.size());
  }
};

namespace detail {

// Shortest-augmenting-path assignment with row/column potentials. Works on
// the sub-matrix picked by `rows` x `cols` and requires rows.size() <=
// cols.size(). Returns the column chosen for each row.
inline std::vector<int> assign_rows(const CostMatrix& m, std::span<const int> rows,
                                    std::span<const int> cols) {
  const int n = static_cast<int>(rows.size());
  const int k = static_cast<int>(cols.size());
  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(k + 1, 0.0);
  std::vector<int> owner(k + 1, 0), way(k + 1, 0);
  auto cost = [&](int i, int j) { return m(rows[i - 1], cols[j - 1]); };
  for (int i = 1; i <= n; ++i) {
    owner[0] = i;
    int j0 = 0;
    std::vector<double> minv(k + 1, kInf);
    std::vector<char> used(k + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = owner[j0];
      double delta = kInf;
      int j1 = 0;
      for (int j = 1; j <= k; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0, j) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= k; ++j) {
        if (used[j]) {
          u[owner[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (owner[j0] != 0);
    do {
      const int j1 = way[j0];
      owner[j0] = owner[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> col_of_row(n, -1);
  for (int j = 1; j <= k; ++j)
    if (owner[j] != 0) col_of_row[owner[j] - 1] = cols[j - 1];
  return col_of_row;
}

// Minimum total cost of an assignment of size min(|rows|, |cols|).
inline double optimal_cost(const CostMatrix& m, std::span<const int> rows,
                           std::span<const int> cols) {
  if (rows.empty() || cols.empty()) return 0.0;
  double total = 0.0;
  if (rows.size() <= cols.size()) {
    const auto assigned = assign_rows(m, rows, cols);
    for (size_t i = 0; i < rows.size(); ++i) total += m(rows[i], assigned[i]);
    return total;
  }
  CostMatrix t(m.cols(), m.rows());
  for (int r = 0; r < m.rows(); ++r)
    for (int c = 0; c < m.cols(); ++c) t(c, r) = m(r, c);
  const auto assigned = assign_rows(t, cols, rows);
  for (size_t i = 0; i < cols.size(); ++i) total += m(assigned[i], cols[i]);
  return total;
}

}  // namespace detail

// Minimum-cost injective assignment of the smaller side into the larger.
// Among equal-cost optima, returns the lexicographically smallest pair list.
inline MatchResult hungarian(const CostMatrix& cost) {
  MatchResult result;
  if (!cost.all_finite()) throw InvalidArgument("cost matrix has non-finite entries");
  const int n = cost.rows(), m = cost.cols();
  if (cost.empty()) {
    result.unmatched_predictions.resize(n);
    std::iota(result.unmatched_predictions.begin(),
              result.unmatched_predictions.end(), 0);
    return result;
  }
  std::vector<int> all_rows(n), all_cols(m);
  std::iota(all_rows.begin(), all_rows.end(), 0);
  std::iota(all_cols.begin(), all_cols.end(), 0);
  const double best = detail::optimal_cost(cost, all_rows, all_cols);
  const double tol = 1e-9 * std::max(1.0, std::abs(best));
  const int k = std::min(n, m);

  // Fix pairs one at a time in lexicographic order, keeping only choices
  // that still admit an optimal completion.
  std::vector<int> rows = all_rows, cols = all_cols;
  double fixed = 0.0;
  std::vector<int> rest_rows, rest_cols;
  for (int step = 0; step < k; ++step) {
    const int need = k - step - 1;
    bool found = false;
    for (size_t ri = 0; ri < rows.size() && !found; ++ri) {
      const int p = rows[ri];
      rest_rows.assign(rows.begin() + ri + 1, rows.end());
      if (static_cast<int>(rest_rows.size()) < need) break;
      for (size_t ci = 0; ci < cols.size(); ++ci) {
        const int g = cols[ci];
        rest_cols.clear();
        for (int c : cols)
          if (c != g) rest_cols.push_back(c);
        if (static_cast<int>(std::min(rest_rows.size(), rest_cols.size())) != need)
          continue;
        const double total =
            fixed + cost(p, g) + detail::optimal_cost(cost, rest_rows, rest_cols);
        if (total <= best + tol) {
          result.pairs.emplace_back(p, g);
          fixed += cost(p, g);
          rows = rest_rows;
          cols = rest_cols;
          found = true;
          break;
        }
      }
    }
    if (!found) throw Error("assignment refinement failed to find an optimum");
  }
  result.total_cost = fixed;
  std::vector<char> matched(n, 0);
  for (const auto& pr : result.pairs) matched[pr.first] = 1;
  for (int i = 0; i < n; ++i)
    if (!matched[i]) result.unmatched_predictions.push_back(i);
  return result;
}

struct MatchWeights {
  double object_class = 1.0;
  double verb_class = 1.0;
  double l1 = 2.5;
  double giou = 1.0;
};

// One query's decoded output in probability space.
struct QueryPrediction {
  BBox human_box;
  BBox object_box;
  std::vector<double> object_probs;  // K + 1, last entry is no-object
  std::vector<double> verb_probs;    // V, independent sigmoids
};

inline double l1_distance(const BBox& a, const BBox& b) {
  return std::abs(a.cx - b.cx) + std::abs(a.cy - b.cy) + std::abs(a.w - b.w) +
         std::abs(a.h - b.h);
}

inline double hoi_match_cost(const QueryPrediction& pred, const HOITriplet& gt,
                             const MatchWeights& w = {}) {
  if (gt.object_id < 0 || gt.verb_id < 0 ||
      gt.object_id >= static_cast<int>(pred.object_probs.size()) - 1 ||
      gt.verb_id >= static_cast<int>(pred.verb_probs.size()))
    throw InvalidArgument("ground truth label out of range for match cost");
  const double cls = w.object_class * (1.0 - pred.object_probs[gt.object_id]) +
                     w.verb_class * (1.0 - pred.verb_probs[gt.verb_id]);
  const double l1 = l1_distance(pred.human_box, gt.human_box) +
                    l1_distance(pred.object_box, gt.object_box);
  const double giou = 2.0 - box_giou(pred.human_box, gt.human_box) -
                      box_giou(pred.object_box, gt.object_box);
  return cls + w.l1 * l1 + w.giou * giou;
}

inline MatchResult match_predictions(std::span<const QueryPrediction> preds,
                                     std::span<const HOITriplet> gts,
                                     const MatchWeights& w = {}) {
  CostMatrix cost(static_cast<int>(preds.size()), static_cast<int>(gts.size()));
  for (size_t i = 0; i < preds.size(); ++i)
    for (size_t j = 0; j < gts.size(); ++j)
      cost(static_cast<int>(i), static_cast<int>(j)) = hoi_match_cost(preds[i], gts[j], w);
  return hungarian(cost);
}

}  // namespace hoikit
