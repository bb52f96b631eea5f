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

// Reference implementations used only by tests. They share no code with the
// library beyond its plain data types.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <vector>

#include "hoikit/core.hpp"
#include "hoikit/evaluation.hpp"

namespace oracle {

// Minimum total over all injective maps of the smaller side into the larger.
inline double brute_force_assignment(const std::vector<std::vector<double>>& c) {
  const int rows = static_cast<int>(c.size());
  const int cols = rows ? static_cast<int>(c[0].size()) : 0;
  if (rows == 0 || cols == 0) return 0.0;
  const bool transpose = rows > cols;
  const int small = transpose ? cols : rows, large = transpose ? rows : cols;
  std::vector<int> perm(large);
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  std::set<std::vector<int>> seen;
  do {
    std::vector<int> prefix(perm.begin(), perm.begin() + small);
    if (!seen.insert(prefix).second) continue;
    double total = 0.0;
    for (int i = 0; i < small; ++i) total += transpose ? c[prefix[i]][i] : c[i][prefix[i]];
    best = std::min(best, total);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

// Every optimal pair list (prediction, gt) sorted by prediction index.
inline std::vector<std::vector<std::pair<int, int>>> optimal_pair_lists(
    const std::vector<std::vector<double>>& c) {
  const int rows = static_cast<int>(c.size());
  const int cols = rows ? static_cast<int>(c[0].size()) : 0;
  const double best = brute_force_assignment(c);
  std::vector<std::vector<std::pair<int, int>>> out;
  const int k = std::min(rows, cols);
  // Enumerate row subsets and column arrangements.
  std::vector<int> col_perm(cols);
  std::iota(col_perm.begin(), col_perm.end(), 0);
  std::set<std::vector<std::pair<int, int>>> seen;
  std::vector<int> rows_idx(rows);
  std::iota(rows_idx.begin(), rows_idx.end(), 0);
  std::function<void(int, std::vector<int>&)> choose = [&](int start, std::vector<int>& picked) {
    if (static_cast<int>(picked.size()) == k) {
      std::vector<int> cp = col_perm;
      std::sort(cp.begin(), cp.end());
      do {
        std::vector<std::pair<int, int>> pairs;
        double total = 0.0;
        for (int i = 0; i < k; ++i) {
          pairs.emplace_back(picked[i], cp[i]);
          total += c[picked[i]][cp[i]];
        }
        if (std::abs(total - best) <= 1e-9 && seen.insert(pairs).second) out.push_back(pairs);
      } while (std::next_permutation(cp.begin(), cp.end()));
      return;
    }
    for (int r = start; r < rows; ++r) {
      picked.push_back(r);
      choose(r + 1, picked);
      picked.pop_back();
    }
  };
  std::vector<int> picked;
  choose(0, picked);
  std::sort(out.begin(), out.end());
  return out;
}

struct Corners {
  double x1, y1, x2, y2;
};

inline Corners corners(const hoikit::BBox& b) {
  return {b.cx - b.w / 2, b.cy - b.h / 2, b.cx + b.w / 2, b.cy + b.h / 2};
}

// Rasterized estimate: uniform samples over the enclosing box.
struct MonteCarloGeometry {
  double iou;
  double giou;
};

inline MonteCarloGeometry monte_carlo(const hoikit::BBox& a, const hoikit::BBox& b, int samples,
                                      std::uint64_t seed) {
  const Corners p = corners(a), q = corners(b);
  const double hx1 = std::min(p.x1, q.x1), hy1 = std::min(p.y1, q.y1);
  const double hx2 = std::max(p.x2, q.x2), hy2 = std::max(p.y2, q.y2);
  const double hull = (hx2 - hx1) * (hy2 - hy1);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ux(hx1, hx2), uy(hy1, hy2);
  long in_a = 0, in_b = 0, in_both = 0;
  for (int i = 0; i < samples; ++i) {
    const double x = ux(rng), y = uy(rng);
    const bool ia = x >= p.x1 && x < p.x2 && y >= p.y1 && y < p.y2;
    const bool ib = x >= q.x1 && x < q.x2 && y >= q.y1 && y < q.y2;
    in_a += ia;
    in_b += ib;
    in_both += ia && ib;
  }
  const double inter = hull * in_both / samples;
  const double uni = hull * (in_a + in_b - in_both) / samples;
  const double iou = uni > 0 ? inter / uni : 0.0;
  return {iou, iou - (hull - uni) / hull};
}

inline double iou(const hoikit::BBox& a, const hoikit::BBox& b) {
  const Corners p = corners(a), q = corners(b);
  const double iw = std::max(0.0, std::min(p.x2, q.x2) - std::max(p.x1, q.x1));
  const double ih = std::max(0.0, std::min(p.y2, q.y2) - std::max(p.y1, q.y1));
  const double inter = iw * ih;
  const double uni = (p.x2 - p.x1) * (p.y2 - p.y1) + (q.x2 - q.x1) * (q.y2 - q.y1) - inter;
  return uni > 0 ? inter / uni : 0.0;
}

// Area under the interpolated PR curve, computed point by point.
inline std::optional<double> naive_ap(const std::vector<bool>& tp, int n_gt) {
  if (n_gt <= 0) return std::nullopt;
  const size_t n = tp.size();
  std::vector<double> prec(n), rec(n);
  int hits = 0;
  for (size_t i = 0; i < n; ++i) {
    hits += tp[i];
    prec[i] = static_cast<double>(hits) / (i + 1);
    rec[i] = static_cast<double>(hits) / n_gt;
  }
  double ap = 0.0, last_recall = 0.0;
  for (size_t k = 0; k < n; ++k) {
    if (rec[k] <= last_recall) continue;
    double best = 0.0;
    for (size_t j = k; j < n; ++j) best = std::max(best, prec[j]);
    ap += (rec[k] - last_recall) * best;
    last_recall = rec[k];
  }
  return ap;
}

using Overlap = std::function<double(const hoikit::HOITriplet& pred, const hoikit::HOITriplet& gt)>;
using Member = std::function<bool(const hoikit::HOITriplet&)>;

inline std::optional<double> category_ap(const std::vector<hoikit::ImagePredictions>& preds,
                                         const std::vector<hoikit::ImageAnnotation>& anns,
                                         const std::vector<bool>& image_used, const Member& member,
                                         const Overlap& overlap, double thr, int* gt_count) {
  struct Det {
    double score;
    size_t image;
    hoikit::HOITriplet t;
  };
  std::vector<Det> dets;
  int n_gt = 0;
  for (size_t i = 0; i < anns.size(); ++i) {
    if (!image_used[i]) continue;
    for (const auto& g : anns[i].gt_triplets) n_gt += member(g);
    for (const auto& ip : preds)
      if (ip.image_id == anns[i].image_id)
        for (const auto& p : ip.triplets)
          if (member(p)) dets.push_back({p.score, i, p});
  }
  if (gt_count) *gt_count = n_gt;
  std::stable_sort(dets.begin(), dets.end(),
                   [](const Det& a, const Det& b) { return a.score > b.score; });
  std::vector<std::vector<bool>> claimed(anns.size());
  for (size_t i = 0; i < anns.size(); ++i) claimed[i].assign(anns[i].gt_triplets.size(), false);
  std::vector<bool> tp;
  for (const auto& d : dets) {
    const auto& gts = anns[d.image].gt_triplets;
    int pick = -1;
    double best = -1.0;
    for (size_t g = 0; g < gts.size(); ++g) {
      if (!member(gts[g]) || claimed[d.image][g]) continue;
      const double o = overlap(d.t, gts[g]);
      if (o >= thr && o > best) {
        best = o;
        pick = static_cast<int>(g);
      }
    }
    if (pick >= 0) claimed[d.image][pick] = true;
    tp.push_back(pick >= 0);
  }
  return naive_ap(tp, n_gt);
}

struct Summary {
  std::vector<std::pair<int, double>> per_category;
  double full = 0.0, rare = 0.0, nonrare = 0.0;
};

inline double mean(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / v.size();
}

inline Summary hico(const std::vector<hoikit::ImagePredictions>& preds,
                    const std::vector<hoikit::ImageAnnotation>& anns, const hoikit::Vocabulary& v,
                    bool known_object, double thr = 0.5) {
  Summary s;
  std::vector<double> all, rare, common;
  for (size_t c = 0; c < v.hoi_categories.size(); ++c) {
    const auto cat = v.hoi_categories[c];
    std::vector<bool> used(anns.size(), true);
    if (known_object)
      for (size_t i = 0; i < anns.size(); ++i) {
        used[i] = false;
        for (const auto& g : anns[i].gt_triplets) used[i] = used[i] || g.object_id == cat.object;
      }
    const auto ap = category_ap(
        preds, anns, used,
        [&](const hoikit::HOITriplet& t) { return t.verb_id == cat.verb && t.object_id == cat.object; },
        [](const hoikit::HOITriplet& p, const hoikit::HOITriplet& g) {
          return std::min(iou(p.human_box, g.human_box), iou(p.object_box, g.object_box));
        },
        thr, nullptr);
    if (!ap) continue;
    s.per_category.emplace_back(static_cast<int>(c), *ap);
    all.push_back(*ap);
    (cat.rare ? rare : common).push_back(*ap);
  }
  s.full = mean(all);
  s.rare = mean(rare);
  s.nonrare = mean(common);
  return s;
}

inline Summary vcoco(const std::vector<hoikit::ImagePredictions>& preds,
                     const std::vector<hoikit::ImageAnnotation>& anns, const hoikit::Vocabulary& v,
                     int scenario, double thr = 0.5) {
  Summary s;
  std::vector<double> all;
  const int none = v.no_object_index();
  for (int a = 0; a < v.num_verbs(); ++a) {
    if (scenario == 2 && v.verb_without_object[a]) continue;
    const auto ap = category_ap(
        preds, anns, std::vector<bool>(anns.size(), true),
        [&](const hoikit::HOITriplet& t) { return t.verb_id == a; },
        [&](const hoikit::HOITriplet& p, const hoikit::HOITriplet& g) {
          const double h = iou(p.human_box, g.human_box);
          return g.object_id == none ? h : std::min(h, iou(p.object_box, g.object_box));
        },
        thr, nullptr);
    if (!ap) continue;
    s.per_category.emplace_back(a, *ap);
    all.push_back(*ap);
  }
  s.full = mean(all);
  return s;
}

// Central differences of f around x.
inline std::vector<double> numeric_gradient(const std::function<double(const std::vector<double>&)>& f,
                                            std::vector<double> x, double h = 1e-6) {
  std::vector<double> g(x.size());
  for (size_t i = 0; i < x.size(); ++i) {
    const double keep = x[i];
    x[i] = keep + h;
    const double up = f(x);
    x[i] = keep - h;
    const double down = f(x);
    x[i] = keep;
    g[i] = (up - down) / (2 * h);
  }
  return g;
}

inline double relative_error(double a, double b) {
  return std::abs(a - b) / std::max({1e-8, std::abs(a), std::abs(b)});
}

// ||a - b|| / max(||a||, ||b||)
inline double relative_error(const std::vector<double>& a, const std::vector<double>& b) {
  double diff = 0, na = 0, nb = 0;
  for (size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - b[i]) * (a[i] - b[i]);
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  return std::sqrt(diff) / std::max({1e-12, std::sqrt(na), std::sqrt(nb)});
}

}  // namespace oracle
