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

// mAP under the HOI pair-matching rule: a detection is a true positive when
// both its human and object boxes reach the IoU threshold against an
// unclaimed ground truth of the same category.

#include <algorithm>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "hoikit/core.hpp"

namespace hoikit {

enum class EvalSetting { kDefault, kKnownObject };

inline EvalSetting parse_eval_setting(std::string_view tag) {
  if (tag == "default") return EvalSetting::kDefault;
  if (tag == "known_object") return EvalSetting::kKnownObject;
  throw InvalidArgument("unknown eval setting: " + std::string(tag));
}

// How a detection's object box is treated against a ground truth without an
// object (V-COCO body motions, scenario 1).
enum class NoObjectRule { kIgnoreBox, kRequireEmptyBox };

struct EvalConfig {
  Benchmark benchmark = Benchmark::kSynthetic;
  EvalSetting setting = EvalSetting::kDefault;
  double iou_threshold = 0.5;
  int scenario = 0;  // 1 or 2, V-COCO only
  NoObjectRule no_object_rule = NoObjectRule::kIgnoreBox;

  void validate() const {
    if (!(iou_threshold > 0 && iou_threshold < 1))
      throw InvalidArgument("iou threshold must lie in (0, 1)");
    if (benchmark == Benchmark::kVcoco) {
      if (scenario != 1 && scenario != 2)
        throw InvalidArgument("vcoco evaluation needs scenario 1 or 2");
    } else if (scenario != 0) {
      throw InvalidArgument("scenario is only defined for vcoco");
    }
  }
};

struct APResult {
  // Keyed by HOI category index (hico/synthetic) or action index (vcoco).
  // Only categories with ground truth appear.
  std::map<int, double> per_category_ap;
  std::map<int, int> gt_counts;
  double full_map = 0.0;
  std::optional<double> rare_map;
  std::optional<double> nonrare_map;
  std::optional<double> role_ap_s1;
  std::optional<double> role_ap_s2;
};

struct ImagePredictions {
  std::string image_id;
  std::vector<HOITriplet> triplets;
};

// All-point interpolated AP. n_gt == 0 leaves AP undefined.
inline std::optional<double> average_precision(const std::vector<bool>& tp_flags, int n_gt) {
  if (n_gt <= 0) return std::nullopt;
  const size_t n = tp_flags.size();
  std::vector<double> recall(n), precision(n);
  int tp = 0;
  for (size_t i = 0; i < n; ++i) {
    tp += tp_flags[i] ? 1 : 0;
    recall[i] = static_cast<double>(tp) / n_gt;
    precision[i] = static_cast<double>(tp) / static_cast<double>(i + 1);
  }
  for (size_t i = n; i-- > 1;) precision[i - 1] = std::max(precision[i - 1], precision[i]);
  double ap = 0.0, prev_recall = 0.0;
  for (size_t i = 0; i < n; ++i) {
    ap += (recall[i] - prev_recall) * precision[i];
    prev_recall = recall[i];
  }
  return ap;
}

namespace detail {

// Overlap used for claiming: min(IoU_h, IoU_o) by default.
template <class Overlap>
std::vector<bool> greedy_claim(std::span<const HOITriplet> preds,
                               std::span<const HOITriplet> gts, double threshold,
                               Overlap overlap) {
  std::vector<bool> flags(preds.size(), false);
  std::vector<char> claimed(gts.size(), 0);
  for (size_t i = 0; i < preds.size(); ++i) {
    int best = -1;
    double best_overlap = -1.0;
    for (size_t g = 0; g < gts.size(); ++g) {
      if (claimed[g]) continue;
      const double o = overlap(preds[i], gts[g]);
      if (o >= threshold && o > best_overlap) {
        best = static_cast<int>(g);
        best_overlap = o;
      }
    }
    if (best >= 0) {
      claimed[best] = 1;
      flags[i] = true;
    }
  }
  return flags;
}

inline double pair_overlap(const HOITriplet& p, const HOITriplet& g) {
  return std::min(box_iou(p.human_box, g.human_box), box_iou(p.object_box, g.object_box));
}

struct PooledDetection {
  double score;
  size_t image;
  size_t index;
};

// Sorts by score descending; equal scores keep input order.
inline void sort_pooled(std::vector<PooledDetection>& pool) {
  std::stable_sort(pool.begin(), pool.end(),
                   [](const PooledDetection& a, const PooledDetection& b) {
                     return a.score > b.score;
                   });
}

inline std::unordered_map<std::string, size_t> image_index(
    std::span<const ImageAnnotation> annotations) {
  std::unordered_map<std::string, size_t> idx;
  for (size_t i = 0; i < annotations.size(); ++i) idx.emplace(annotations[i].image_id, i);
  return idx;
}

// Groups predictions by annotation index; unknown image ids are an error.
inline std::vector<std::vector<HOITriplet>> align_predictions(
    std::span<const ImagePredictions> preds, std::span<const ImageAnnotation> annotations) {
  const auto idx = image_index(annotations);
  std::vector<std::vector<HOITriplet>> aligned(annotations.size());
  for (const auto& ip : preds) {
    const auto it = idx.find(ip.image_id);
    if (it == idx.end())
      throw InvalidArgument("prediction for unknown image: " + ip.image_id);
    aligned[it->second].insert(aligned[it->second].end(), ip.triplets.begin(),
                               ip.triplets.end());
  }
  return aligned;
}

// Pools per-image detections of one category in score order and scores them.
template <class Select, class Overlap>
std::optional<double> pooled_ap(const std::vector<std::vector<HOITriplet>>& preds,
                                std::span<const ImageAnnotation> annotations,
                                const std::vector<char>& image_used, Select selects,
                                Overlap overlap, double threshold, int& n_gt_out) {
  std::vector<PooledDetection> pool;
  int n_gt = 0;
  std::vector<std::vector<HOITriplet>> gts(annotations.size());
  for (size_t i = 0; i < annotations.size(); ++i) {
    if (!image_used[i]) continue;
    for (const auto& g : annotations[i].gt_triplets)
      if (selects(g)) gts[i].push_back(g);
    n_gt += static_cast<int>(gts[i].size());
    for (size_t j = 0; j < preds[i].size(); ++j)
      if (selects(preds[i][j])) pool.push_back({preds[i][j].score, i, j});
  }
  n_gt_out = n_gt;
  sort_pooled(pool);
  // Per-image greedy claim in global score order.
  std::vector<std::vector<char>> claimed(annotations.size());
  for (size_t i = 0; i < annotations.size(); ++i) claimed[i].assign(gts[i].size(), 0);
  std::vector<bool> flags;
  flags.reserve(pool.size());
  for (const auto& d : pool) {
    const HOITriplet& p = preds[d.image][d.index];
    const auto& image_gts = gts[d.image];
    int best = -1;
    double best_overlap = -1.0;
    for (size_t g = 0; g < image_gts.size(); ++g) {
      if (claimed[d.image][g]) continue;
      const double o = overlap(p, image_gts[g]);
      if (o >= threshold && o > best_overlap) {
        best = static_cast<int>(g);
        best_overlap = o;
      }
    }
    if (best >= 0) claimed[d.image][best] = 1;
    flags.push_back(best >= 0);
  }
  return average_precision(flags, n_gt);
}

inline double mean_or_zero(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace detail

// Per-image, per-category TP/FP flags. `preds` must already be in score order.
inline std::vector<bool> match_for_eval(std::span<const HOITriplet> preds,
                                        std::span<const HOITriplet> gts,
                                        double iou_threshold = 0.5) {
  return detail::greedy_claim(preds, gts, iou_threshold, detail::pair_overlap);
}

// HICO-DET style mAP over the vocabulary's (verb, object) categories.
inline APResult hico_map(std::span<const ImagePredictions> predictions,
                         std::span<const ImageAnnotation> annotations,
                         const Vocabulary& vocab,
                         EvalSetting setting = EvalSetting::kDefault,
                         double iou_threshold = 0.5) {
  if (!(iou_threshold > 0 && iou_threshold < 1))
    throw InvalidArgument("iou threshold must lie in (0, 1)");
  if (vocab.hoi_categories.empty())
    throw InvalidArgument("vocabulary defines no hoi categories");
  const auto preds = detail::align_predictions(predictions, annotations);
  for (const auto& image : preds)
    for (const auto& p : image)
      if (vocab.hoi_index(p.verb_id, p.object_id) < 0)
        throw InvalidArgument("prediction references unknown hoi category (verb " +
                              std::to_string(p.verb_id) + ", object " +
                              std::to_string(p.object_id) + ")");

  APResult result;
  std::vector<double> full, rare, nonrare;
  for (size_t c = 0; c < vocab.hoi_categories.size(); ++c) {
    const HoiCategory cat = vocab.hoi_categories[c];
    std::vector<char> used(annotations.size(), 1);
    if (setting == EvalSetting::kKnownObject) {
      for (size_t i = 0; i < annotations.size(); ++i) {
        const auto& g = annotations[i].gt_triplets;
        used[i] = std::any_of(g.begin(), g.end(), [&](const HOITriplet& t) {
          return t.object_id == cat.object;
        });
      }
    }
    int n_gt = 0;
    const auto ap = detail::pooled_ap(
        preds, annotations, used,
        [&](const HOITriplet& t) { return t.verb_id == cat.verb && t.object_id == cat.object; },
        detail::pair_overlap, iou_threshold, n_gt);
    if (!ap) continue;
    result.per_category_ap[static_cast<int>(c)] = *ap;
    result.gt_counts[static_cast<int>(c)] = n_gt;
    full.push_back(*ap);
    (cat.rare ? rare : nonrare).push_back(*ap);
  }
  result.full_map = detail::mean_or_zero(full);
  result.rare_map = detail::mean_or_zero(rare);
  result.nonrare_map = detail::mean_or_zero(nonrare);
  return result;
}

// V-COCO role AP per action. The object category is not checked; the object
// box is the role. Scenario 2 leaves out actions without an object.
inline APResult vcoco_role_ap(std::span<const ImagePredictions> predictions,
                              std::span<const ImageAnnotation> annotations,
                              const Vocabulary& vocab, int scenario,
                              NoObjectRule rule = NoObjectRule::kIgnoreBox,
                              double iou_threshold = 0.5) {
  if (vocab.benchmark != Benchmark::kVcoco)
    throw InvalidArgument("role AP needs a vcoco vocabulary");
  if (scenario != 1 && scenario != 2) throw InvalidArgument("scenario must be 1 or 2");
  if (!(iou_threshold > 0 && iou_threshold < 1))
    throw InvalidArgument("iou threshold must lie in (0, 1)");
  const auto preds = detail::align_predictions(predictions, annotations);
  const int no_object = vocab.no_object_index();
  auto overlap = [&](const HOITriplet& p, const HOITriplet& g) {
    const double h = box_iou(p.human_box, g.human_box);
    if (g.object_id != no_object) return std::min(h, box_iou(p.object_box, g.object_box));
    if (rule == NoObjectRule::kIgnoreBox) return h;
    return p.object_box.area() <= 0 ? h : 0.0;
  };

  APResult result;
  std::vector<double> aps;
  const std::vector<char> used(annotations.size(), 1);
  for (int a = 0; a < vocab.num_verbs(); ++a) {
    if (scenario == 2 && vocab.is_bodymotion(a)) continue;
    int n_gt = 0;
    const auto ap = detail::pooled_ap(
        preds, annotations, used, [&](const HOITriplet& t) { return t.verb_id == a; },
        overlap, iou_threshold, n_gt);
    if (!ap) continue;
    result.per_category_ap[a] = *ap;
    result.gt_counts[a] = n_gt;
    aps.push_back(*ap);
  }
  result.full_map = detail::mean_or_zero(aps);
  (scenario == 1 ? result.role_ap_s1 : result.role_ap_s2) = result.full_map;
  return result;
}

// Dispatches on the benchmark tag; synthetic data is scored like HICO-DET.
inline APResult evaluate(std::span<const ImagePredictions> predictions,
                         std::span<const ImageAnnotation> annotations,
                         const Vocabulary& vocab, const EvalConfig& cfg) {
  cfg.validate();
  if (cfg.benchmark == Benchmark::kVcoco)
    return vcoco_role_ap(predictions, annotations, vocab, cfg.scenario, cfg.no_object_rule,
                         cfg.iou_threshold);
  return hico_map(predictions, annotations, vocab, cfg.setting, cfg.iou_threshold);
}

}  // namespace hoikit
