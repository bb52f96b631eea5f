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

// Training objectives with analytic gradients. Every loss returns its value
// together with the gradient with respect to its differentiable inputs, so the
// detector only has to back-propagate head gradients.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <vector>

#include "hoikit/core.hpp"
#include "hoikit/detector_output.hpp"
#include "hoikit/grounding.hpp"
#include "hoikit/matching.hpp"

namespace hoikit {

struct LossWeights {
  double l1 = 2.5;
  double giou = 1.0;
  double object_class = 1.0;
  double verb_class = 1.0;

  void validate() const {
    if (!(l1 >= 0 && giou >= 0 && object_class >= 0 && verb_class >= 0))
      throw InvalidArgument("loss weights must be nonnegative");
  }
  LossWeights scaled(double s) const {
    return {l1 * s, giou * s, object_class * s, verb_class * s};
  }
};

struct Margin {
  double alpha = 1.0;
  explicit Margin(double a = 1.0) : alpha(a) {
    if (!(a >= 0) || !std::isfinite(a)) throw InvalidArgument("margin must be >= 0");
  }
};

// sum_i max(0, alpha - pos_i) + sum_j neg_j
inline double itm_contrastive_loss(std::span<const double> pos,
                                   std::span<const double> neg, Margin margin = Margin{}) {
  double loss = 0.0;
  for (double s : pos) loss += std::max(0.0, margin.alpha - s);
  for (double s : neg) loss += s;
  return loss;
}

struct WeightedItmLoss {
  double value = 0.0;
  std::vector<double> d_weights;
};

inline WeightedItmLoss weighted_itm_loss(std::span<const double> weights,
                                         std::span<const double> scores,
                                         std::span<const Polarity> polarities,
                                         Margin margin = Margin{}) {
  if (weights.size() != scores.size() || weights.size() != polarities.size())
    throw InvalidArgument("weighted itm loss: misaligned inputs");
  WeightedItmLoss out;
  out.d_weights.resize(weights.size());
  for (size_t i = 0; i < weights.size(); ++i) {
    const double term = polarities[i] == Polarity::kPositive
                            ? std::max(0.0, margin.alpha - scores[i])
                            : scores[i];
    out.value += weights[i] * term;
    out.d_weights[i] = term;
  }
  return out;
}

// w = sigmoid(verb_logits[verb]) * softmax(object_logits)[object], with its
// gradient against both logit rows.
struct SelectionWeight {
  double value = 0.0;
  Eigen::VectorXd d_object_logits;
  Eigen::VectorXd d_verb_logits;
};

inline SelectionWeight selection_weight(const Eigen::VectorXd& object_logits,
                                        const Eigen::VectorXd& verb_logits, int object,
                                        int verb) {
  const Eigen::VectorXd p = softmax(object_logits);
  const double sv = sigmoid(verb_logits[verb]);
  SelectionWeight w;
  w.value = sv * p[object];
  w.d_object_logits = -sv * p[object] * p;
  w.d_object_logits[object] += sv * p[object];
  w.d_verb_logits = Eigen::VectorXd::Zero(verb_logits.size());
  w.d_verb_logits[verb] = p[object] * sv * (1.0 - sv);
  return w;
}

struct BoxLoss {
  double value = 0.0;
  std::vector<std::array<double, 4>> d_human;   // d/d(cx, cy, w, h)
  std::vector<std::array<double, 4>> d_object;
};

// Mean absolute difference over the 8 center-size coordinates, averaged over
// pairs.
inline BoxLoss l1_box_loss(std::span<const BBox> pred_h, std::span<const BBox> pred_o,
                           std::span<const BBox> gt_h, std::span<const BBox> gt_o) {
  const size_t n = pred_h.size();
  if (pred_o.size() != n || gt_h.size() != n || gt_o.size() != n)
    throw InvalidArgument("l1 box loss: misaligned inputs");
  BoxLoss out;
  out.d_human.resize(n);
  out.d_object.resize(n);
  if (n == 0) return out;
  const double scale = 1.0 / (8.0 * static_cast<double>(n));
  auto accumulate = [&](const BBox& p, const BBox& g, std::array<double, 4>& d) {
    const auto pv = p.center_size(), gv = g.center_size();
    for (int k = 0; k < 4; ++k) {
      const double diff = pv[k] - gv[k];
      out.value += std::abs(diff) * scale;
      d[k] = (diff > 0 ? 1.0 : diff < 0 ? -1.0 : 0.0) * scale;
    }
  };
  for (size_t i = 0; i < n; ++i) {
    accumulate(pred_h[i], gt_h[i], out.d_human[i]);
    accumulate(pred_o[i], gt_o[i], out.d_object[i]);
  }
  return out;
}

// GIoU of `pred` against fixed `gt`, with its gradient against pred's
// center-size coordinates.
inline double giou_with_grad(const BBox& pred, const BBox& gt, std::array<double, 4>& grad) {
  const double x1 = pred.x1(), y1 = pred.y1(), x2 = pred.x2(), y2 = pred.y2();
  const double gx1 = gt.x1(), gy1 = gt.y1(), gx2 = gt.x2(), gy2 = gt.y2();
  const double pw = std::max(x2 - x1, 0.0), ph = std::max(y2 - y1, 0.0);
  const double area_p = pw * ph;
  const double area_g = gt.area();

  const double iw = std::min(x2, gx2) - std::max(x1, gx1);
  const double ih = std::min(y2, gy2) - std::max(y1, gy1);
  const bool overlap = iw > 0 && ih > 0;
  const double inter = overlap ? iw * ih : 0.0;
  const double uni = area_p + area_g - inter;
  const double cw = std::max(x2, gx2) - std::min(x1, gx1);
  const double ch = std::max(y2, gy2) - std::min(y1, gy1);
  const double hull = cw * ch;

  // Corner-space partials, order x1, y1, x2, y2.
  std::array<double, 4> d_area{-ph, -pw, ph, pw};
  if (x2 - x1 <= 0 || y2 - y1 <= 0) d_area = {0, 0, 0, 0};
  std::array<double, 4> d_inter{0, 0, 0, 0};
  if (overlap) {
    d_inter[0] = x1 > gx1 ? -ih : 0.0;
    d_inter[2] = x2 < gx2 ? ih : 0.0;
    d_inter[1] = y1 > gy1 ? -iw : 0.0;
    d_inter[3] = y2 < gy2 ? iw : 0.0;
  }
  std::array<double, 4> d_hull{x1 < gx1 ? -ch : 0.0, y1 < gy1 ? -cw : 0.0,
                               x2 > gx2 ? ch : 0.0, y2 > gy2 ? cw : 0.0};

  double value = 0.0;
  std::array<double, 4> dc{0, 0, 0, 0};
  if (uni > 0 && hull > 0) {
    value = inter / uni - 1.0 + uni / hull;
    for (int k = 0; k < 4; ++k) {
      const double d_uni = d_area[k] - d_inter[k];
      dc[k] = d_inter[k] / uni - inter * d_uni / (uni * uni) + d_uni / hull -
              uni * d_hull[k] / (hull * hull);
    }
  } else {
    value = box_giou(pred, gt);
  }
  // Chain to center-size: x1 = cx - w/2, x2 = cx + w/2.
  grad[0] = dc[0] + dc[2];
  grad[1] = dc[1] + dc[3];
  grad[2] = (dc[2] - dc[0]) / 2;
  grad[3] = (dc[3] - dc[1]) / 2;
  return value;
}

// Mean of (1 - GIoU) over human and object boxes of every pair.
inline BoxLoss giou_loss(std::span<const BBox> pred_h, std::span<const BBox> pred_o,
                         std::span<const BBox> gt_h, std::span<const BBox> gt_o) {
  const size_t n = pred_h.size();
  if (pred_o.size() != n || gt_h.size() != n || gt_o.size() != n)
    throw InvalidArgument("giou loss: misaligned inputs");
  BoxLoss out;
  out.d_human.resize(n);
  out.d_object.resize(n);
  if (n == 0) return out;
  const double scale = 1.0 / (2.0 * static_cast<double>(n));
  for (size_t i = 0; i < n; ++i) {
    std::array<double, 4> gh{}, go{};
    const double g1 = giou_with_grad(pred_h[i], gt_h[i], gh);
    const double g2 = giou_with_grad(pred_o[i], gt_o[i], go);
    out.value += scale * ((1.0 - g1) + (1.0 - g2));
    for (int k = 0; k < 4; ++k) {
      out.d_human[i][k] = -scale * gh[k];
      out.d_object[i][k] = -scale * go[k];
    }
  }
  return out;
}

struct ClassLoss {
  double value = 0.0;
  Eigen::MatrixXd d_logits;
};

// Softmax cross-entropy over K + 1 classes; the last class is no-object and
// its rows are weighted by `no_object_weight`. Weighted mean over rows.
inline ClassLoss obj_cls_loss(const Eigen::MatrixXd& logits, std::span<const int> targets,
                              double no_object_weight = 0.1) {
  const int n = static_cast<int>(logits.rows());
  const int classes = static_cast<int>(logits.cols());
  if (static_cast<int>(targets.size()) != n)
    throw InvalidArgument("object loss: target count mismatch");
  ClassLoss out;
  out.d_logits = Eigen::MatrixXd::Zero(n, classes);
  double total_weight = 0.0;
  for (int i = 0; i < n; ++i) {
    if (targets[i] < 0 || targets[i] >= classes)
      throw InvalidArgument("object loss: target index out of range");
    total_weight += targets[i] == classes - 1 ? no_object_weight : 1.0;
  }
  if (n == 0 || total_weight <= 0) return out;
  for (int i = 0; i < n; ++i) {
    const double c = (targets[i] == classes - 1 ? no_object_weight : 1.0) / total_weight;
    const Eigen::VectorXd row = logits.row(i).transpose();
    const double mx = row.maxCoeff();
    const double lse = mx + std::log((row.array() - mx).exp().sum());
    out.value += c * (lse - row[targets[i]]);
    Eigen::VectorXd p = (row.array() - lse).exp();
    p[targets[i]] -= 1.0;
    out.d_logits.row(i) = c * p.transpose();
  }
  return out;
}

// Element-wise binary cross-entropy with logits, mean over all elements.
inline ClassLoss verb_cls_loss(const Eigen::MatrixXd& logits, const Eigen::MatrixXd& targets) {
  if (logits.rows() != targets.rows() || logits.cols() != targets.cols())
    throw InvalidArgument("verb loss: target shape mismatch");
  ClassLoss out;
  out.d_logits = Eigen::MatrixXd::Zero(logits.rows(), logits.cols());
  const double count = static_cast<double>(logits.size());
  if (count == 0) return out;
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    for (Eigen::Index j = 0; j < logits.cols(); ++j) {
      const double x = logits(i, j), t = targets(i, j);
      if (t < 0 || t > 1) throw InvalidArgument("verb loss: target outside [0,1]");
      out.value += (std::max(x, 0.0) - x * t + std::log1p(std::exp(-std::abs(x)))) / count;
      out.d_logits(i, j) = (sigmoid(x) - t) / count;
    }
  }
  return out;
}

struct HoiLossTerms {
  double l1 = 0.0;
  double giou = 0.0;
  double object_class = 0.0;
  double verb_class = 0.0;
  double total = 0.0;
};

// Gradients shaped like DetectorOutput.
struct HeadGradients {
  Eigen::MatrixXd human_boxes, object_boxes, object_logits, verb_logits;

  static HeadGradients zeros_like(const DetectorOutput& out) {
    return {Eigen::MatrixXd::Zero(out.human_boxes.rows(), 4),
            Eigen::MatrixXd::Zero(out.object_boxes.rows(), 4),
            Eigen::MatrixXd::Zero(out.object_logits.rows(), out.object_logits.cols()),
            Eigen::MatrixXd::Zero(out.verb_logits.rows(), out.verb_logits.cols())};
  }
  HeadGradients& operator+=(const HeadGradients& o) {
    human_boxes += o.human_boxes;
    object_boxes += o.object_boxes;
    object_logits += o.object_logits;
    verb_logits += o.verb_logits;
    return *this;
  }
};

struct HoiLoss {
  HoiLossTerms terms;
  HeadGradients grads;
};

struct ClassificationTargets {
  std::vector<int> objects;       // per query, K for no-object
  Eigen::MatrixXd verbs;          // N x V multi-hot
};

// Matched queries take the ground truth's object and every verb annotated on
// the same (human box, object box, object) pair; the rest take no-object and
// an all-zero verb row.
inline ClassificationTargets classification_targets(const MatchResult& match,
                                                    std::span<const HOITriplet> gts,
                                                    int num_queries, int num_objects,
                                                    int num_verbs) {
  ClassificationTargets t;
  t.objects.assign(num_queries, num_objects);
  t.verbs = Eigen::MatrixXd::Zero(num_queries, num_verbs);
  for (const auto& [q, g] : match.pairs) {
    const auto& gt = gts[g];
    t.objects[q] = gt.object_id;
    for (const auto& other : gts) {
      if (other.human_box == gt.human_box && other.object_box == gt.object_box &&
          other.object_id == gt.object_id)
        t.verbs(q, other.verb_id) = 1.0;
    }
  }
  return t;
}

inline HoiLoss hoi_loss(const DetectorOutput& out, std::span<const HOITriplet> gts,
                        const MatchResult& match, const LossWeights& w = {},
                        double no_object_weight = 0.1) {
  w.validate();
  HoiLoss loss;
  loss.grads = HeadGradients::zeros_like(out);
  const int k = out.num_object_classes() - 1;

  std::vector<BBox> ph, po, gh, go;
  for (const auto& [q, g] : match.pairs) {
    ph.push_back(out.human_box(q));
    po.push_back(out.object_box(q));
    gh.push_back(gts[g].human_box);
    go.push_back(gts[g].object_box);
  }
  const BoxLoss l1 = l1_box_loss(ph, po, gh, go);
  const BoxLoss giou = giou_loss(ph, po, gh, go);
  for (size_t i = 0; i < match.pairs.size(); ++i) {
    const int q = match.pairs[i].first;
    for (int c = 0; c < 4; ++c) {
      loss.grads.human_boxes(q, c) += w.l1 * l1.d_human[i][c] + w.giou * giou.d_human[i][c];
      loss.grads.object_boxes(q, c) += w.l1 * l1.d_object[i][c] + w.giou * giou.d_object[i][c];
    }
  }

  const auto targets =
      classification_targets(match, gts, out.num_queries(), k, out.num_verbs());
  const ClassLoss oc = obj_cls_loss(out.object_logits, targets.objects, no_object_weight);
  const ClassLoss ic = verb_cls_loss(out.verb_logits, targets.verbs);
  loss.grads.object_logits += w.object_class * oc.d_logits;
  loss.grads.verb_logits += w.verb_class * ic.d_logits;

  loss.terms.l1 = l1.value;
  loss.terms.giou = giou.value;
  loss.terms.object_class = oc.value;
  loss.terms.verb_class = ic.value;
  loss.terms.total = w.l1 * l1.value + w.giou * giou.value + w.object_class * oc.value +
                     w.verb_class * ic.value;
  return loss;
}

inline double total_loss(double hoi, double itm) { return hoi + itm; }

}  // namespace hoikit
