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

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <vector>

#include "hoikit/core.hpp"
#include "hoikit/matching.hpp"

namespace hoikit {

// Raw per-query head outputs: N rows each. Boxes are center-size in [0,1].
struct DetectorOutput {
  Eigen::MatrixXd human_boxes;    // N x 4
  Eigen::MatrixXd object_boxes;   // N x 4
  Eigen::MatrixXd object_logits;  // N x (K + 1)
  Eigen::MatrixXd verb_logits;    // N x V

  int num_queries() const { return static_cast<int>(human_boxes.rows()); }
  int num_object_classes() const { return static_cast<int>(object_logits.cols()); }
  int num_verbs() const { return static_cast<int>(verb_logits.cols()); }

  BBox human_box(int q) const { return row_box(human_boxes, q); }
  BBox object_box(int q) const { return row_box(object_boxes, q); }

  static BBox row_box(const Eigen::MatrixXd& m, int q) {
    return {m(q, 0), m(q, 1), m(q, 2), m(q, 3)};
  }
};

inline Eigen::VectorXd softmax(const Eigen::VectorXd& logits) {
  const double mx = logits.maxCoeff();
  Eigen::VectorXd e = (logits.array() - mx).exp();
  return e / e.sum();
}

inline double sigmoid(double x) {
  return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

inline QueryPrediction query_prediction(const DetectorOutput& out, int q) {
  QueryPrediction p;
  p.human_box = out.human_box(q);
  p.object_box = out.object_box(q);
  const Eigen::VectorXd probs = softmax(out.object_logits.row(q).transpose());
  p.object_probs.assign(probs.data(), probs.data() + probs.size());
  p.verb_probs.resize(out.num_verbs());
  for (int v = 0; v < out.num_verbs(); ++v) p.verb_probs[v] = sigmoid(out.verb_logits(q, v));
  return p;
}

inline std::vector<QueryPrediction> query_predictions(const DetectorOutput& out) {
  std::vector<QueryPrediction> preds;
  preds.reserve(out.num_queries());
  for (int q = 0; q < out.num_queries(); ++q) preds.push_back(query_prediction(out, q));
  return preds;
}

// Per-query triplets as the classifier sees them: argmax object over K + 1
// (may be the no-object index) and argmax verb, replaced by the
// no-interaction index when its probability is below `verb_threshold`.
// Scores are p_obj * p_verb of the chosen labels.
inline std::vector<HOITriplet> argmax_triplets(const DetectorOutput& out,
                                               double verb_threshold = 0.0) {
  std::vector<HOITriplet> triplets(out.num_queries());
  for (int q = 0; q < out.num_queries(); ++q) {
    const Eigen::VectorXd probs = softmax(out.object_logits.row(q).transpose());
    int obj = 0, verb = 0;
    probs.maxCoeff(&obj);
    out.verb_logits.row(q).maxCoeff(&verb);
    const double pv = sigmoid(out.verb_logits(q, verb));
    auto& t = triplets[q];
    t.human_box = out.human_box(q);
    t.object_box = out.object_box(q);
    t.object_id = obj;
    t.verb_id = pv < verb_threshold ? out.num_verbs() : verb;
    t.score = probs[obj] * pv;
  }
  return triplets;
}

// Eval decoding: argmax object (queries on no-object dropped) with the argmax
// verb, or one triplet per verb when `expand_verbs`. Keeps scores above
// `score_threshold`, sorted by score descending.
inline std::vector<HOITriplet> decode(const DetectorOutput& out, double score_threshold,
                                      bool expand_verbs = false) {
  if (!(score_threshold >= 0.0 && score_threshold <= 1.0))
    throw InvalidArgument("score threshold must lie in [0, 1]");
  std::vector<HOITriplet> triplets;
  const int no_object = out.num_object_classes() - 1;
  for (int q = 0; q < out.num_queries(); ++q) {
    const Eigen::VectorXd probs = softmax(out.object_logits.row(q).transpose());
    int obj = 0;
    probs.maxCoeff(&obj);
    if (obj == no_object) continue;
    int best = 0;
    out.verb_logits.row(q).maxCoeff(&best);
    for (int v = 0; v < out.num_verbs(); ++v) {
      if (!expand_verbs && v != best) continue;
      const double score = probs[obj] * sigmoid(out.verb_logits(q, v));
      if (!(score > score_threshold)) continue;
      triplets.push_back({out.human_box(q), out.object_box(q), obj, v, score});
    }
  }
  std::stable_sort(triplets.begin(), triplets.end(),
                   [](const HOITriplet& a, const HOITriplet& b) { return a.score > b.score; });
  return triplets;
}

}  // namespace hoikit
