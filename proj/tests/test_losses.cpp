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

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "fixtures.hpp"
#include "gradcheck.hpp"
#include "hoikit/losses.hpp"

namespace hoikit {
namespace {

TEST(ItmLoss, Fixtures) {
  EXPECT_EQ(itm_contrastive_loss(std::vector<double>{2.0}, std::vector<double>{}, Margin{1}), 0.0);
  EXPECT_DOUBLE_EQ(itm_contrastive_loss(std::vector<double>{0.3}, std::vector<double>{0.5}), 1.2);
  EXPECT_EQ(itm_contrastive_loss(std::vector<double>{}, std::vector<double>{}), 0.0);
  EXPECT_THROW(Margin{-0.5}, InvalidArgument);
}

TEST(ItmLoss, NonnegativeAndMonotone) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> s(0.0, 3.0), a(0.0, 2.0);
  for (int t = 0; t < 300; ++t) {
    std::vector<double> pos(rng() % 5), neg(rng() % 5);
    for (auto& x : pos) x = s(rng);
    for (auto& x : neg) x = s(rng);
    const Margin m(a(rng));
    const double base = itm_contrastive_loss(pos, neg, m);
    EXPECT_GE(base, 0.0);
    EXPECT_GE(itm_contrastive_loss(pos, neg, Margin{m.alpha + 0.5}), base);
    if (!pos.empty()) {
      auto up = pos;
      up[0] += 0.3;
      EXPECT_LE(itm_contrastive_loss(up, neg, m), base);
    }
    if (!neg.empty()) {
      auto up = neg;
      up[0] += 0.3;
      EXPECT_GT(itm_contrastive_loss(pos, up, m), base);
    }
  }
}

TEST(WeightedItmLoss, ReducesToPlainLoss) {
  const std::vector<double> scores{0.3, 1.7, 0.5, 0.0};
  const std::vector<Polarity> pol{Polarity::kPositive, Polarity::kPositive, Polarity::kNegative,
                                  Polarity::kNegative};
  const std::vector<double> ones(4, 1.0);
  EXPECT_DOUBLE_EQ(weighted_itm_loss(ones, scores, pol).value,
                   itm_contrastive_loss(std::vector<double>{0.3, 1.7}, std::vector<double>{0.5, 0.0}));
  EXPECT_DOUBLE_EQ(weighted_itm_loss(std::vector<double>{0.5}, std::vector<double>{0.3},
                                     std::vector<Polarity>{Polarity::kPositive})
                       .value,
                   0.35);
  EXPECT_THROW(weighted_itm_loss(ones, std::vector<double>{1.0}, pol), InvalidArgument);
}

TEST(SelectionWeight, Value) {
  Eigen::VectorXd obj(3), verb(2);
  obj << 0.0, std::log(3.0), 0.0;
  verb << 0.0, 2.0;
  const auto w = selection_weight(obj, verb, 1, 0);
  EXPECT_NEAR(w.value, 0.5 * 0.6, 1e-15);
}

TEST(BoxLosses, Fixtures) {
  const std::vector<BBox> h{BBox::from_corners(0, 0, .1, .1)};
  const std::vector<BBox> o{BBox::from_corners(0, 0, .1, .1)};
  const std::vector<BBox> far{BBox::from_corners(.2, .2, .3, .3)};
  EXPECT_EQ(l1_box_loss(h, o, h, o).value, 0.0);
  EXPECT_NEAR(giou_loss(h, o, h, o).value, 0.0, 1e-15);
  EXPECT_NEAR(giou_loss(h, far, h, o).value, 8.0 / 9.0, 1e-12);
  std::vector<BBox> nudged = h;
  nudged[0].cx += 0.1;
  EXPECT_NEAR(l1_box_loss(nudged, o, h, o).value, 0.1 / 8, 1e-15);
  EXPECT_EQ(l1_box_loss({}, {}, {}, {}).value, 0.0);
  EXPECT_EQ(giou_loss({}, {}, {}, {}).value, 0.0);
}

TEST(ClassLosses, Fixtures) {
  // One real class plus no-object, target logit ahead by 10.
  Eigen::MatrixXd gap = Eigen::MatrixXd::Zero(1, 2);
  gap(0, 0) = 10.0;
  EXPECT_LT(obj_cls_loss(gap, std::vector<int>{0}).value, 1e-4);
  EXPECT_NEAR(obj_cls_loss(Eigen::MatrixXd::Zero(1, 4), std::vector<int>{1}).value, std::log(4.0),
              1e-15);
  EXPECT_NEAR(verb_cls_loss(Eigen::MatrixXd::Zero(2, 3), Eigen::MatrixXd::Zero(2, 3)).value,
              std::log(2.0), 1e-15);
  EXPECT_THROW(obj_cls_loss(gap, std::vector<int>{2}), InvalidArgument);
}

TEST(ClassLosses, NoObjectDownWeighting) {
  // Row 0 targets a real class, row 1 the no-object class.
  Eigen::MatrixXd logits(2, 3);
  logits << 1.0, 0.0, 0.0, 0.0, 1.0, 0.0;
  const auto ce = [&](int row, int target) {
    const Eigen::VectorXd r = logits.row(row).transpose();
    return std::log(r.array().exp().sum()) - r[target];
  };
  const double want = (ce(0, 0) + 0.1 * ce(1, 2)) / 1.1;
  EXPECT_NEAR(obj_cls_loss(logits, std::vector<int>{0, 2}, 0.1).value, want, 1e-14);
}

TEST(Gradients, FiniteDifferences) {
  EXPECT_LE(gradcheck::l1_error(20), 1e-4);
  EXPECT_LE(gradcheck::giou_error(20), 1e-4);
  EXPECT_LE(gradcheck::object_ce_error(20), 1e-4);
  EXPECT_LE(gradcheck::verb_bce_error(20), 1e-4);
  EXPECT_LE(gradcheck::weighted_itm_error(20), 1e-4);
}

DetectorOutput confident_output(const std::vector<HOITriplet>& gts, int queries, int k, int v) {
  DetectorOutput out;
  out.human_boxes = Eigen::MatrixXd::Constant(queries, 4, 0.5);
  out.object_boxes = Eigen::MatrixXd::Constant(queries, 4, 0.5);
  out.object_logits = Eigen::MatrixXd::Zero(queries, k + 1);
  out.verb_logits = Eigen::MatrixXd::Constant(queries, v, -12.0);
  for (int q = 0; q < queries; ++q) out.object_logits(q, k) = 12.0;
  for (size_t g = 0; g < gts.size(); ++g) {
    const int q = static_cast<int>(g);
    out.human_boxes.row(q) << gts[g].human_box.cx, gts[g].human_box.cy, gts[g].human_box.w,
        gts[g].human_box.h;
    out.object_boxes.row(q) << gts[g].object_box.cx, gts[g].object_box.cy, gts[g].object_box.w,
        gts[g].object_box.h;
    out.object_logits.row(q).setZero();
    out.object_logits(q, gts[g].object_id) = 12.0;
    out.verb_logits(q, gts[g].verb_id) = 12.0;
  }
  return out;
}

TEST(HoiLoss, PerfectPredictionsAndWeights) {
  const std::vector<HOITriplet> gts{fixtures::triplet(.3, .3, .6, .6, 0, 1),
                                    fixtures::triplet(.7, .3, .4, .7, 1, 0)};
  const auto out = confident_output(gts, 5, 2, 3);
  const auto match = match_predictions(query_predictions(out), gts);
  const auto loss = hoi_loss(out, gts, match);
  EXPECT_LT(loss.terms.total, 1e-3);
  EXPECT_EQ(hoi_loss(out, gts, match, LossWeights{0, 0, 0, 0}).terms.total, 0.0);
  EXPECT_DOUBLE_EQ(total_loss(1.5, 0.5), 2.0);
  EXPECT_EQ(total_loss(0.73, 0.0), 0.73);
}

TEST(HoiLoss, LinearInWeights) {
  std::mt19937_64 rng(6);
  const std::vector<HOITriplet> gts{fixtures::triplet(.3, .3, .6, .6, 0, 1)};
  auto out = confident_output(gts, 4, 2, 3);
  out.object_logits += gradcheck::as_matrix(gradcheck::random_logits(rng, 12), 4, 3);
  out.human_boxes(0, 0) += 0.05;
  const auto match = match_predictions(query_predictions(out), gts);
  const auto t = hoi_loss(out, gts, match, LossWeights{1, 1, 1, 1}).terms;
  const LossWeights w{2.5, 0.5, 3.0, 0.25};
  EXPECT_NEAR(hoi_loss(out, gts, match, w).terms.total,
              2.5 * t.l1 + 0.5 * t.giou + 3.0 * t.object_class + 0.25 * t.verb_class, 1e-12);
  EXPECT_NEAR(hoi_loss(out, gts, match, w.scaled(2)).terms.total,
              2 * hoi_loss(out, gts, match, w).terms.total, 1e-12);
}

TEST(HoiLoss, SharedPairTargetsCollectVerbs) {
  const auto a = fixtures::triplet(.3, .3, .6, .6, 0, 0);
  auto b = a;
  b.verb_id = 2;
  const std::vector<HOITriplet> gts{a, b};
  MatchResult m;
  m.pairs = {{1, 0}};
  m.unmatched_predictions = {0, 2};
  const auto t = classification_targets(m, gts, 3, 2, 3);
  EXPECT_EQ(t.objects, (std::vector<int>{2, 0, 2}));
  EXPECT_EQ(t.verbs(1, 0), 1.0);
  EXPECT_EQ(t.verbs(1, 2), 1.0);
  EXPECT_EQ(t.verbs.row(0).sum(), 0.0);
}

}  // namespace
}  // namespace hoikit
