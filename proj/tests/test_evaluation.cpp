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

#include "evalcheck.hpp"
#include "fixtures.hpp"
#include "hoikit/evaluation.hpp"
#include "oracles.hpp"

namespace hoikit {
namespace {

using fixtures::triplet;

TEST(AveragePrecision, HandComputed) {
  EXPECT_DOUBLE_EQ(*average_precision({true}, 1), 1.0);
  EXPECT_DOUBLE_EQ(*average_precision({false, true}, 1), 0.5);
  EXPECT_NEAR(*average_precision({true, false, true}, 2), 5.0 / 6.0, 1e-15);
  EXPECT_FALSE(average_precision({true}, 0).has_value());
  EXPECT_EQ(*average_precision({}, 3), 0.0);
  EXPECT_NEAR(*oracle::naive_ap({true, false, true}, 2), 5.0 / 6.0, 1e-15);
}

TEST(MatchForEval, Claims) {
  const auto g = triplet(.3, .3, .6, .6, 0, 0);
  EXPECT_EQ(match_for_eval(std::vector<HOITriplet>{g}, std::vector<HOITriplet>{g}),
            std::vector<bool>{true});
  auto near = g;
  near.human_box.cx += 0.01;
  EXPECT_EQ(match_for_eval(std::vector<HOITriplet>{g, near}, std::vector<HOITriplet>{g}),
            (std::vector<bool>{true, false}));
  // Human box shifted so that IoU = 0.4 exactly fails.
  auto weak = g;
  weak.human_box = BBox::from_corners(0.2, 0.2, 0.4, 0.4);
  auto gt = g;
  gt.human_box = BBox::from_corners(0.2, 0.2, 0.4 + 0.2 * 1.5, 0.4);
  EXPECT_NEAR(box_iou(weak.human_box, gt.human_box), 0.4, 1e-12);
  EXPECT_EQ(match_for_eval(std::vector<HOITriplet>{weak}, std::vector<HOITriplet>{gt}),
            std::vector<bool>{false});
  // Exactly 0.5 (dyadic corners, so no rounding) counts.
  auto edge = g, edge_gt = g;
  edge.human_box = BBox::from_corners(0.25, 0.25, 0.5, 0.5);
  edge_gt.human_box = BBox::from_corners(0.25, 0.25, 0.75, 0.5);
  ASSERT_EQ(box_iou(edge.human_box, edge_gt.human_box), 0.5);
  EXPECT_EQ(match_for_eval(std::vector<HOITriplet>{edge}, std::vector<HOITriplet>{edge_gt}),
            std::vector<bool>{true});
}

TEST(MatchForEval, PrefersBestOverlapThenLowerIndex) {
  const auto a = triplet(.3, .3, .6, .6, 0, 0);
  auto b = a, pred = a, other = a;
  b.human_box.cx = 0.36;
  pred.human_box.cx = 0.355;  // clears 0.5 against both, best against b
  other.human_box.cx = 0.25;  // clears 0.5 against a only
  EXPECT_GE(box_iou(pred.human_box, a.human_box), 0.5);
  EXPECT_LT(box_iou(other.human_box, b.human_box), 0.5);
  EXPECT_EQ(match_for_eval(std::vector<HOITriplet>{pred, other}, std::vector<HOITriplet>{a, b}),
            (std::vector<bool>{true, true}));
  // Identical gts: the first is claimed first.
  EXPECT_EQ(match_for_eval(std::vector<HOITriplet>{a}, std::vector<HOITriplet>{a, a}),
            std::vector<bool>{true});
}

ImageAnnotation image(const std::string& id, std::vector<HOITriplet> gts) {
  return {id, "", 100, 100, std::move(gts)};
}

TEST(HicoMap, PerfectAndEmpty) {
  const auto v = fixtures::small_vocab();
  std::vector<ImageAnnotation> anns{image("a", {triplet(.3, .3, .6, .6, 0, 0)}),
                                    image("b", {triplet(.3, .3, .6, .6, 1, 1)}),
                                    image("c", {triplet(.4, .4, .6, .6, 1, 2), triplet(.2, .2, .7, .7, 0, 2)})};
  std::vector<ImagePredictions> perfect;
  for (const auto& a : anns) perfect.push_back({a.image_id, a.gt_triplets});
  const auto p = hico_map(perfect, anns, v);
  EXPECT_DOUBLE_EQ(p.full_map, 1.0);
  EXPECT_DOUBLE_EQ(*p.rare_map, 1.0);
  EXPECT_EQ(p.per_category_ap.size(), 4u);
  EXPECT_EQ(p.gt_counts.at(v.hoi_index(1, 1)), 1);
  EXPECT_DOUBLE_EQ(hico_map(std::vector<ImagePredictions>{}, anns, v).full_map, 0.0);
  EXPECT_THROW(hico_map(perfect, anns, v, EvalSetting::kDefault, 1.0), InvalidArgument);
}

TEST(HicoMap, InputOrderDecidesEqualScores) {
  const auto v = fixtures::small_vocab();
  const auto g = triplet(.3, .3, .6, .6, 0, 0, 0.5);
  std::vector<ImageAnnotation> anns{image("a", {g}), image("b", {g})};
  auto miss = triplet(.8, .8, .2, .2, 0, 0, 0.5);
  // Equal scores: image a's miss precedes image b's hit.
  std::vector<ImagePredictions> p{{"a", {miss}}, {"b", {g}}};
  EXPECT_DOUBLE_EQ(hico_map(p, anns, v).full_map, 0.25);
  std::vector<ImagePredictions> q{{"a", {g}}, {"b", {miss}}};
  EXPECT_DOUBLE_EQ(hico_map(q, anns, v).full_map, 0.5);
}

TEST(HicoMap, KnownObjectDropsUnrelatedImages) {
  const auto v = fixtures::small_vocab();
  std::vector<ImageAnnotation> anns{image("a", {triplet(.3, .3, .6, .6, 0, 0)}),
                                    image("b", {triplet(.3, .3, .6, .6, 1, 1)})};
  // A confident false positive for (hold, tennis racket) on the bike image.
  std::vector<ImagePredictions> p{{"a", {triplet(.3, .3, .6, .6, 0, 0, 0.5)}},
                                  {"b", {triplet(.3, .3, .6, .6, 0, 0, 0.9)}}};
  const int c = v.hoi_index(0, 0);
  EXPECT_DOUBLE_EQ(hico_map(p, anns, v).per_category_ap.at(c), 0.5);
  EXPECT_DOUBLE_EQ(hico_map(p, anns, v, EvalSetting::kKnownObject).per_category_ap.at(c), 1.0);
}

TEST(HicoMap, InvariantUnderImageOrderWithDistinctScores) {
  std::mt19937_64 rng(4);
  const auto v = fixtures::small_vocab();
  for (int t = 0; t < 30; ++t) {
    auto f = evalcheck::random_fixture(rng, v, {0, 1, 2}, {0, 1});
    double s = 0.999;
    for (auto& ip : f.preds)
      for (auto& p : ip.triplets) p.score = (s -= 0.005);
    const auto base = hico_map(f.preds, f.anns, v);
    std::reverse(f.anns.begin(), f.anns.end());
    std::reverse(f.preds.begin(), f.preds.end());
    EXPECT_NEAR(hico_map(f.preds, f.anns, v).full_map, base.full_map, 1e-12);
  }
}

TEST(HicoMap, RejectsUnknownCategory) {
  const auto v = fixtures::small_vocab();
  std::vector<ImageAnnotation> anns{image("a", {triplet(.3, .3, .6, .6, 0, 0)})};
  std::vector<ImagePredictions> p{{"a", {triplet(.3, .3, .6, .6, 2, 0)}}};
  EXPECT_THROW(hico_map(p, anns, v), InvalidArgument);
}

TEST(VcocoRoleAp, Scenarios) {
  const auto v = Vocabulary::vcoco();
  const int hold = *v.verb_index("hold obj"), stand = *v.verb_index("stand");
  HOITriplet motion{BBox{.4, .5, .2, .6}, BBox{}, v.no_object_index(), stand, 1};
  const auto held = triplet(.4, .5, .6, .5, 37, hold);
  std::vector<ImageAnnotation> anns{image("a", {motion, held})};
  auto guess = motion;
  guess.object_id = 37;
  guess.object_box = BBox{.9, .9, .1, .1};
  std::vector<ImagePredictions> p{{"a", {guess, held}}};
  const auto s1 = vcoco_role_ap(p, anns, v, 1);
  EXPECT_DOUBLE_EQ(s1.per_category_ap.at(stand), 1.0);
  EXPECT_DOUBLE_EQ(*s1.role_ap_s1, 1.0);
  const auto s2 = vcoco_role_ap(p, anns, v, 2);
  EXPECT_EQ(s2.per_category_ap.count(stand), 0u);
  EXPECT_DOUBLE_EQ(*s2.role_ap_s2, 1.0);
  EXPECT_DOUBLE_EQ(vcoco_role_ap(p, anns, v, 1, NoObjectRule::kRequireEmptyBox).per_category_ap.at(stand), 0.0);
  EXPECT_THROW(vcoco_role_ap(p, anns, v, 3), InvalidArgument);
  EXPECT_THROW(vcoco_role_ap(p, anns, fixtures::small_vocab(), 1), InvalidArgument);
  EvalConfig cfg;
  cfg.benchmark = Benchmark::kVcoco;
  EXPECT_THROW(evaluate(p, anns, v, cfg), InvalidArgument);
}

TEST(ReferenceEvaluator, RandomFixtures) {
  EXPECT_LE(evalcheck::random_fixture_sweep(100, 12), 1e-9);
}

}  // namespace
}  // namespace hoikit
