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

#include <random>

#include "hoikit/matching.hpp"
#include "oracles.hpp"

namespace hoikit {
namespace {

std::vector<std::vector<double>> random_costs(std::mt19937_64& rng, int r, int c, bool ties) {
  std::uniform_real_distribution<double> u(0.0, 10.0);
  std::uniform_int_distribution<int> small(0, 3);
  std::vector<std::vector<double>> m(r, std::vector<double>(c));
  for (auto& row : m)
    for (auto& x : row) x = ties ? small(rng) : u(rng);
  return m;
}

TEST(Hungarian, Fixtures) {
  auto one = hungarian(CostMatrix::from_rows({{0.5}}));
  ASSERT_EQ(one.pairs.size(), 1u);
  EXPECT_EQ(one.pairs[0], std::make_pair(0, 0));
  EXPECT_DOUBLE_EQ(one.total_cost, 0.5);

  auto two = hungarian(CostMatrix::from_rows({{1, 2}, {2, 1}}));
  EXPECT_DOUBLE_EQ(two.total_cost, 2.0);
  EXPECT_EQ(two.pairs, (std::vector<std::pair<int, int>>{{0, 0}, {1, 1}}));

  auto three = hungarian(CostMatrix::from_rows({{4, 1, 3}, {2, 0, 5}, {3, 2, 2}}));
  EXPECT_DOUBLE_EQ(three.total_cost, 5.0);
  EXPECT_EQ(three.pairs, (std::vector<std::pair<int, int>>{{0, 1}, {1, 0}, {2, 2}}));
}

TEST(Hungarian, EmptyAndRejects) {
  auto none = hungarian(CostMatrix(2, 0));
  EXPECT_TRUE(none.pairs.empty());
  EXPECT_EQ(none.unmatched_predictions, (std::vector<int>{0, 1}));
  EXPECT_TRUE(hungarian(CostMatrix(0, 3)).pairs.empty());
  CostMatrix bad(1, 1);
  bad(0, 0) = std::nan("");
  EXPECT_THROW(hungarian(bad), InvalidArgument);
  EXPECT_THROW(CostMatrix::from_rows({{1, 2}, {3}}), InvalidArgument);
}

TEST(Hungarian, MatchesBruteForce) {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> dim(1, 6);
  for (int t = 0; t < 200; ++t) {
    const int r = dim(rng), c = dim(rng);
    const auto costs = random_costs(rng, r, c, false);
    const auto res = hungarian(CostMatrix::from_rows(costs));
    EXPECT_NEAR(res.total_cost, oracle::brute_force_assignment(costs), 1e-9);
    EXPECT_EQ(static_cast<int>(res.pairs.size()), std::min(r, c));
    EXPECT_EQ(res.num_predictions(), r);
  }
}

TEST(Hungarian, TiesResolveToLexicographicallySmallest) {
  std::mt19937_64 rng(9);
  for (int t = 0; t < 60; ++t) {
    const int r = 2 + t % 4, c = 2 + (t / 4) % 3;
    const auto costs = random_costs(rng, r, c, true);
    const auto res = hungarian(CostMatrix::from_rows(costs));
    const auto all = oracle::optimal_pair_lists(costs);
    ASSERT_FALSE(all.empty());
    EXPECT_EQ(res.pairs, all.front());
    // Same input, same output.
    EXPECT_EQ(hungarian(CostMatrix::from_rows(costs)).pairs, res.pairs);
  }
}

TEST(Hungarian, InvariantUnderRowShift) {
  std::mt19937_64 rng(21);
  for (int t = 0; t < 50; ++t) {
    auto costs = random_costs(rng, 4, 4, false);
    const auto base = hungarian(CostMatrix::from_rows(costs));
    for (auto& x : costs[1]) x += 3.0;
    const auto shifted = hungarian(CostMatrix::from_rows(costs));
    EXPECT_EQ(base.pairs, shifted.pairs);
    EXPECT_NEAR(shifted.total_cost, base.total_cost + 3.0, 1e-9);
  }
}

QueryPrediction perfect_query(const HOITriplet& gt, int k, int v) {
  QueryPrediction p;
  p.human_box = gt.human_box;
  p.object_box = gt.object_box;
  p.object_probs.assign(k + 1, 0.0);
  p.object_probs[gt.object_id] = 1.0;
  p.verb_probs.assign(v, 0.0);
  p.verb_probs[gt.verb_id] = 1.0;
  return p;
}

TEST(MatchCost, Fixtures) {
  const HOITriplet gt{BBox::from_corners(0, 0, .1, .1), BBox::from_corners(0, 0, .1, .1), 1, 2, 1};
  auto p = perfect_query(gt, 3, 4);
  EXPECT_NEAR(hoi_match_cost(p, gt), 0.0, 1e-15);

  p.object_box = BBox::from_corners(.2, .2, .3, .3);
  const double l1 = 0.2 + 0.2;  // both centers move by 0.2
  EXPECT_NEAR(hoi_match_cost(p, gt), 2.5 * l1 + (1 + 7.0 / 9.0), 1e-12);

  auto u = perfect_query(gt, 3, 4);
  u.object_probs.assign(4, 0.0);
  for (int i = 0; i < 3; ++i) u.object_probs[i] = 1.0 / 3;
  u.verb_probs.assign(4, 1.0 / 3);
  EXPECT_NEAR(hoi_match_cost(u, gt), 2.0 * (1 - 1.0 / 3), 1e-12);

  HOITriplet oob = gt;
  oob.object_id = 3;
  EXPECT_THROW(hoi_match_cost(p, oob), InvalidArgument);
}

TEST(MatchPredictions, SmallCases) {
  const HOITriplet gt{BBox{.3, .3, .2, .2}, BBox{.6, .6, .2, .2}, 0, 0, 1};
  std::vector<QueryPrediction> preds{perfect_query(gt, 2, 2), perfect_query(gt, 2, 2)};
  const auto none = match_predictions(preds, std::vector<HOITriplet>{});
  EXPECT_TRUE(none.pairs.empty());
  EXPECT_EQ(none.unmatched_predictions.size(), 2u);

  std::vector<QueryPrediction> one{perfect_query(gt, 2, 2)};
  const auto m = match_predictions(one, std::vector<HOITriplet>{gt});
  ASSERT_EQ(m.pairs.size(), 1u);
  EXPECT_NEAR(m.total_cost, 0.0, 1e-15);
}

TEST(MatchPredictions, FourByTwoAgainstExhaustiveSearch) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.1, 0.9), s(0.05, 0.2), pr(0.0, 1.0);
  for (int t = 0; t < 30; ++t) {
    std::vector<QueryPrediction> preds(4);
    for (auto& p : preds) {
      p.human_box = {u(rng), u(rng), s(rng), s(rng)};
      p.object_box = {u(rng), u(rng), s(rng), s(rng)};
      p.object_probs = {pr(rng), pr(rng), pr(rng)};
      p.verb_probs = {pr(rng), pr(rng)};
    }
    std::vector<HOITriplet> gts(2);
    for (int g = 0; g < 2; ++g)
      gts[g] = {BBox{u(rng), u(rng), s(rng), s(rng)}, BBox{u(rng), u(rng), s(rng), s(rng)}, g, 1 - g, 1};
    std::vector<std::vector<double>> costs(4, std::vector<double>(2));
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 2; ++j) costs[i][j] = hoi_match_cost(preds[i], gts[j]);
    const auto res = match_predictions(preds, gts);
    EXPECT_NEAR(res.total_cost, oracle::brute_force_assignment(costs), 1e-12);
    EXPECT_EQ(res.unmatched_predictions.size(), 2u);
  }
}

}  // namespace
}  // namespace hoikit
