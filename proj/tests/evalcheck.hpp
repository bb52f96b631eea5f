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

// Random evaluator fixtures and the library-vs-reference comparison.

#include <random>
#include <string>
#include <vector>

#include "fixtures.hpp"
#include "hoikit/evaluation.hpp"
#include "oracles.hpp"

namespace evalcheck {

using namespace hoikit;

struct Fixture {
  Vocabulary vocab;
  std::vector<ImageAnnotation> anns;
  std::vector<ImagePredictions> preds;
};

inline BBox jitter(const BBox& b, std::mt19937_64& rng, double amount) {
  std::uniform_real_distribution<double> u(-amount, amount);
  return {b.cx + u(rng), b.cy + u(rng), std::max(0.01, b.w + u(rng)), std::max(0.01, b.h + u(rng))};
}

inline BBox random_box(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> c(0.2, 0.8), s(0.1, 0.3);
  return {c(rng), c(rng), s(rng), s(rng)};
}

inline double random_score(std::mt19937_64& rng) {
  // Coarse grid so that ties happen.
  return 0.1 * static_cast<double>(1 + rng() % 9);
}

// `verbs` lists the verb ids to draw from; for V-COCO body motions the object
// is the no-object index with an empty box.
inline Fixture random_fixture(std::mt19937_64& rng, const Vocabulary& vocab,
                              const std::vector<int>& verbs, const std::vector<int>& objects) {
  Fixture f;
  f.vocab = vocab;
  const int images = 1 + static_cast<int>(rng() % 5);
  const int none = vocab.no_object_index();
  auto label = [&](int& verb, int& obj) {
    verb = verbs[rng() % verbs.size()];
    obj = vocab.is_bodymotion(verb) ? none : objects[rng() % objects.size()];
    if (vocab.benchmark != Benchmark::kVcoco && vocab.hoi_index(verb, obj) < 0) {
      const auto& c = vocab.hoi_categories[rng() % vocab.hoi_categories.size()];
      verb = c.verb;
      obj = c.object;
    }
  };
  for (int i = 0; i < images; ++i) {
    ImageAnnotation a;
    a.image_id = "img" + std::to_string(i);
    a.width = a.height = 100;
    const int n_gt = 1 + static_cast<int>(rng() % 3);
    for (int g = 0; g < n_gt; ++g) {
      HOITriplet t;
      label(t.verb_id, t.object_id);
      t.human_box = random_box(rng);
      t.object_box = t.object_id == none ? BBox{} : random_box(rng);
      a.gt_triplets.push_back(t);
    }
    ImagePredictions p;
    p.image_id = a.image_id;
    const int n_pred = static_cast<int>(rng() % 11);
    for (int k = 0; k < n_pred; ++k) {
      HOITriplet t;
      if (rng() % 3 != 0) {
        const auto& src = a.gt_triplets[rng() % a.gt_triplets.size()];
        t = src;
        t.human_box = jitter(src.human_box, rng, 0.06);
        t.object_box = src.object_id == none ? random_box(rng) : jitter(src.object_box, rng, 0.06);
        if (t.object_id == none) t.object_id = objects[rng() % objects.size()];
        if (rng() % 4 == 0) label(t.verb_id, t.object_id);
        if (t.object_id == none) t.object_id = objects[0];
      } else {
        label(t.verb_id, t.object_id);
        if (t.object_id == none) t.object_id = objects[0];
        t.human_box = random_box(rng);
        t.object_box = random_box(rng);
      }
      if (vocab.benchmark != Benchmark::kVcoco && vocab.hoi_index(t.verb_id, t.object_id) < 0) {
        t.verb_id = vocab.hoi_categories[0].verb;
        t.object_id = vocab.hoi_categories[0].object;
      }
      t.score = random_score(rng);
      p.triplets.push_back(t);
    }
    f.anns.push_back(std::move(a));
    f.preds.push_back(std::move(p));
  }
  return f;
}

inline double max_difference(const APResult& got, const oracle::Summary& want, bool with_rare) {
  double worst = 0.0;
  if (got.per_category_ap.size() != want.per_category.size()) return 1.0;
  for (const auto& [c, ap] : want.per_category) {
    const auto it = got.per_category_ap.find(c);
    if (it == got.per_category_ap.end()) return 1.0;
    worst = std::max(worst, std::abs(it->second - ap));
  }
  worst = std::max(worst, std::abs(got.full_map - want.full));
  if (with_rare) {
    worst = std::max(worst, std::abs(got.rare_map.value_or(-1) - want.rare));
    worst = std::max(worst, std::abs(got.nonrare_map.value_or(-1) - want.nonrare));
  }
  return worst;
}

inline Vocabulary hico_like_vocab() { return fixtures::small_vocab(); }

inline std::vector<int> vcoco_verbs(const Vocabulary& v) {
  std::vector<int> out;
  for (const char* n : {"hold obj", "stand", "walk", "ride instr", "look obj", "smile"})
    out.push_back(*v.verb_index(n));
  return out;
}

// Worst difference over `count` random fixtures of each kind.
inline double random_fixture_sweep(int count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  double worst = 0.0;
  const auto hv = hico_like_vocab();
  const auto vv = Vocabulary::vcoco();
  const auto verbs = vcoco_verbs(vv);
  for (int t = 0; t < count; ++t) {
    const auto h = random_fixture(rng, hv, {0, 1, 2}, {0, 1});
    for (auto setting : {EvalSetting::kDefault, EvalSetting::kKnownObject}) {
      const auto got = hico_map(h.preds, h.anns, h.vocab, setting);
      const auto want = oracle::hico(h.preds, h.anns, h.vocab, setting == EvalSetting::kKnownObject);
      worst = std::max(worst, max_difference(got, want, true));
    }
    const auto v = random_fixture(rng, vv, verbs, {37, 32, 1});
    for (int scenario : {1, 2}) {
      const auto got = vcoco_role_ap(v.preds, v.anns, v.vocab, scenario);
      worst = std::max(worst, max_difference(got, oracle::vcoco(v.preds, v.anns, v.vocab, scenario), false));
    }
  }
  return worst;
}

}  // namespace evalcheck
