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

// Renders predicted triplets as sentences for image-text matching.

#include <span>
#include <string>
#include <vector>

#include "hoikit/core.hpp"
#include "hoikit/matching.hpp"

namespace hoikit {

enum class Polarity { kPositive, kNegative };

inline std::string_view to_string(Polarity p) {
  return p == Polarity::kPositive ? "positive" : "negative";
}

struct GroundedSentence {
  std::string text;
  Polarity polarity = Polarity::kPositive;
  int source_index = 0;
  double weight = 1.0;
  friend bool operator==(const GroundedSentence&, const GroundedSentence&) = default;
};

inline constexpr std::string_view kPersonPhrase = "A person";

inline std::string ground_labels(int verb_id, int object_id, const Vocabulary& vocab,
                                 PromptVariant variant) {
  if (!vocab.is_verb(verb_id) || !vocab.is_object(object_id))
    throw InvalidArgument("cannot ground a sentinel or out-of-range label");
  const std::string& verb = vocab.verb_names[verb_id];
  const std::string& object = vocab.object_names[object_id];
  switch (variant) {
    case PromptVariant::kFull:
      return std::string(kPersonPhrase) + " " + verb + " a " + object;
    case PromptVariant::kVerb:
      return verb;
    case PromptVariant::kObject:
      return std::string(kPersonPhrase) + " " + object;
  }
  return {};
}

inline std::string ground_triplet(const HOITriplet& t, const Vocabulary& vocab,
                                  PromptVariant variant = PromptVariant::kFull) {
  return ground_labels(t.verb_id, t.object_id, vocab, variant);
}

struct GroundedSets {
  std::vector<GroundedSentence> positives;
  std::vector<GroundedSentence> negatives;
};

inline bool has_sentinel(const HOITriplet& t, const Vocabulary& vocab) {
  return !vocab.is_object(t.object_id) || !vocab.is_verb(t.verb_id);
}

// Splits predictions into positive (assigned to some ground truth) and negative
// sentences. Predictions labelled no-object or no-interaction are dropped.
// Sentence weights come from the prediction scores.
inline GroundedSets partition_and_ground(std::span<const HOITriplet> predictions,
                                         const MatchResult& match,
                                         const Vocabulary& vocab,
                                         PromptVariant variant = PromptVariant::kFull) {
  const int n = static_cast<int>(predictions.size());
  if (match.num_predictions() != n)
    throw InvalidArgument("match result does not cover the prediction list");
  std::vector<char> matched(n, 0);
  for (const auto& [p, g] : match.pairs) {
    if (p < 0 || p >= n) throw InvalidArgument("match refers to unknown prediction");
    matched[p] = 1;
  }
  for (int p : match.unmatched_predictions)
    if (p < 0 || p >= n) throw InvalidArgument("match refers to unknown prediction");

  GroundedSets out;
  for (int i = 0; i < n; ++i) {
    const auto& t = predictions[i];
    if (has_sentinel(t, vocab)) continue;
    GroundedSentence s{ground_triplet(t, vocab, variant),
                       matched[i] ? Polarity::kPositive : Polarity::kNegative, i,
                       std::clamp(t.score, 0.0, 1.0)};
    (matched[i] ? out.positives : out.negatives).push_back(std::move(s));
  }
  return out;
}

}  // namespace hoikit
