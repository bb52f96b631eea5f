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

#include <vector>

#include "hoikit/core.hpp"

namespace fixtures {

// Two objects, three verbs; every combination is a category and (ride, bike)
// is rare.
inline hoikit::Vocabulary small_vocab() {
  hoikit::Vocabulary v;
  v.object_names = {"tennis racket", "bike"};
  v.verb_names = {"hold", "ride", "eat"};
  for (int verb = 0; verb < 3; ++verb)
    for (int obj = 0; obj < 2; ++obj) v.hoi_categories.push_back({verb, obj, verb == 1 && obj == 1});
  return v;
}

inline hoikit::HOITriplet triplet(double hx, double hy, double ox, double oy, int obj, int verb,
                                  double score = 1.0, double size = 0.2) {
  return {hoikit::BBox{hx, hy, size, size}, hoikit::BBox{ox, oy, size, size}, obj, verb, score};
}

}  // namespace fixtures
