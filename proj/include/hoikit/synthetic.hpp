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

// Shape-world generator: a white person glyph next to one colored shape,
// with the verb realized as a spatial relation between the two boxes.

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hoikit/dataset.hpp"
#include "hoikit/image.hpp"

namespace hoikit {

enum class Shape { kDisk, kSquare, kDiamond };
enum class Relation { kRide, kHold, kLookAt };

Shape parse_shape(std::string_view tag);
Relation parse_relation(std::string_view tag);
std::string_view to_string(Shape s);
std::string_view to_string(Relation r);

struct SyntheticObject {
  std::string name;
  Shape shape = Shape::kDisk;
  std::array<std::uint8_t, 3> color{};
};

struct SyntheticVerb {
  std::string name;
  Relation relation = Relation::kHold;
};

struct SyntheticSpec {
  int image_size = 32;
  std::vector<SyntheticObject> objects;
  std::vector<SyntheticVerb> verbs;
  // The rare (verb, object) combination and its share of training images.
  std::string rare_verb;
  std::string rare_object;
  double rare_rate = 0.04;
  int train_count = 200;
  int test_count = 50;
  std::uint64_t seed = 7;

  // ball/box/kite x ride/hold/look at, "ride kite" rare.
  static SyntheticSpec standard();
  void validate() const;
};

SyntheticSpec synthetic_spec_from_json(const std::string& text);
std::string synthetic_spec_to_json(const SyntheticSpec& spec);

// Boxes in pixel corners (x1, y1, x2, y2), exclusive upper edges.
struct PixelBox {
  int x1 = 0, y1 = 0, x2 = 0, y2 = 0;
  int w() const { return x2 - x1; }
  int h() const { return y2 - y1; }
};

// The relation test shared by renderer and annotator; nullopt when the pair
// realizes none of the three relations.
std::optional<Relation> spatial_relation(const PixelBox& person, const PixelBox& object);

struct SyntheticDataset {
  DatasetManifest manifest;
  std::map<std::string, Image> images;  // keyed by image_id
};

SyntheticDataset generate_synthetic(const SyntheticSpec& spec);

// Writes annotations.json and images/<id>.ppm under `dir`; image_ref fields
// of the returned manifest point at the written files.
DatasetManifest write_synthetic(const SyntheticDataset& data, const std::filesystem::path& dir);

}  // namespace hoikit
