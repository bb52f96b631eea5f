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

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace hoikit {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Axis-aligned box in normalized image coordinates, stored center-size.
struct BBox {
  double cx = 0, cy = 0, w = 0, h = 0;

  static constexpr BBox from_corners(double x1, double y1, double x2,
                                     double y2) {
    return {(x1 + x2) / 2, (y1 + y2) / 2, x2 - x1, y2 - y1};
  }
  constexpr double x1() const { return cx - w / 2; }
  constexpr double y1() const { return cy - h / 2; }
  constexpr double x2() const { return cx + w / 2; }
  constexpr double y2() const { return cy + h / 2; }
  constexpr std::array<double, 4> corners() const {
    return {x1(), y1(), x2(), y2()};
  }
  constexpr std::array<double, 4> center_size() const { return {cx, cy, w, h}; }
  constexpr double area() const { return std::max(w, 0.0) * std::max(h, 0.0); }

  bool valid() const {
    return std::isfinite(cx) && std::isfinite(cy) && std::isfinite(w) &&
           std::isfinite(h) && w >= 0 && h >= 0;
  }
  bool inside_unit_square(double tol = 1e-9) const {
    return x1() >= -tol && y1() >= -tol && x2() <= 1 + tol && y2() <= 1 + tol;
  }

  friend bool operator==(const BBox&, const BBox&) = default;
};

enum class BoxForm { kCenterSize, kCorners };

inline BoxForm parse_box_form(std::string_view tag) {
  if (tag == "center-size" || tag == "cxcywh") return BoxForm::kCenterSize;
  if (tag == "corners" || tag == "xyxy") return BoxForm::kCorners;
  throw InvalidArgument("unknown box form: " + std::string(tag));
}

// Converts four raw coordinates between forms.
inline std::array<double, 4> box_convert(const std::array<double, 4>& v,
                                         BoxForm from, BoxForm to) {
  if (from == to) return v;
  if (from == BoxForm::kCenterSize) {
    return {v[0] - v[2] / 2, v[1] - v[3] / 2, v[0] + v[2] / 2,
            v[1] + v[3] / 2};
  }
  return {(v[0] + v[2]) / 2, (v[1] + v[3]) / 2, v[2] - v[0], v[3] - v[1]};
}

inline std::array<double, 4> box_convert(const std::array<double, 4>& v,
                                         std::string_view from,
                                         std::string_view to) {
  return box_convert(v, parse_box_form(from), parse_box_form(to));
}

inline double intersection_area(const BBox& a, const BBox& b) {
  const double iw = std::min(a.x2(), b.x2()) - std::max(a.x1(), b.x1());
  const double ih = std::min(a.y2(), b.y2()) - std::max(a.y1(), b.y1());
  return (iw > 0 && ih > 0) ? iw * ih : 0.0;
}

inline double box_iou(const BBox& a, const BBox& b) {
  const double inter = intersection_area(a, b);
  const double uni = a.area() + b.area() - inter;
  return uni > 0 ? inter / uni : 0.0;
}

inline double enclosing_area(const BBox& a, const BBox& b) {
  const double ew = std::max(a.x2(), b.x2()) - std::min(a.x1(), b.x1());
  const double eh = std::max(a.y2(), b.y2()) - std::min(a.y1(), b.y1());
  return std::max(ew, 0.0) * std::max(eh, 0.0);
}

// Generalized IoU. Two degenerate boxes at one point score 0 here.
inline double box_giou(const BBox& a, const BBox& b) {
  const double inter = intersection_area(a, b);
  const double uni = a.area() + b.area() - inter;
  const double hull = enclosing_area(a, b);
  const double iou = uni > 0 ? inter / uni : 0.0;
  if (hull <= 0) return iou;
  return iou - (hull - uni) / hull;
}

enum class Benchmark { kHico, kVcoco, kSynthetic };

inline std::string_view to_string(Benchmark b) {
  switch (b) {
    case Benchmark::kHico: return "hico";
    case Benchmark::kVcoco: return "vcoco";
    case Benchmark::kSynthetic: return "synthetic";
  }
  return "synthetic";
}

inline Benchmark parse_benchmark(std::string_view tag) {
  if (tag == "hico") return Benchmark::kHico;
  if (tag == "vcoco") return Benchmark::kVcoco;
  if (tag == "synthetic") return Benchmark::kSynthetic;
  throw InvalidArgument("unknown benchmark: " + std::string(tag));
}

inline constexpr int kHicoObjects = 80;
inline constexpr int kHicoVerbs = 117;
inline constexpr int kHicoHoiCategories = 600;
inline constexpr int kHicoRareCategories = 138;
inline constexpr int kVcocoActions = 29;
inline constexpr int kVcocoBodyMotions = 4;

// One (verb, object) interaction class. For V-COCO body motions the object
// is the no-object sentinel.
struct HoiCategory {
  int verb = 0;
  int object = 0;
  bool rare = false;
  friend bool operator==(const HoiCategory&, const HoiCategory&) = default;
};

// Category names plus the sentinel indices. The sentinels sit one past the
// last real class so a classifier can emit them as an extra logit.
struct Vocabulary {
  Benchmark benchmark = Benchmark::kSynthetic;
  std::vector<std::string> object_names;
  std::vector<std::string> verb_names;
  std::vector<HoiCategory> hoi_categories;
  // Verbs that never take an object (V-COCO body motions).
  std::vector<bool> verb_without_object;

  int num_objects() const { return static_cast<int>(object_names.size()); }
  int num_verbs() const { return static_cast<int>(verb_names.size()); }
  int no_object_index() const { return num_objects(); }
  int no_interaction_index() const { return num_verbs(); }

  bool is_object(int id) const { return id >= 0 && id < num_objects(); }
  bool is_verb(int id) const { return id >= 0 && id < num_verbs(); }
  bool is_bodymotion(int verb) const {
    return is_verb(verb) && verb < static_cast<int>(verb_without_object.size()) &&
           verb_without_object[verb];
  }

  std::optional<int> object_index(std::string_view name) const {
    return find(object_names, name);
  }
  std::optional<int> verb_index(std::string_view name) const {
    return find(verb_names, name);
  }

  // Index into hoi_categories, or -1.
  int hoi_index(int verb, int object) const {
    for (size_t i = 0; i < hoi_categories.size(); ++i) {
      if (hoi_categories[i].verb == verb && hoi_categories[i].object == object)
        return static_cast<int>(i);
    }
    return -1;
  }

  int num_rare() const {
    return static_cast<int>(std::count_if(
        hoi_categories.begin(), hoi_categories.end(),
        [](const HoiCategory& c) { return c.rare; }));
  }

  void validate() const {
    check_names(object_names, "object");
    check_names(verb_names, "verb");
    if (!verb_without_object.empty() &&
        static_cast<int>(verb_without_object.size()) != num_verbs())
      throw InvalidArgument("verb_without_object length mismatch");
    for (const auto& c : hoi_categories) {
      if (!is_verb(c.verb))
        throw InvalidArgument("hoi category with invalid verb index");
      const bool obj_ok = is_object(c.object) ||
                          (c.object == no_object_index() && is_bodymotion(c.verb));
      if (!obj_ok)
        throw InvalidArgument("hoi category with invalid object index");
    }
    for (size_t i = 0; i < hoi_categories.size(); ++i)
      for (size_t j = i + 1; j < hoi_categories.size(); ++j)
        if (hoi_categories[i].verb == hoi_categories[j].verb &&
            hoi_categories[i].object == hoi_categories[j].object)
          throw InvalidArgument("duplicate hoi category");
    if (benchmark == Benchmark::kHico) {
      if (num_objects() != kHicoObjects || num_verbs() != kHicoVerbs)
        throw InvalidArgument("hico vocabulary needs 80 objects and 117 verbs");
      if (static_cast<int>(hoi_categories.size()) > kHicoHoiCategories ||
          num_rare() > kHicoRareCategories)
        throw InvalidArgument("hico vocabulary exceeds 600 categories / 138 rare");
    }
    if (benchmark == Benchmark::kVcoco) {
      const auto motions = std::count(verb_without_object.begin(),
                                      verb_without_object.end(), true);
      if (num_verbs() != kVcocoActions || motions != kVcocoBodyMotions)
        throw InvalidArgument("vcoco vocabulary needs 29 actions, 4 body motions");
    }
  }

  friend bool operator==(const Vocabulary&, const Vocabulary&) = default;

  static Vocabulary coco_objects_only();
  static Vocabulary hico();
  static Vocabulary vcoco();

 private:
  static std::optional<int> find(const std::vector<std::string>& names,
                                 std::string_view name) {
    for (size_t i = 0; i < names.size(); ++i)
      if (names[i] == name) return static_cast<int>(i);
    return std::nullopt;
  }
  static void check_names(const std::vector<std::string>& names,
                          const char* what) {
    for (size_t i = 0; i < names.size(); ++i) {
      if (names[i].empty())
        throw InvalidArgument(std::string("empty ") + what + " name");
      for (size_t j = i + 1; j < names.size(); ++j)
        if (names[i] == names[j])
          throw InvalidArgument(std::string("duplicate ") + what +
                                " name: " + names[i]);
    }
  }
};

struct HOITriplet {
  BBox human_box;
  BBox object_box;
  int object_id = 0;
  int verb_id = 0;
  double score = 1.0;
  friend bool operator==(const HOITriplet&, const HOITriplet&) = default;
};

struct ImageAnnotation {
  std::string image_id;
  std::string image_ref;
  int width = 0;
  int height = 0;
  std::vector<HOITriplet> gt_triplets;
  friend bool operator==(const ImageAnnotation&, const ImageAnnotation&) = default;
};

// Ingestion-time check: boxes non-degenerate and in bounds, labels real.
inline void validate_annotation(const ImageAnnotation& ann,
                                const Vocabulary& vocab) {
  auto where = [&](size_t i) {
    return "image '" + ann.image_id + "' triplet " + std::to_string(i) + ": ";
  };
  for (size_t i = 0; i < ann.gt_triplets.size(); ++i) {
    const auto& t = ann.gt_triplets[i];
    if (!vocab.is_verb(t.verb_id))
      throw InvalidArgument(where(i) + "verb label out of range");
    // V-COCO ground truth may lack an object role.
    const bool motion =
        vocab.is_bodymotion(t.verb_id) || vocab.benchmark == Benchmark::kVcoco;
    if (!vocab.is_object(t.object_id) &&
        !(motion && t.object_id == vocab.no_object_index()))
      throw InvalidArgument(where(i) + "object label out of range");
    if (!t.human_box.valid() || t.human_box.area() <= 0 ||
        !t.human_box.inside_unit_square())
      throw InvalidArgument(where(i) + "human box degenerate or out of bounds");
    if (t.object_id != vocab.no_object_index() &&
        (!t.object_box.valid() || t.object_box.area() <= 0 ||
         !t.object_box.inside_unit_square()))
      throw InvalidArgument(where(i) + "object box degenerate or out of bounds");
  }
}

enum class PromptVariant { kFull, kVerb, kObject };

inline std::string_view to_string(PromptVariant v) {
  switch (v) {
    case PromptVariant::kFull: return "full";
    case PromptVariant::kVerb: return "verb";
    case PromptVariant::kObject: return "object";
  }
  return "full";
}

inline PromptVariant parse_prompt_variant(std::string_view tag) {
  if (tag == "full") return PromptVariant::kFull;
  if (tag == "verb") return PromptVariant::kVerb;
  if (tag == "object") return PromptVariant::kObject;
  throw InvalidArgument("unknown prompt variant: " + std::string(tag));
}

}  // namespace hoikit

#include "hoikit/presets.hpp"
