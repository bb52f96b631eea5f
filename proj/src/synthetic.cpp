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

#include "hoikit/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "json.hpp"

namespace hoikit {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

Shape parse_shape(std::string_view tag) {
  if (tag == "disk") return Shape::kDisk;
  if (tag == "square") return Shape::kSquare;
  if (tag == "diamond") return Shape::kDiamond;
  throw InvalidArgument("unknown shape: " + std::string(tag));
}

Relation parse_relation(std::string_view tag) {
  if (tag == "ride") return Relation::kRide;
  if (tag == "hold") return Relation::kHold;
  if (tag == "look_at") return Relation::kLookAt;
  throw InvalidArgument("unknown relation: " + std::string(tag));
}

std::string_view to_string(Shape s) {
  switch (s) {
    case Shape::kDisk: return "disk";
    case Shape::kSquare: return "square";
    case Shape::kDiamond: return "diamond";
  }
  return "disk";
}

std::string_view to_string(Relation r) {
  switch (r) {
    case Relation::kRide: return "ride";
    case Relation::kHold: return "hold";
    case Relation::kLookAt: return "look_at";
  }
  return "hold";
}

SyntheticSpec SyntheticSpec::standard() {
  SyntheticSpec s;
  s.objects = {{"ball", Shape::kDisk, {230, 40, 40}},
               {"box", Shape::kSquare, {40, 200, 60}},
               {"kite", Shape::kDiamond, {50, 90, 240}}};
  s.verbs = {{"ride", Relation::kRide}, {"hold", Relation::kHold}, {"look at", Relation::kLookAt}};
  s.rare_verb = "ride";
  s.rare_object = "kite";
  return s;
}

void SyntheticSpec::validate() const {
  if (objects.empty()) throw InvalidArgument("synthetic spec needs at least one object shape");
  if (verbs.empty()) throw InvalidArgument("synthetic spec needs at least one verb");
  if (image_size < 24 || image_size > 1024)
    throw InvalidArgument("synthetic image_size must be in [24, 1024]");
  if (train_count < 0 || test_count < 0) throw InvalidArgument("split counts must be >= 0");
  if (!(rare_rate >= 0.0 && rare_rate < 0.05))
    throw InvalidArgument("rare_rate must be in [0, 0.05)");
  const auto has = [](const auto& list, const std::string& name) {
    return std::any_of(list.begin(), list.end(), [&](const auto& e) { return e.name == name; });
  };
  if (!has(verbs, rare_verb)) throw InvalidArgument("rare verb not in spec: " + rare_verb);
  if (!has(objects, rare_object)) throw InvalidArgument("rare object not in spec: " + rare_object);
  if (objects.size() * verbs.size() < 2)
    throw InvalidArgument("synthetic spec needs a common combination besides the rare one");
  std::vector<std::string> names;
  for (const auto& o : objects) names.push_back(o.name);
  for (const auto& v : verbs) names.push_back("verb:" + v.name);
  std::sort(names.begin(), names.end());
  if (std::adjacent_find(names.begin(), names.end()) != names.end())
    throw InvalidArgument("duplicate object or verb name in synthetic spec");
}

SyntheticSpec synthetic_spec_from_json(const std::string& text) {
  SyntheticSpec s = SyntheticSpec::standard();
  try {
    const json j = json::parse(text);
    s.image_size = j.value("image_size", s.image_size);
    if (j.contains("objects")) {
      s.objects.clear();
      for (const auto& o : j["objects"])
        s.objects.push_back({o.at("name").get<std::string>(),
                             parse_shape(o.at("shape").get<std::string>()),
                             o.at("color").get<std::array<std::uint8_t, 3>>()});
    }
    if (j.contains("verbs")) {
      s.verbs.clear();
      for (const auto& v : j["verbs"])
        s.verbs.push_back({v.at("name").get<std::string>(),
                           parse_relation(v.at("relation").get<std::string>())});
    }
    if (j.contains("rare")) {
      const auto& r = j["rare"];
      s.rare_verb = r.value("verb", s.rare_verb);
      s.rare_object = r.value("object", s.rare_object);
      s.rare_rate = r.value("rate", s.rare_rate);
    }
    s.train_count = j.value("train", s.train_count);
    s.test_count = j.value("test", s.test_count);
    s.seed = j.value("seed", s.seed);
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("synthetic spec: ") + e.what());
  }
  s.validate();
  return s;
}

std::string synthetic_spec_to_json(const SyntheticSpec& s) {
  ordered_json j;
  j["image_size"] = s.image_size;
  j["objects"] = ordered_json::array();
  for (const auto& o : s.objects)
    j["objects"].push_back({{"name", o.name}, {"shape", to_string(o.shape)}, {"color", o.color}});
  j["verbs"] = ordered_json::array();
  for (const auto& v : s.verbs)
    j["verbs"].push_back({{"name", v.name}, {"relation", to_string(v.relation)}});
  j["rare"] = {{"verb", s.rare_verb}, {"object", s.rare_object}, {"rate", s.rare_rate}};
  j["train"] = s.train_count;
  j["test"] = s.test_count;
  j["seed"] = s.seed;
  return j.dump(1);
}

std::optional<Relation> spatial_relation(const PixelBox& p, const PixelBox& o) {
  const double pcx = 0.5 * (p.x1 + p.x2), pcy = 0.5 * (p.y1 + p.y2);
  const double ocx = 0.5 * (o.x1 + o.x2), ocy = 0.5 * (o.y1 + o.y2);
  // Person's feet inside the top half of the object, horizontally centered.
  if (p.y2 > o.y1 && p.y2 <= o.y1 + 0.5 * o.h() && std::abs(pcx - ocx) <= 0.25 * o.w())
    return Relation::kRide;
  const bool intersect = std::min(p.x2, o.x2) > std::max(p.x1, o.x1) &&
                         std::min(p.y2, o.y2) > std::max(p.y1, o.y1);
  if (intersect) return Relation::kHold;
  if (std::abs(pcy - ocy) < 0.25 * p.h()) return Relation::kLookAt;
  return std::nullopt;
}

namespace {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}
  // Uniform integer in [lo, hi].
  int range(int lo, int hi) {
    return lo + static_cast<int>(gen_() % static_cast<std::uint64_t>(hi - lo + 1));
  }
  bool coin() { return gen_() & 1u; }
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[gen_() % i]);
  }

 private:
  std::mt19937_64 gen_;
};

bool inside(const PixelBox& b, int size) {
  return b.x1 >= 0 && b.y1 >= 0 && b.x2 <= size && b.y2 <= size && b.w() > 0 && b.h() > 0;
}

struct Placement {
  PixelBox person, object;
};

Placement place(Relation rel, int size, Rng& rng) {
  const double scale = size / 32.0;
  const auto px = [&](int v) { return std::max(1, static_cast<int>(std::lround(v * scale))); };
  for (int attempt = 0; attempt < 10000; ++attempt) {
    const int pw = rng.range(px(8), px(10));
    const int ph = rng.range(px(14), px(17));
    const int s = rng.range(px(9), px(12));
    PixelBox p, o;
    if (rel == Relation::kRide) {
      o.x1 = rng.range(0, size - s);
      o.y1 = rng.range(0, size - s);
      o.x2 = o.x1 + s;
      o.y2 = o.y1 + s;
      p.x1 = o.x1 + (s - pw) / 2 + rng.range(-1, 1);
      p.x2 = p.x1 + pw;
      p.y2 = o.y1 + rng.range(1, std::max(1, s / 2));
      p.y1 = p.y2 - ph;
    } else {
      p.x1 = rng.range(0, size - pw);
      p.y1 = rng.range(0, size - ph);
      p.x2 = p.x1 + pw;
      p.y2 = p.y1 + ph;
      const bool right = rng.coin();
      const int offset = rel == Relation::kHold ? -rng.range(1, 3) : rng.range(2, 6);
      if (right) {
        o.x1 = p.x2 + offset;
        o.x2 = o.x1 + s;
      } else {
        o.x2 = p.x1 - offset;
        o.x1 = o.x2 - s;
      }
      const int centre = (p.y1 + p.y2) / 2;
      o.y1 = (rel == Relation::kHold ? p.y1 + ph / 3 : centre - s / 2) + rng.range(-1, 1);
      o.y2 = o.y1 + s;
    }
    if (inside(p, size) && inside(o, size) && spatial_relation(p, o) == rel) return {p, o};
  }
  throw InvalidArgument("synthetic spec unsatisfiable: cannot place relation " +
                        std::string(to_string(rel)) + " at this image size");
}

void paint(Image& img, int x, int y, const std::array<std::uint8_t, 3>& c) {
  if (x < 0 || y < 0 || x >= img.width || y >= img.height) return;
  auto* px = img.pixel(x, y);
  px[0] = c[0];
  px[1] = c[1];
  px[2] = c[2];
}

void draw_shape(Image& img, const PixelBox& b, Shape shape, const std::array<std::uint8_t, 3>& c) {
  const double cx = 0.5 * (b.x1 + b.x2), cy = 0.5 * (b.y1 + b.y2);
  const double hw = 0.5 * b.w(), hh = 0.5 * b.h();
  for (int y = b.y1; y < b.y2; ++y)
    for (int x = b.x1; x < b.x2; ++x) {
      const double dx = (x + 0.5 - cx) / hw, dy = (y + 0.5 - cy) / hh;
      bool in = true;
      if (shape == Shape::kDisk) in = dx * dx + dy * dy <= 1.0;
      if (shape == Shape::kDiamond) in = std::abs(dx) + std::abs(dy) <= 1.0;
      if (in) paint(img, x, y, c);
    }
}

// Head disk over a torso with an arm bar; fills its box edge to edge.
void draw_person(Image& img, const PixelBox& b) {
  const std::array<std::uint8_t, 3> white{245, 245, 245};
  const int head = std::max(2, std::min(b.w(), b.h() / 3));
  const PixelBox head_box{b.x1 + (b.w() - head) / 2, b.y1, b.x1 + (b.w() - head) / 2 + head,
                          b.y1 + head};
  draw_shape(img, head_box, Shape::kDisk, white);
  for (int y = b.y1 + head; y < b.y2; ++y) {
    const bool arms = y - (b.y1 + head) < 2;
    const int inset = arms ? 0 : std::max(1, b.w() / 4);
    for (int x = b.x1 + inset; x < b.x2 - inset; ++x) paint(img, x, y, white);
  }
}

BBox to_normalized(const PixelBox& b, int size) {
  return normalize_corners(b.x1, b.y1, b.x2, b.y2, size, size);
}

}  // namespace

SyntheticDataset generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  SyntheticDataset out;
  DatasetManifest& m = out.manifest;
  m.name = "synthetic";
  m.provenance = "synthetic";
  m.generator_seed = spec.seed;
  Vocabulary& v = m.vocabulary;
  v.benchmark = Benchmark::kSynthetic;
  for (const auto& o : spec.objects) v.object_names.push_back(o.name);
  for (const auto& vb : spec.verbs) v.verb_names.push_back(vb.name);
  v.verb_without_object.assign(spec.verbs.size(), false);
  const int rare_verb = *v.verb_index(spec.rare_verb);
  const int rare_object = *v.object_index(spec.rare_object);
  std::vector<std::pair<int, int>> common, all;
  for (int o = 0; o < v.num_objects(); ++o)
    for (int vb = 0; vb < v.num_verbs(); ++vb) {
      const bool rare = vb == rare_verb && o == rare_object;
      v.hoi_categories.push_back({vb, o, rare});
      all.push_back({vb, o});
      if (!rare) common.push_back({vb, o});
    }

  Rng rng(spec.seed);
  const int n_rare = static_cast<int>(std::floor(spec.rare_rate * spec.train_count + 1e-9));
  std::vector<std::pair<int, int>> train_plan(n_rare, {rare_verb, rare_object});
  for (int i = 0; static_cast<int>(train_plan.size()) < spec.train_count; ++i)
    train_plan.push_back(common[i % common.size()]);
  std::vector<std::pair<int, int>> test_plan;
  for (int i = 0; i < spec.test_count; ++i) test_plan.push_back(all[i % all.size()]);
  rng.shuffle(train_plan);
  rng.shuffle(test_plan);

  const int size = spec.image_size;
  const auto render = [&](const std::string& split, int index, std::pair<int, int> combo) {
    char id[32];
    std::snprintf(id, sizeof id, "%s_%04d", split.c_str(), index);
    const auto& obj = spec.objects[combo.second];
    const Placement pl = place(spec.verbs[combo.first].relation, size, rng);
    Image img(size, size);
    for (int y = 0; y < size; ++y)
      for (int x = 0; x < size; ++x) {
        const std::uint8_t g = static_cast<std::uint8_t>(34 + rng.range(0, 12));
        paint(img, x, y, {g, g, g});
      }
    draw_shape(img, pl.object, obj.shape, obj.color);
    draw_person(img, pl.person);

    ImageAnnotation ann;
    ann.image_id = id;
    ann.image_ref = "images/" + std::string(id) + ".ppm";
    ann.width = ann.height = size;
    // Labels come from the same relation test the placement satisfied.
    const auto rel = spatial_relation(pl.person, pl.object);
    for (int vb = 0; vb < v.num_verbs(); ++vb)
      if (rel && spec.verbs[vb].relation == *rel)
        ann.gt_triplets.push_back(
            {to_normalized(pl.person, size), to_normalized(pl.object, size), combo.second, vb, 1.0});
    validate_annotation(ann, v);
    out.images.emplace(ann.image_id, std::move(img));
    return ann;
  };
  for (int i = 0; i < spec.train_count; ++i) m.train.push_back(render("train", i, train_plan[i]));
  for (int i = 0; i < spec.test_count; ++i) m.test.push_back(render("test", i, test_plan[i]));
  return out;
}

DatasetManifest write_synthetic(const SyntheticDataset& data, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir / "images");
  DatasetManifest m = data.manifest;
  for (auto* part : {&m.train, &m.test})
    for (auto& a : *part) {
      const auto path = (dir / "images" / (a.image_id + ".ppm")).lexically_normal();
      write_ppm(path, data.images.at(a.image_id));
      a.image_ref = path.string();
    }
  save_native(m, dir / "annotations.json");
  return m;
}

}  // namespace hoikit
