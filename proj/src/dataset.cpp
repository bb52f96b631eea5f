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

#include "hoikit/dataset.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace hoikit {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

namespace {

std::string read_text(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IngestionError("cannot open annotation file " + path.string());
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

json parse_json(const std::string& text, const std::string& source) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw IngestionError(source + ": parse error at byte " + std::to_string(e.byte) + ": " +
                         e.what());
  }
}

double round_micro(double v) {
  const double r = std::round(v * 1e6) / 1e6;
  return r == 0.0 ? 0.0 : r;
}

std::array<double, 4> read_box(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 4)
    throw IngestionError(where + ": box must be an array of 4 numbers");
  std::array<double, 4> b{};
  for (int i = 0; i < 4; ++i) {
    if (!j[i].is_number()) throw IngestionError(where + ": box must be an array of 4 numbers");
    b[i] = j[i].get<double>();
  }
  return b;
}

int resolve_label(const json& j, const std::vector<std::string>& names, int sentinel,
                  bool allow_sentinel, const std::string& where, const char* what) {
  if (j.is_null()) {
    if (allow_sentinel) return sentinel;
    throw IngestionError(where + ": missing " + what);
  }
  if (j.is_number_integer()) {
    const int id = j.get<int>();
    if (id >= 0 && id < static_cast<int>(names.size())) return id;
    throw IngestionError(where + ": " + what + " index " + std::to_string(id) + " out of range");
  }
  if (j.is_string()) {
    const auto name = j.get<std::string>();
    for (size_t i = 0; i < names.size(); ++i)
      if (names[i] == name) return static_cast<int>(i);
    throw IngestionError(where + ": unknown " + what + " '" + name + "'");
  }
  throw IngestionError(where + ": " + what + " must be a name or index");
}

BBox checked_box(const std::array<double, 4>& px, int width, int height,
                 const std::string& where) {
  if (px[0] < 0 || px[1] < 0 || px[2] > width || px[3] > height || px[2] <= px[0] ||
      px[3] <= px[1])
    throw IngestionError(where + ": box out of image bounds or degenerate");
  return normalize_corners(px[0], px[1], px[2], px[3], width, height);
}

Vocabulary parse_vocabulary(const json& j, const std::string& where) {
  Vocabulary v;
  try {
    v.benchmark = parse_benchmark(j.value("benchmark", std::string("synthetic")));
    v.object_names = j.at("objects").get<std::vector<std::string>>();
    v.verb_names = j.at("verbs").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw IngestionError(where + ": " + e.what());
  } catch (const InvalidArgument& e) {
    throw IngestionError(where + ": " + e.what());
  }
  v.verb_without_object.assign(v.verb_names.size(), false);
  if (j.contains("no_object_verbs")) {
    for (const auto& n : j["no_object_verbs"]) {
      const int id = resolve_label(n, v.verb_names, -1, false, where, "verb");
      v.verb_without_object[id] = true;
    }
  }
  if (j.contains("hoi_categories")) {
    size_t i = 0;
    for (const auto& c : j["hoi_categories"]) {
      const std::string w = where + ".hoi_categories[" + std::to_string(i++) + "]";
      HoiCategory cat;
      cat.verb = resolve_label(c.at("verb"), v.verb_names, -1, false, w, "verb");
      cat.object = resolve_label(c.contains("object") ? c["object"] : json(), v.object_names,
                                 v.no_object_index(), true, w, "object");
      cat.rare = c.value("rare", false);
      v.hoi_categories.push_back(cat);
    }
  }
  try {
    v.validate();
  } catch (const InvalidArgument& e) {
    throw IngestionError(where + ": " + e.what());
  }
  return v;
}

ordered_json vocabulary_json(const Vocabulary& v) {
  ordered_json j;
  j["benchmark"] = std::string(to_string(v.benchmark));
  j["objects"] = v.object_names;
  j["verbs"] = v.verb_names;
  std::vector<std::string> motions;
  for (int i = 0; i < v.num_verbs(); ++i)
    if (v.is_bodymotion(i)) motions.push_back(v.verb_names[i]);
  if (!motions.empty()) j["no_object_verbs"] = motions;
  ordered_json cats = ordered_json::array();
  for (const auto& c : v.hoi_categories) {
    ordered_json cj;
    cj["verb"] = v.verb_names[c.verb];
    cj["object"] = v.is_object(c.object) ? ordered_json(v.object_names[c.object]) : ordered_json();
    cj["rare"] = c.rare;
    cats.push_back(cj);
  }
  j["hoi_categories"] = cats;
  return j;
}

std::string resolve_ref(const std::string& file, const std::filesystem::path& base_dir) {
  if (file.empty()) return {};
  const std::filesystem::path p(file);
  if (p.is_absolute() || base_dir.empty()) return p.lexically_normal().string();
  return (base_dir / p).lexically_normal().string();
}

// Common list-of-images layout used by HICO-DET and V-COCO conversions.
DatasetManifest load_list_format(const json& root, const std::string& source,
                                 AnnotationFormat format, std::string_view split,
                                 const std::filesystem::path& base_dir) {
  DatasetManifest m;
  m.vocabulary = format == AnnotationFormat::kHicoJson ? Vocabulary::hico() : Vocabulary::vcoco();
  m.name = std::filesystem::path(source).stem().string();
  if (format == AnnotationFormat::kHicoJson)
    m.recorded_split_sizes = {{"train", 38118}, {"test", 9658}};
  else
    m.recorded_split_sizes = {{"train", 5400}, {"test", 4964}};
  const auto& coco_ids = presets::coco_category_ids();
  if (!root.is_array()) throw IngestionError(source + ": expected a list of images");
  std::vector<ImageAnnotation> images;
  for (size_t i = 0; i < root.size(); ++i) {
    const json& e = root[i];
    const std::string where = source + ": [" + std::to_string(i) + "]";
    ImageAnnotation ann;
    try {
      const std::string file = e.at("file_name").get<std::string>();
      ann.image_id = e.contains("img_id") ? e["img_id"].dump() : std::filesystem::path(file).stem().string();
      if (e.contains("img_id") && e["img_id"].is_string()) ann.image_id = e["img_id"].get<std::string>();
      ann.image_ref = resolve_ref(file, base_dir);
      ann.width = e.at("width").get<int>();
      ann.height = e.at("height").get<int>();
    } catch (const json::exception& ex) {
      throw IngestionError(where + ": " + ex.what());
    }
    const json& boxes = e.value("annotations", json::array());
    const json& hois = e.value("hoi_annotation", json::array());
    for (size_t h = 0; h < hois.size(); ++h) {
      const std::string w = where + ".hoi_annotation[" + std::to_string(h) + "]";
      const int sub = hois[h].at("subject_id").get<int>();
      const int obj = hois[h].at("object_id").get<int>();
      const int verb = hois[h].at("category_id").get<int>() - 1;
      if (sub < 0 || sub >= static_cast<int>(boxes.size()) || obj >= static_cast<int>(boxes.size()))
        throw IngestionError(w + ": box reference out of range");
      if (verb < 0 || verb >= m.vocabulary.num_verbs())
        throw IngestionError(w + ": unknown verb id " + std::to_string(verb + 1));
      HOITriplet t;
      t.verb_id = verb;
      t.human_box = checked_box(read_box(boxes[sub].at("bbox"), w), ann.width, ann.height, w);
      if (obj < 0) {
        t.object_id = m.vocabulary.no_object_index();
      } else {
        const int coco = boxes[obj].at("category_id").get<int>();
        const auto it = std::find(coco_ids.begin(), coco_ids.end(), coco);
        if (it == coco_ids.end())
          throw IngestionError(w + ": unknown object category id " + std::to_string(coco));
        t.object_id = static_cast<int>(it - coco_ids.begin());
        t.object_box = checked_box(read_box(boxes[obj].at("bbox"), w), ann.width, ann.height, w);
      }
      ann.gt_triplets.push_back(t);
    }
    try {
      validate_annotation(ann, m.vocabulary);
    } catch (const InvalidArgument& ex) {
      throw IngestionError(where + ": " + ex.what());
    }
    images.push_back(std::move(ann));
  }
  if (format == AnnotationFormat::kHicoJson) {
    m.vocabulary.hoi_categories = derive_hoi_categories(images);
  } else {
    std::set<std::pair<int, int>> seen;
    for (const auto& a : images)
      for (const auto& t : a.gt_triplets)
        if (seen.insert({t.verb_id, t.object_id}).second)
          m.vocabulary.hoi_categories.push_back({t.verb_id, t.object_id, false});
  }
  if (split == "test")
    m.test = std::move(images);
  else
    m.train = std::move(images);
  return m;
}

}  // namespace

AnnotationFormat parse_annotation_format(std::string_view tag) {
  if (tag == "native_json" || tag == "native") return AnnotationFormat::kNative;
  if (tag == "hico_json" || tag == "hico") return AnnotationFormat::kHicoJson;
  if (tag == "vcoco_json" || tag == "vcoco") return AnnotationFormat::kVcocoJson;
  throw InvalidArgument("unknown annotation format: " + std::string(tag));
}

BBox normalize_corners(double x1, double y1, double x2, double y2, int width, int height) {
  return BBox::from_corners(x1 / width, y1 / height, x2 / width, y2 / height);
}

std::array<double, 4> pixel_corners(const BBox& b, int width, int height) {
  return {round_micro(b.x1() * width), round_micro(b.y1() * height),
          round_micro(b.x2() * width), round_micro(b.y2() * height)};
}

std::vector<HoiCategory> derive_hoi_categories(std::span<const ImageAnnotation> train,
                                               int rare_threshold) {
  std::map<std::pair<int, int>, int> counts;
  std::vector<std::pair<int, int>> order;
  for (const auto& a : train)
    for (const auto& t : a.gt_triplets) {
      const auto key = std::make_pair(t.verb_id, t.object_id);
      if (counts[key]++ == 0) order.push_back(key);
    }
  std::sort(order.begin(), order.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second < b.second : a.first < b.first;
  });
  std::vector<HoiCategory> cats;
  for (const auto& key : order)
    cats.push_back({key.first, key.second, counts[key] < rare_threshold});
  return cats;
}

DatasetManifest parse_native(const std::string& json_text, const std::filesystem::path& base_dir,
                             const std::string& source) {
  const json root = parse_json(json_text, source);
  if (!root.is_object() || !root.contains("images") || !root.contains("vocabulary"))
    throw IngestionError(source + ": native annotations need 'images' and 'vocabulary'");
  DatasetManifest m;
  m.name = root.value("name", std::filesystem::path(source).stem().string());
  m.provenance = root.value("provenance", std::string("real"));
  if (root.contains("seed") && !root["seed"].is_null()) m.generator_seed = root["seed"].get<std::uint64_t>();
  if (root.contains("recorded_split_sizes"))
    m.recorded_split_sizes = root["recorded_split_sizes"].get<std::map<std::string, int>>();
  m.vocabulary = parse_vocabulary(root["vocabulary"], source + ": vocabulary");
  const Vocabulary& v = m.vocabulary;

  const json& images = root["images"];
  for (size_t i = 0; i < images.size(); ++i) {
    const json& e = images[i];
    std::string where = source + ": images[" + std::to_string(i) + "]";
    ImageAnnotation ann;
    std::string split;
    try {
      ann.image_id = e.at("image_id").get<std::string>();
      where += " ('" + ann.image_id + "')";
      ann.width = e.at("width").get<int>();
      ann.height = e.at("height").get<int>();
      ann.image_ref = resolve_ref(e.value("file", std::string()), base_dir);
      split = e.value("split", std::string("train"));
    } catch (const json::exception& ex) {
      throw IngestionError(where + ": " + ex.what());
    }
    if (ann.width <= 0 || ann.height <= 0) throw IngestionError(where + ": bad image size");
    if (split != "train" && split != "test")
      throw IngestionError(where + ": split must be train or test");
    const json& triplets = e.value("triplets", json::array());
    for (size_t k = 0; k < triplets.size(); ++k) {
      const json& tj = triplets[k];
      const std::string w = where + ".triplets[" + std::to_string(k) + "]";
      HOITriplet t;
      try {
        t.verb_id = resolve_label(tj.at("verb"), v.verb_names, -1, false, w, "verb");
        const bool motion = v.is_bodymotion(t.verb_id) || v.benchmark == Benchmark::kVcoco;
        t.object_id = resolve_label(tj.contains("object") ? tj["object"] : json(), v.object_names,
                                    v.no_object_index(), motion, w, "object");
        t.human_box = checked_box(read_box(tj.at("hbox"), w), ann.width, ann.height, w);
        if (t.object_id != v.no_object_index())
          t.object_box = checked_box(read_box(tj.at("obox"), w), ann.width, ann.height, w);
      } catch (const json::exception& ex) {
        throw IngestionError(w + ": " + ex.what());
      }
      ann.gt_triplets.push_back(t);
    }
    try {
      validate_annotation(ann, v);
    } catch (const IngestionError&) {
      throw;
    } catch (const InvalidArgument& ex) {
      throw IngestionError(where + ": " + ex.what());
    }
    (split == "test" ? m.test : m.train).push_back(std::move(ann));
  }
  std::set<std::string> ids;
  for (const auto* part : {&m.train, &m.test})
    for (const auto& a : *part)
      if (!ids.insert(a.image_id).second)
        throw IngestionError(source + ": duplicate image id '" + a.image_id + "'");
  if (m.vocabulary.hoi_categories.empty()) m.vocabulary.hoi_categories = derive_hoi_categories(m.train);
  return m;
}

DatasetManifest load_annotations(const std::filesystem::path& path, AnnotationFormat format,
                                 std::string_view split) {
  const std::string text = read_text(path);
  const auto base = path.parent_path();
  if (format == AnnotationFormat::kNative) return parse_native(text, base, path.string());
  return load_list_format(parse_json(text, path.string()), path.string(), format, split, base);
}

std::string to_native_json(const DatasetManifest& m, const std::filesystem::path& base_dir) {
  ordered_json root;
  root["name"] = m.name;
  root["provenance"] = m.provenance;
  root["seed"] = m.generator_seed ? ordered_json(*m.generator_seed) : ordered_json();
  if (!m.recorded_split_sizes.empty()) root["recorded_split_sizes"] = m.recorded_split_sizes;
  root["vocabulary"] = vocabulary_json(m.vocabulary);
  ordered_json images = ordered_json::array();
  const Vocabulary& v = m.vocabulary;
  for (const auto& [split, part] : {std::pair{"train", &m.train}, std::pair{"test", &m.test}}) {
    for (const auto& a : *part) {
      ordered_json e;
      e["image_id"] = a.image_id;
      e["split"] = split;
      e["width"] = a.width;
      e["height"] = a.height;
      std::string file = a.image_ref;
      if (!file.empty() && !base_dir.empty()) {
        const auto rel = std::filesystem::path(file).lexically_relative(base_dir);
        if (!rel.empty() && rel.native().rfind("..", 0) != 0) file = rel.string();
      }
      e["file"] = file;
      ordered_json ts = ordered_json::array();
      for (const auto& t : a.gt_triplets) {
        ordered_json tj;
        const auto h = pixel_corners(t.human_box, a.width, a.height);
        tj["hbox"] = {h[0], h[1], h[2], h[3]};
        if (v.is_object(t.object_id)) {
          const auto o = pixel_corners(t.object_box, a.width, a.height);
          tj["obox"] = {o[0], o[1], o[2], o[3]};
          tj["object"] = v.object_names[t.object_id];
        } else {
          tj["obox"] = nullptr;
          tj["object"] = nullptr;
        }
        tj["verb"] = v.verb_names[t.verb_id];
        ts.push_back(tj);
      }
      e["triplets"] = ts;
      images.push_back(e);
    }
  }
  root["images"] = images;
  return root.dump(1);
}

void save_native(const DatasetManifest& m, const std::filesystem::path& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot write " + path.string());
  f << to_native_json(m, path.parent_path()) << "\n";
}

std::vector<ImagePredictions> parse_predictions(const std::string& json_text,
                                                std::span<const ImageAnnotation> annotations,
                                                const Vocabulary& vocab) {
  const json root = parse_json(json_text, "predictions");
  if (!root.is_array()) throw IngestionError("predictions: expected a list");
  std::map<std::string, const ImageAnnotation*> by_id;
  for (const auto& a : annotations) by_id[a.image_id] = &a;
  std::vector<ImagePredictions> out;
  std::map<std::string, size_t> slot;
  for (size_t i = 0; i < root.size(); ++i) {
    const json& e = root[i];
    const std::string w = "predictions[" + std::to_string(i) + "]";
    try {
      const std::string id = e.at("image_id").is_string() ? e["image_id"].get<std::string>()
                                                           : e["image_id"].dump();
      const auto it = by_id.find(id);
      if (it == by_id.end()) throw IngestionError(w + ": unknown image '" + id + "'");
      const ImageAnnotation& a = *it->second;
      HOITriplet t;
      t.verb_id = resolve_label(e.at("verb_id"), vocab.verb_names, -1, false, w, "verb");
      t.object_id = resolve_label(e.contains("object_id") ? e["object_id"] : json(),
                                  vocab.object_names, vocab.no_object_index(), true, w, "object");
      const auto h = read_box(e.at("human_box"), w);
      t.human_box = normalize_corners(h[0], h[1], h[2], h[3], a.width, a.height);
      if (e.contains("object_box") && !e["object_box"].is_null()) {
        const auto o = read_box(e["object_box"], w);
        t.object_box = normalize_corners(o[0], o[1], o[2], o[3], a.width, a.height);
      }
      t.score = e.at("score").get<double>();
      if (!std::isfinite(t.score)) throw IngestionError(w + ": score must be finite");
      auto [pos, inserted] = slot.emplace(id, out.size());
      if (inserted) out.push_back({id, {}});
      out[pos->second].triplets.push_back(t);
    } catch (const json::exception& ex) {
      throw IngestionError(w + ": " + ex.what());
    }
  }
  return out;
}

std::string predictions_to_json(std::span<const ImagePredictions> preds,
                                std::span<const ImageAnnotation> annotations) {
  std::map<std::string, const ImageAnnotation*> by_id;
  for (const auto& a : annotations) by_id[a.image_id] = &a;
  ordered_json out = ordered_json::array();
  for (const auto& ip : preds) {
    const auto it = by_id.find(ip.image_id);
    if (it == by_id.end()) throw InvalidArgument("prediction for unknown image " + ip.image_id);
    const ImageAnnotation& a = *it->second;
    for (const auto& t : ip.triplets) {
      const auto h = pixel_corners(t.human_box, a.width, a.height);
      const auto o = pixel_corners(t.object_box, a.width, a.height);
      ordered_json e;
      e["image_id"] = ip.image_id;
      e["human_box"] = {h[0], h[1], h[2], h[3]};
      e["object_box"] = {o[0], o[1], o[2], o[3]};
      e["object_id"] = t.object_id;
      e["verb_id"] = t.verb_id;
      e["score"] = t.score;
      out.push_back(e);
    }
  }
  return out.dump(1);
}

std::string ap_result_to_json(const APResult& r, const Vocabulary& v) {
  ordered_json j;
  ordered_json per = ordered_json::array();
  for (const auto& [c, ap] : r.per_category_ap) {
    ordered_json e;
    if (v.benchmark == Benchmark::kVcoco || v.hoi_categories.empty()) {
      e["action"] = v.verb_names.at(c);
    } else {
      const auto& cat = v.hoi_categories.at(c);
      e["verb"] = v.verb_names[cat.verb];
      e["object"] = v.is_object(cat.object) ? ordered_json(v.object_names[cat.object]) : ordered_json();
      e["rare"] = cat.rare;
    }
    e["ap"] = ap;
    e["gt_count"] = r.gt_counts.at(c);
    per.push_back(e);
  }
  j["per_category"] = per;
  j["full_map"] = r.full_map;
  if (r.rare_map) j["rare_map"] = *r.rare_map;
  if (r.nonrare_map) j["nonrare_map"] = *r.nonrare_map;
  if (r.role_ap_s1) j["role_ap_s1"] = *r.role_ap_s1;
  if (r.role_ap_s2) j["role_ap_s2"] = *r.role_ap_s2;
  return j.dump(1);
}

std::map<std::string, Image> load_images(std::span<const ImageAnnotation> annotations) {
  std::map<std::string, Image> images;
  for (const auto& a : annotations) {
    if (a.image_ref.empty()) throw Error("image " + a.image_id + " has no file reference");
    images.emplace(a.image_id, read_ppm(a.image_ref));
  }
  return images;
}

}  // namespace hoikit
