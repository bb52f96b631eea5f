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

#include "hoikit/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>

#include "hoikit/grounding.hpp"
#include "hoikit/matching.hpp"
#include "hoikit/synthetic.hpp"
#include "json.hpp"

namespace hoikit {

using ordered_json = nlohmann::ordered_json;

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  try {
    size_t used = 0;
    T out;
    if constexpr (std::is_same_v<T, int>) out = std::stoi(value, &used);
    else if constexpr (std::is_same_v<T, std::uint64_t>) out = std::stoull(value, &used);
    else out = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return out;
  } catch (const std::exception&) {
    throw InvalidArgument("config key '" + key + "': not a number: " + value);
  }
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw InvalidArgument("config key '" + key + "': expected true or false, got " + value);
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

struct Option {
  std::function<void(TrainConfig&, const std::string&, const std::string&)> set;
  std::function<std::string(const TrainConfig&)> get;
};

#define HOIKIT_NUM(field, type)                                                          \
  Option {                                                                               \
    [](TrainConfig& c, const std::string& k, const std::string& v) {                     \
      c.field = parse_number<type>(k, v);                                                \
    },                                                                                   \
        [](const TrainConfig& c) {                                                       \
          if constexpr (std::is_same_v<type, double>) return fmt(c.field);               \
          else return std::to_string(c.field);                                           \
        }                                                                                \
  }
#define HOIKIT_STR(field)                                                                     \
  Option {                                                                                    \
    [](TrainConfig& c, const std::string&, const std::string& v) { c.field = v; },           \
        [](const TrainConfig& c) { return "\"" + c.field + "\""; }                            \
  }
#define HOIKIT_BOOL(field)                                                                      \
  Option {                                                                                      \
    [](TrainConfig& c, const std::string& k, const std::string& v) { c.field = parse_bool(k, v); }, \
        [](const TrainConfig& c) { return std::string(c.field ? "true" : "false"); }            \
  }

const std::vector<std::pair<std::string, Option>>& options() {
  static const std::vector<std::pair<std::string, Option>> table = {
      {"epochs", HOIKIT_NUM(epochs, int)},
      {"batch_size", HOIKIT_NUM(batch_size, int)},
      {"lr", HOIKIT_NUM(lr, double)},
      {"lr_backbone", HOIKIT_NUM(lr_backbone, double)},
      {"lr_drop_epoch", HOIKIT_NUM(lr_drop_epoch, int)},
      {"lr_drop_factor", HOIKIT_NUM(lr_drop_factor, double)},
      {"optimizer", HOIKIT_STR(optimizer)},
      {"weight_decay", HOIKIT_NUM(weight_decay, double)},
      {"clip_norm", HOIKIT_NUM(clip_norm, double)},
      {"augment", HOIKIT_BOOL(augment)},
      {"max_shift", HOIKIT_NUM(max_shift, int)},
      {"seed", HOIKIT_NUM(seed, std::uint64_t)},
      {"alpha", Option{[](TrainConfig& c, const std::string& k, const std::string& v) {
                         c.margin = Margin{parse_number<double>(k, v)};
                       },
                       [](const TrainConfig& c) { return fmt(c.margin.alpha); }}},
      {"lambda.l1", HOIKIT_NUM(weights.l1, double)},
      {"lambda.giou", HOIKIT_NUM(weights.giou, double)},
      {"lambda.object", HOIKIT_NUM(weights.object_class, double)},
      {"lambda.verb", HOIKIT_NUM(weights.verb_class, double)},
      {"no_object_weight", HOIKIT_NUM(no_object_weight, double)},
      {"use_itm", HOIKIT_BOOL(use_itm)},
      {"variant",
       Option{[](TrainConfig& c, const std::string&, const std::string& v) {
                c.variant = parse_prompt_variant(v);
              },
              [](const TrainConfig& c) { return "\"" + std::string(to_string(c.variant)) + "\""; }}},
      {"negative_cap", HOIKIT_NUM(negative_cap, int)},
      {"verb_threshold", HOIKIT_NUM(verb_threshold, double)},
      {"scorer", HOIKIT_STR(scorer)},
      {"endpoint", HOIKIT_STR(endpoint)},
      {"mock.positive", HOIKIT_NUM(mock.positive_level, double)},
      {"mock.negative", HOIKIT_NUM(mock.negative_level, double)},
      {"mock.sigma", HOIKIT_NUM(mock.noise_sigma, double)},
      {"mock.seed", HOIKIT_NUM(mock.seed, std::uint64_t)},
      {"model.image_size", HOIKIT_NUM(model.image_size, int)},
      {"model.patch_size", HOIKIT_NUM(model.patch_size, int)},
      {"model.embed_dim", HOIKIT_NUM(model.embed_dim, int)},
      {"model.encoder_layers", HOIKIT_NUM(model.encoder_layers, int)},
      {"model.decoder_layers", HOIKIT_NUM(model.decoder_layers, int)},
      {"model.heads", HOIKIT_NUM(model.heads, int)},
      {"model.ffn_dim", HOIKIT_NUM(model.ffn_dim, int)},
      {"model.num_queries", HOIKIT_NUM(model.num_queries, int)},
      {"model.branches", HOIKIT_NUM(model.branches, int)},
      {"eval_every", HOIKIT_NUM(eval_every, int)},
      {"eval_score_threshold", HOIKIT_NUM(eval_score_threshold, double)},
      {"eval_expand_verbs", HOIKIT_BOOL(eval_expand_verbs)},
      {"data", HOIKIT_STR(data)},
      {"synthetic.train", HOIKIT_NUM(synthetic_train, int)},
      {"synthetic.test", HOIKIT_NUM(synthetic_test, int)},
      {"synthetic.seed", HOIKIT_NUM(synthetic_seed, std::uint64_t)},
      {"out_dir", HOIKIT_STR(out_dir)},
  };
  return table;
}

#undef HOIKIT_NUM
#undef HOIKIT_STR
#undef HOIKIT_BOOL

std::string unquote(const std::string& v) {
  if (v.size() >= 2 && (v.front() == '"' || v.front() == '\'') && v.back() == v.front())
    return v.substr(1, v.size() - 2);
  return v;
}

// Strips a trailing comment that is not inside quotes.
std::string strip_comment(const std::string& line) {
  char quote = 0;
  for (size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quote) {
      if (c == quote) quote = 0;
    } else if (c == '"' || c == '\'') {
      quote = c;
    } else if (c == '#') {
      return line.substr(0, i);
    }
  }
  return line;
}

}  // namespace

void TrainConfig::validate() const {
  if (epochs <= 0) throw InvalidArgument("epochs must be positive");
  if (batch_size <= 0) throw InvalidArgument("batch_size must be positive");
  if (!(lr > 0) || !(lr_backbone >= 0)) throw InvalidArgument("learning rates must be positive");
  if (lr_drop_epoch < 0 || !(lr_drop_factor > 0 && lr_drop_factor <= 1))
    throw InvalidArgument("lr_drop_epoch must be >= 0 and lr_drop_factor in (0, 1]");
  if (optimizer != "adamw") throw InvalidArgument("unsupported optimizer: " + optimizer);
  if (!(weight_decay >= 0)) throw InvalidArgument("weight_decay must be >= 0");
  if (!(clip_norm >= 0)) throw InvalidArgument("clip_norm must be >= 0");
  if (max_shift < 0) throw InvalidArgument("max_shift must be >= 0");
  Margin{margin.alpha};
  weights.validate();
  if (!(no_object_weight >= 0)) throw InvalidArgument("no_object_weight must be >= 0");
  if (negative_cap < 0) throw InvalidArgument("negative_cap must be >= 0");
  if (!(verb_threshold >= 0 && verb_threshold <= 1))
    throw InvalidArgument("verb_threshold must lie in [0, 1]");
  if (scorer != "mock" && scorer != "remote")
    throw InvalidArgument("scorer must be mock or remote, got " + scorer);
  if (scorer == "remote" && endpoint.empty())
    throw InvalidArgument("remote scorer needs an endpoint");
  mock.validate();
  if (eval_every <= 0) throw InvalidArgument("eval_every must be positive");
  if (!(eval_score_threshold >= 0 && eval_score_threshold <= 1))
    throw InvalidArgument("eval_score_threshold must lie in [0, 1]");
  if (data.empty() && (synthetic_train <= 0 || synthetic_test < 0))
    throw InvalidArgument("synthetic split sizes must be positive");
}

void set_train_option(TrainConfig& cfg, const std::string& key, const std::string& value) {
  const std::string k = key == "num_queries" ? "model.num_queries" : key;
  for (const auto& [name, opt] : options()) {
    if (name == k) {
      opt.set(cfg, k, unquote(trim(value)));
      return;
    }
  }
  throw InvalidArgument("unknown config key: " + key);
}

TrainConfig parse_train_config(const std::string& text, const std::string& source) {
  TrainConfig cfg;
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string s = trim(strip_comment(line));
    if (s.empty()) continue;
    const std::string where = source + ":" + std::to_string(lineno) + ": ";
    if (s.front() == '[') {
      if (s.back() != ']') throw InvalidArgument(where + "malformed section header");
      section = trim(s.substr(1, s.size() - 2));
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw InvalidArgument(where + "expected key = value");
    std::string key = trim(s.substr(0, eq));
    if (!section.empty()) key = section + "." + key;
    try {
      set_train_option(cfg, key, s.substr(eq + 1));
    } catch (const InvalidArgument& e) {
      throw InvalidArgument(where + e.what());
    }
  }
  return cfg;
}

TrainConfig load_train_config(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw InvalidArgument("cannot open config " + path.string());
  std::ostringstream os;
  os << f.rdbuf();
  return parse_train_config(os.str(), path.string());
}

std::string train_config_to_text(const TrainConfig& cfg) {
  std::string out;
  for (const auto& [name, opt] : options()) out += name + " = " + opt.get(cfg) + "\n";
  return out;
}

TrainData load_train_data(const TrainConfig& cfg) {
  TrainData d;
  const int size = cfg.model.image_size;
  if (cfg.data.empty()) {
    SyntheticSpec spec = SyntheticSpec::standard();
    spec.image_size = size;
    spec.train_count = cfg.synthetic_train;
    spec.test_count = cfg.synthetic_test;
    spec.seed = cfg.synthetic_seed;
    auto gen = generate_synthetic(spec);
    d.manifest = std::move(gen.manifest);
    d.images = std::move(gen.images);
    return d;
  }
  d.manifest = load_annotations(cfg.data);
  for (const auto* part : {&d.manifest.train, &d.manifest.test}) {
    for (auto& [id, img] : load_images(*part)) {
      d.images.emplace(id, img.width == size && img.height == size
                               ? std::move(img)
                               : resize_nearest(img, size, size));
    }
  }
  return d;
}

void augment_sample(Image& image, ImageAnnotation& ann, bool flip, int dx, int dy) {
  const int w = image.width, h = image.height;
  Image out(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const int sx = flip ? w - 1 - x : x;
      const int tx = ((x + dx) % w + w) % w, ty = ((y + dy) % h + h) % h;
      std::copy_n(image.pixel(sx, y), 3, out.pixel(tx, ty));
    }
  image = std::move(out);
  const double ox = static_cast<double>(dx) / w, oy = static_cast<double>(dy) / h;
  auto move = [&](BBox& b) {
    if (flip) b.cx = 1.0 - b.cx;
    b.cx += ox;
    b.cy += oy;
  };
  for (auto& t : ann.gt_triplets) {
    move(t.human_box);
    if (t.object_box.area() > 0) move(t.object_box);
  }
}

namespace {

// Largest shifts that keep every ground-truth box inside the image.
struct ShiftRange {
  int x_lo, x_hi, y_lo, y_hi;
};

ShiftRange shift_range(const ImageAnnotation& ann, bool flip, int limit) {
  double x1 = 1, y1 = 1, x2 = 0, y2 = 0;
  for (const auto& t : ann.gt_triplets)
    for (const BBox* b : {&t.human_box, &t.object_box}) {
      if (b->area() <= 0) continue;
      const double bx1 = flip ? 1.0 - b->x2() : b->x1(), bx2 = flip ? 1.0 - b->x1() : b->x2();
      x1 = std::min(x1, bx1);
      x2 = std::max(x2, bx2);
      y1 = std::min(y1, b->y1());
      y2 = std::max(y2, b->y2());
    }
  const double w = ann.width, h = ann.height;
  ShiftRange r{-static_cast<int>(std::floor(x1 * w + 1e-9)),
               static_cast<int>(std::floor((1.0 - x2) * w + 1e-9)),
               -static_cast<int>(std::floor(y1 * h + 1e-9)),
               static_cast<int>(std::floor((1.0 - y2) * h + 1e-9))};
  r.x_lo = std::max(r.x_lo, -limit);
  r.x_hi = std::max(std::min(r.x_hi, limit), r.x_lo);
  r.y_lo = std::max(r.y_lo, -limit);
  r.y_hi = std::max(std::min(r.y_hi, limit), r.y_lo);
  if (x2 < x1) r = {0, 0, 0, 0};
  return r;
}

// What one image contributed to a step.
struct ImageLoss {
  double hoi = 0.0;
  double itm = 0.0;
  double itm_unweighted = 0.0;
  HoiLossTerms terms;
  int positives = 0;
  int negatives = 0;
};

HeadGradients image_loss(const DetectorOutput& out, const ImageAnnotation& ann,
                         const Vocabulary& vocab, const TrainConfig& cfg,
                         const ItmScorer* scorer, ImageLoss& rec) {
  const auto preds = query_predictions(out);
  const MatchResult match = match_predictions(preds, ann.gt_triplets);
  HoiLoss hoi = hoi_loss(out, ann.gt_triplets, match, cfg.weights, cfg.no_object_weight);
  rec.hoi = hoi.terms.total;
  rec.terms = hoi.terms;
  if (!cfg.use_itm) return hoi.grads;

  const auto triplets = argmax_triplets(out, cfg.verb_threshold);
  GroundedSets sets = partition_and_ground(triplets, match, vocab, cfg.variant);
  std::stable_sort(sets.negatives.begin(), sets.negatives.end(),
                   [](const GroundedSentence& a, const GroundedSentence& b) {
                     return a.weight > b.weight;
                   });
  if (static_cast<int>(sets.negatives.size()) > cfg.negative_cap)
    sets.negatives.resize(cfg.negative_cap);
  rec.positives = static_cast<int>(sets.positives.size());
  rec.negatives = static_cast<int>(sets.negatives.size());

  std::vector<GroundedSentence> all = sets.positives;
  all.insert(all.end(), sets.negatives.begin(), sets.negatives.end());
  if (all.empty()) return hoi.grads;
  std::vector<std::string> texts;
  for (const auto& s : all) texts.push_back(s.text);
  const ITMScoreVector scores = scorer->score(ann, texts);
  scores.validate(texts.size());

  std::vector<double> weights;
  std::vector<Polarity> polarity;
  std::vector<SelectionWeight> sel;
  std::vector<double> pos_scores, neg_scores;
  for (size_t i = 0; i < all.size(); ++i) {
    const int q = all[i].source_index;
    sel.push_back(selection_weight(out.object_logits.row(q).transpose(),
                                   out.verb_logits.row(q).transpose(), triplets[q].object_id,
                                   triplets[q].verb_id));
    weights.push_back(sel.back().value);
    polarity.push_back(all[i].polarity);
    (all[i].polarity == Polarity::kPositive ? pos_scores : neg_scores).push_back(scores.scores[i]);
  }
  const WeightedItmLoss itm = weighted_itm_loss(weights, scores.scores, polarity, cfg.margin);
  for (size_t i = 0; i < all.size(); ++i) {
    const int q = all[i].source_index;
    hoi.grads.object_logits.row(q) += itm.d_weights[i] * sel[i].d_object_logits.transpose();
    hoi.grads.verb_logits.row(q) += itm.d_weights[i] * sel[i].d_verb_logits.transpose();
  }
  rec.itm = itm.value;
  rec.itm_unweighted = itm_contrastive_loss(pos_scores, neg_scores, cfg.margin);
  return hoi.grads;
}

struct AdamW {
  double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  std::vector<ag::Matrix> m, v;
  long long t = 0;

  void step(std::vector<ag::Parameter>& params, const std::vector<double>& lrs, double wd) {
    if (m.empty()) {
      for (const auto& p : params) {
        m.push_back(ag::Matrix::Zero(p.value.rows(), p.value.cols()));
        v.push_back(ag::Matrix::Zero(p.value.rows(), p.value.cols()));
      }
    }
    ++t;
    const double c1 = 1.0 - std::pow(beta1, static_cast<double>(t));
    const double c2 = 1.0 - std::pow(beta2, static_cast<double>(t));
    for (size_t i = 0; i < params.size(); ++i) {
      auto& p = params[i];
      m[i] = beta1 * m[i] + (1.0 - beta1) * p.grad;
      v[i] = beta2 * v[i] + (1.0 - beta2) * p.grad.cwiseProduct(p.grad);
      const double lr = lrs[i];
      p.value *= 1.0 - lr * wd;
      p.value.array() -= lr * (m[i].array() / c1) / ((v[i].array() / c2).sqrt() + eps);
    }
  }
};

bool is_backbone(const std::string& name) {
  return name.rfind("patch_embed", 0) == 0 || name.rfind("encoder", 0) == 0;
}

void write_nan_dump(const TrainConfig& cfg, int epoch, int step, const ImageAnnotation& ann,
                    const ImageLoss& rec, const DetectorOutput& out) {
  ordered_json j;
  j["error"] = "non-finite loss";
  j["epoch"] = epoch;
  j["step"] = step;
  j["image_id"] = ann.image_id;
  j["l_hoi"] = fmt(rec.hoi);
  j["l_itm"] = fmt(rec.itm);
  j["terms"] = {{"l1", fmt(rec.terms.l1)},
                {"giou", fmt(rec.terms.giou)},
                {"object_class", fmt(rec.terms.object_class)},
                {"verb_class", fmt(rec.terms.verb_class)}};
  j["outputs_finite"] = out.object_logits.allFinite() && out.verb_logits.allFinite() &&
                        out.human_boxes.allFinite() && out.object_boxes.allFinite();
  const std::filesystem::path dir = cfg.out_dir.empty() ? "." : cfg.out_dir;
  std::filesystem::create_directories(dir);
  std::ofstream(dir / "nan_dump.json") << j.dump(1) << "\n";
}

}  // namespace

std::vector<ImagePredictions> predict(const HoiDetector& model,
                                      std::span<const ImageAnnotation> annotations,
                                      const std::map<std::string, Image>& images,
                                      double score_threshold, bool expand_verbs) {
  std::vector<ImagePredictions> out;
  for (const auto& a : annotations) {
    const auto it = images.find(a.image_id);
    if (it == images.end()) throw Error("no image loaded for " + a.image_id);
    out.push_back({a.image_id, decode(model.forward(it->second), score_threshold, expand_verbs)});
  }
  return out;
}

APResult evaluate_model(const HoiDetector& model, const TrainData& data, double score_threshold,
                        bool expand_verbs) {
  const auto preds = predict(model, data.manifest.test, data.images, score_threshold, expand_verbs);
  EvalConfig ec;
  ec.benchmark = data.manifest.vocabulary.benchmark;
  if (ec.benchmark == Benchmark::kVcoco) ec.scenario = 1;
  return evaluate(preds, data.manifest.test, data.manifest.vocabulary, ec);
}

std::string epoch_metrics_to_json(const EpochMetrics& m) {
  ordered_json j;
  j["epoch"] = m.epoch;
  j["l_hoi"] = m.l_hoi;
  j["l_itm"] = m.l_itm;
  j["l_total"] = m.l_total;
  j["l1"] = m.terms.l1;
  j["giou"] = m.terms.giou;
  j["object_class"] = m.terms.object_class;
  j["verb_class"] = m.terms.verb_class;
  j["seconds"] = m.seconds;
  if (m.eval) {
    j["full_map"] = m.eval->full_map;
    if (m.eval->rare_map) j["rare_map"] = *m.eval->rare_map;
    if (m.eval->nonrare_map) j["nonrare_map"] = *m.eval->nonrare_map;
    if (m.eval->role_ap_s1) j["role_ap_s1"] = *m.eval->role_ap_s1;
  }
  return j.dump();
}

TrainResult train(const TrainConfig& cfg, const TrainData& data, const ItmScorer* scorer) {
  cfg.validate();
  const Vocabulary& vocab = data.manifest.vocabulary;
  if (cfg.use_itm && scorer == nullptr) throw InvalidArgument("ITM loss enabled without a scorer");
  if (data.manifest.train.empty()) throw InvalidArgument("training split is empty");
  for (const auto& a : data.manifest.train) {
    if (!data.images.contains(a.image_id)) throw InvalidArgument("no image for " + a.image_id);
    for (const auto& t : a.gt_triplets)
      if (!vocab.is_object(t.object_id))
        throw InvalidArgument("training on ground truth without an object is not supported (" +
                              a.image_id + ")");
  }

  ModelConfig mc = cfg.model;
  mc.num_objects = vocab.num_objects();
  mc.num_verbs = vocab.num_verbs();
  mc.seed = cfg.seed;
  TrainResult result{HoiDetector(mc), {}, {}, {}, {}};
  HoiDetector& model = result.model;
  result.scorer_digest_before = scorer ? scorer->state_digest() : std::string();

  std::vector<double> lrs;
  for (const auto& p : model.parameters()) lrs.push_back(is_backbone(p.name) ? cfg.lr_backbone : cfg.lr);
  AdamW opt;
  std::mt19937_64 order_rng(cfg.seed * 0x9E3779B97F4A7C15ULL + 1);
  std::mt19937_64 aug_rng(cfg.seed * 0xD1B54A32D192ED03ULL + 2);
  std::vector<size_t> order(data.manifest.train.size());

  std::ofstream metrics_log, step_log;
  if (!cfg.out_dir.empty()) {
    std::filesystem::create_directories(cfg.out_dir);
    metrics_log.open(std::filesystem::path(cfg.out_dir) / "metrics.jsonl");
    step_log.open(std::filesystem::path(cfg.out_dir) / "steps.csv");
    step_log << "epoch,step,l_hoi,l_itm,l_itm_unweighted,l_total,positives,negatives\n";
    step_log.precision(17);
  }

  int step = 0;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    for (size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[order_rng() % i]);

    if (cfg.lr_drop_epoch > 0 && epoch == cfg.lr_drop_epoch + 1)
      for (double& lr : lrs) lr *= cfg.lr_drop_factor;
    EpochMetrics em;
    em.epoch = epoch;
    for (size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const size_t end = std::min(order.size(), start + cfg.batch_size);
      const double scale = 1.0 / static_cast<double>(end - start);
      model.zero_grad();
      StepRecord sr;
      sr.epoch = epoch;
      sr.step = ++step;
      for (size_t b = start; b < end; ++b) {
        ImageAnnotation ann = data.manifest.train[order[b]];
        Image image = data.images.at(ann.image_id);
        if (cfg.augment) {
          const bool flip = aug_rng() & 1u;
          const ShiftRange r = shift_range(ann, flip, cfg.max_shift);
          const int dx = r.x_lo + static_cast<int>(aug_rng() % (r.x_hi - r.x_lo + 1));
          const int dy = r.y_lo + static_cast<int>(aug_rng() % (r.y_hi - r.y_lo + 1));
          augment_sample(image, ann, flip, dx, dy);
        }
        ImageLoss rec;
        const DetectorOutput out = model.forward_backward(
            image,
            [&](const DetectorOutput& o) { return image_loss(o, ann, vocab, cfg, scorer, rec); },
            scale);
        if (!std::isfinite(rec.hoi) || !std::isfinite(rec.itm)) {
          write_nan_dump(cfg, epoch, step, ann, rec, out);
          throw TrainingError("non-finite loss at epoch " + std::to_string(epoch) + " step " +
                              std::to_string(step) + " on " + ann.image_id);
        }
        sr.l_hoi += rec.hoi * scale;
        sr.l_itm += rec.itm * scale;
        sr.l_itm_unweighted += rec.itm_unweighted * scale;
        sr.positives += rec.positives;
        sr.negatives += rec.negatives;
        em.terms.l1 += rec.terms.l1;
        em.terms.giou += rec.terms.giou;
        em.terms.object_class += rec.terms.object_class;
        em.terms.verb_class += rec.terms.verb_class;
      }
      sr.l_total = total_loss(sr.l_hoi, sr.l_itm);
      if (cfg.clip_norm > 0) {
        double sq = 0.0;
        for (const auto& p : model.parameters()) sq += p.grad.squaredNorm();
        const double norm = std::sqrt(sq);
        if (norm > cfg.clip_norm)
          for (auto& p : model.parameters()) p.grad *= cfg.clip_norm / norm;
      }
      opt.step(model.parameters(), lrs, cfg.weight_decay);
      em.l_hoi += sr.l_hoi * (end - start);
      em.l_itm += sr.l_itm * (end - start);
      if (step_log.is_open())
        step_log << sr.epoch << ',' << sr.step << ',' << sr.l_hoi << ',' << sr.l_itm << ','
                 << sr.l_itm_unweighted << ',' << sr.l_total << ',' << sr.positives << ','
                 << sr.negatives << '\n';
      result.steps.push_back(sr);
    }
    const double n = static_cast<double>(order.size());
    em.l_hoi /= n;
    em.l_itm /= n;
    em.l_total = total_loss(em.l_hoi, em.l_itm);
    em.terms.l1 /= n;
    em.terms.giou /= n;
    em.terms.object_class /= n;
    em.terms.verb_class /= n;
    if ((epoch % cfg.eval_every == 0 || epoch == cfg.epochs) && !data.manifest.test.empty())
      em.eval = evaluate_model(model, data, cfg.eval_score_threshold, cfg.eval_expand_verbs);
    em.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (metrics_log.is_open()) metrics_log << epoch_metrics_to_json(em) << "\n" << std::flush;
    result.epochs.push_back(std::move(em));
  }

  result.scorer_digest_after = scorer ? scorer->state_digest() : std::string();
  if (result.scorer_digest_after != result.scorer_digest_before)
    throw TrainingError("scorer state changed during training");
  if (!cfg.out_dir.empty()) {
    model.save(std::filesystem::path(cfg.out_dir) / "model.ckpt");
    std::ofstream(std::filesystem::path(cfg.out_dir) / "config.toml") << train_config_to_text(cfg);
  }
  return result;
}

}  // namespace hoikit
