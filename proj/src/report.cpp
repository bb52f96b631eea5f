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

#include "hoikit/report.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "hoikit/matching.hpp"
#include "json.hpp"

namespace hoikit {

using ordered_json = nlohmann::ordered_json;

std::optional<std::pair<double, double>> published_margin_reference(double alpha) {
  if (alpha == 0.0) return std::pair{66.80, 70.53};
  if (alpha == 1.0) return std::pair{67.73, 70.91};
  if (alpha == 2.0) return std::pair{67.13, 70.69};
  return std::nullopt;
}

std::optional<std::pair<double, double>> published_prompt_reference(PromptVariant variant) {
  switch (variant) {
    case PromptVariant::kVerb: return std::pair{67.51, 70.27};
    case PromptVariant::kObject: return std::pair{67.29, 70.52};
    case PromptVariant::kFull: return std::pair{67.73, 70.91};
  }
  return std::nullopt;
}

std::string format_alpha(double alpha) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", alpha);
  return buf;
}

namespace {

std::string pct(std::optional<double> v) {
  if (!v) return "-";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", 100.0 * *v);
  return buf;
}

std::string plain(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string render_table(const std::vector<std::string>& header,
                         const std::vector<std::vector<std::string>>& rows) {
  std::vector<size_t> width(header.size());
  for (size_t c = 0; c < header.size(); ++c) width[c] = header[c].size();
  for (const auto& r : rows)
    for (size_t c = 0; c < r.size(); ++c) width[c] = std::max(width[c], r[c].size());
  std::ostringstream os;
  auto line = [&](const std::vector<std::string>& cells) {
    for (size_t c = 0; c < cells.size(); ++c) {
      os << (c ? " | " : "") << cells[c] << std::string(width[c] - cells[c].size(), ' ');
    }
    os << "\n";
  };
  line(header);
  for (size_t c = 0; c < header.size(); ++c) os << (c ? "-+-" : "") << std::string(width[c], '-');
  os << "\n";
  for (const auto& r : rows) line(r);
  return os.str();
}

// Role AP for both scenarios on V-COCO data, HICO-style mAP otherwise.
APResult evaluate_for_report(const HoiDetector& model, const TrainData& data) {
  if (data.manifest.vocabulary.benchmark != Benchmark::kVcoco) return evaluate_model(model, data);
  const auto preds = predict(model, data.manifest.test, data.images);
  const Vocabulary& v = data.manifest.vocabulary;
  APResult s1 = vcoco_role_ap(preds, data.manifest.test, v, 1);
  const APResult s2 = vcoco_role_ap(preds, data.manifest.test, v, 2);
  s1.role_ap_s2 = s2.role_ap_s2;
  return s1;
}

std::vector<std::string> metric_header(Benchmark b) {
  if (b == Benchmark::kVcoco) return {"AP#1_role", "AP#2_role"};
  return {"Full mAP", "Rare mAP", "Non-Rare mAP"};
}

std::vector<std::string> metric_cells(Benchmark b, const APResult& r) {
  if (b == Benchmark::kVcoco) return {pct(r.role_ap_s1), pct(r.role_ap_s2)};
  return {pct(r.full_map), pct(r.rare_map), pct(r.nonrare_map)};
}

std::string capitalized(std::string_view s) {
  std::string out(s);
  if (!out.empty()) out[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(out[0])));
  return out;
}

}  // namespace

std::string AblationReport::format() const {
  std::vector<std::string> header{column};
  for (auto& h : metric_header(benchmark)) header.push_back(h);
  header.push_back("published AP#1_role");
  header.push_back("published AP#2_role");
  std::vector<std::vector<std::string>> rows;
  for (const auto& r : this->rows) {
    std::vector<std::string> cells{r.setting};
    for (auto& c : metric_cells(benchmark, r.result)) cells.push_back(c);
    cells.push_back(r.reference ? plain(r.reference->first) : "-");
    cells.push_back(r.reference ? plain(r.reference->second) : "-");
    rows.push_back(cells);
  }
  std::string title = kind == "margin" ? "Positive margin ablation" : "Prompt structure ablation";
  title += " (" + std::string(to_string(benchmark)) + " test split, AP in %)\n";
  return title + render_table(header, rows) +
         "published columns: full-scale V-COCO values, shown for reference only\n";
}

std::string AblationReport::to_json() const {
  ordered_json j;
  j["kind"] = kind;
  j["benchmark"] = std::string(to_string(benchmark));
  j["rows"] = ordered_json::array();
  for (const auto& r : rows) {
    ordered_json e;
    e[column] = r.setting;
    e["full_map"] = r.result.full_map;
    if (r.result.rare_map) e["rare_map"] = *r.result.rare_map;
    if (r.result.nonrare_map) e["nonrare_map"] = *r.result.nonrare_map;
    if (r.result.role_ap_s1) e["role_ap_s1"] = *r.result.role_ap_s1;
    if (r.result.role_ap_s2) e["role_ap_s2"] = *r.result.role_ap_s2;
    if (r.reference)
      e["published_reference"] = {{"role_ap_s1", r.reference->first},
                              {"role_ap_s2", r.reference->second}};
    j["rows"].push_back(e);
  }
  return j.dump(1);
}

AblationReport ablate_margin(const TrainConfig& cfg, const TrainData& data,
                             const ItmScorer& scorer, std::span<const double> alphas) {
  for (double a : alphas)
    if (!(a >= 0) || !std::isfinite(a)) throw InvalidArgument("margin values must be >= 0");
  AblationReport report{"margin", "alpha", data.manifest.vocabulary.benchmark, {}};
  for (double a : alphas) {
    TrainConfig c = cfg;
    c.margin.alpha = a;
    c.use_itm = true;
    c.out_dir.clear();
    const TrainResult r = train(c, data, &scorer);
    report.rows.push_back({format_alpha(a), evaluate_for_report(r.model, data),
                           published_margin_reference(a)});
  }
  return report;
}

AblationReport ablate_prompt(const TrainConfig& cfg, const TrainData& data,
                             const ItmScorer& scorer, std::span<const std::string> variants) {
  std::vector<PromptVariant> parsed;
  for (const auto& v : variants) parsed.push_back(parse_prompt_variant(v));
  AblationReport report{"prompt", "Prompt", data.manifest.vocabulary.benchmark, {}};
  for (PromptVariant v : parsed) {
    TrainConfig c = cfg;
    c.variant = v;
    c.use_itm = true;
    c.out_dir.clear();
    const TrainResult r = train(c, data, &scorer);
    report.rows.push_back({capitalized(to_string(v)), evaluate_for_report(r.model, data),
                           published_prompt_reference(v)});
  }
  return report;
}

namespace {

void score_into(std::vector<ScoreRecord>& out, const ImageAnnotation& ann,
                const std::vector<GroundedSentence>& sentences, const ItmScorer& scorer) {
  if (sentences.empty()) return;
  std::vector<std::string> texts;
  for (const auto& s : sentences) texts.push_back(s.text);
  const ITMScoreVector scores = scorer.score(ann, texts);
  scores.validate(texts.size());
  for (size_t i = 0; i < sentences.size(); ++i)
    out.push_back({ann.image_id, sentences[i].polarity, sentences[i].text, scores.scores[i]});
}

}  // namespace

std::vector<ScoreRecord> collect_scores(std::span<const ImageAnnotation> annotations,
                                        const Vocabulary& vocab, const ItmScorer& scorer,
                                        PromptVariant variant, int negative_cap) {
  std::vector<ScoreRecord> out;
  for (const auto& ann : annotations) {
    std::vector<GroundedSentence> sentences;
    std::set<std::pair<int, int>> present;
    for (size_t i = 0; i < ann.gt_triplets.size(); ++i) {
      const auto& t = ann.gt_triplets[i];
      present.insert({t.verb_id, t.object_id});
      if (has_sentinel(t, vocab)) continue;
      sentences.push_back({ground_triplet(t, vocab, variant), Polarity::kPositive,
                           static_cast<int>(i), 1.0});
    }
    int negatives = 0;
    std::set<std::string> positive_texts;
    for (const auto& s : sentences) positive_texts.insert(s.text);
    for (size_t c = 0; c < vocab.hoi_categories.size() && negatives < negative_cap; ++c) {
      const auto& cat = vocab.hoi_categories[c];
      if (present.contains({cat.verb, cat.object}) || !vocab.is_object(cat.object)) continue;
      std::string text = ground_labels(cat.verb, cat.object, vocab, variant);
      // Partial prompts can collide with a positive; such a sentence is not a negative.
      if (positive_texts.contains(text)) continue;
      sentences.push_back({std::move(text), Polarity::kNegative, static_cast<int>(c), 1.0});
      ++negatives;
    }
    score_into(out, ann, sentences, scorer);
  }
  return out;
}

std::vector<ScoreRecord> collect_scores(const HoiDetector& model,
                                        std::span<const ImageAnnotation> annotations,
                                        const std::map<std::string, Image>& images,
                                        const Vocabulary& vocab, const ItmScorer& scorer,
                                        PromptVariant variant, double verb_threshold,
                                        int negative_cap) {
  std::vector<ScoreRecord> out;
  for (const auto& ann : annotations) {
    const DetectorOutput o = model.forward(images.at(ann.image_id));
    const MatchResult match = match_predictions(query_predictions(o), ann.gt_triplets);
    GroundedSets sets =
        partition_and_ground(argmax_triplets(o, verb_threshold), match, vocab, variant);
    std::stable_sort(sets.negatives.begin(), sets.negatives.end(),
                     [](const GroundedSentence& a, const GroundedSentence& b) {
                       return a.weight > b.weight;
                     });
    if (static_cast<int>(sets.negatives.size()) > negative_cap)
      sets.negatives.resize(negative_cap);
    std::vector<GroundedSentence> all = sets.positives;
    all.insert(all.end(), sets.negatives.begin(), sets.negatives.end());
    score_into(out, ann, all, scorer);
  }
  return out;
}

std::string scores_to_csv(std::span<const ScoreRecord> records) {
  std::ostringstream os;
  os.precision(17);
  os << "image_id,polarity,text,score\n";
  auto quoted = [](const std::string& s) {
    std::string q = "\"";
    for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
    return q + "\"";
  };
  for (const auto& r : records)
    os << quoted(r.image_id) << ',' << to_string(r.polarity) << ',' << quoted(r.text) << ','
       << r.score << '\n';
  return os.str();
}

std::string score_histogram_svg(std::span<const ScoreRecord> records, int bins) {
  if (bins <= 0) throw InvalidArgument("histogram needs at least one bin");
  double hi = 0.0;
  for (const auto& r : records) hi = std::max(hi, r.score);
  hi = hi > 0 ? hi * 1.0001 : 1.0;
  std::vector<int> pos(bins, 0), neg(bins, 0);
  for (const auto& r : records) {
    const int b = std::min(bins - 1, static_cast<int>(r.score / hi * bins));
    (r.polarity == Polarity::kPositive ? pos : neg)[b]++;
  }
  const int peak = std::max(1, std::max(*std::max_element(pos.begin(), pos.end()),
                                        *std::max_element(neg.begin(), neg.end())));
  const double W = 640, H = 360, left = 50, bottom = 320, top = 30;
  const double bw = (W - left - 20) / bins;
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
     << "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
     << "<text x=\"" << left << "\" y=\"20\" font-size=\"14\">ITM scores: positive (blue) vs "
        "negative (orange), n="
     << records.size() << "</text>\n";
  for (int b = 0; b < bins; ++b) {
    for (int k = 0; k < 2; ++k) {
      const int count = k == 0 ? pos[b] : neg[b];
      const double h = (bottom - top) * count / peak;
      os << "<rect x=\"" << left + b * bw + k * bw / 2 << "\" y=\"" << bottom - h
         << "\" width=\"" << bw / 2 << "\" height=\"" << h << "\" fill=\""
         << (k == 0 ? "#3b6fd1" : "#e8892f") << "\"/>\n";
    }
  }
  os << "<line x1=\"" << left << "\" y1=\"" << bottom << "\" x2=\"" << W - 20 << "\" y2=\""
     << bottom << "\" stroke=\"black\"/>\n"
     << "<text x=\"" << left << "\" y=\"" << bottom + 20 << "\" font-size=\"12\">0</text>\n"
     << "<text x=\"" << W - 60 << "\" y=\"" << bottom + 20 << "\" font-size=\"12\">"
     << format_alpha(hi) << "</text>\n"
     << "<text x=\"5\" y=\"" << top + 10 << "\" font-size=\"12\">" << peak << "</text>\n</svg>\n";
  return os.str();
}

void write_score_histogram(std::span<const ScoreRecord> records, const std::filesystem::path& csv,
                           const std::filesystem::path& svg) {
  std::ofstream(csv) << scores_to_csv(records);
  std::ofstream(svg) << score_histogram_svg(records);
}

std::string format_ap_table(const APResult& r, const EvalConfig& cfg) {
  if (cfg.benchmark == Benchmark::kVcoco)
    return render_table({"Method", "AP#1_role", "AP#2_role"},
                        {{"hoikit", pct(r.role_ap_s1), pct(r.role_ap_s2)}});
  const std::string setting = cfg.setting == EvalSetting::kDefault ? "Default" : "Known Object";
  return setting + " setting (" + std::string(to_string(cfg.benchmark)) + ")\n" +
         render_table({"Method", "Full", "Rare", "Non-Rare"},
                      {{"hoikit", pct(r.full_map), pct(r.rare_map), pct(r.nonrare_map)}});
}

}  // namespace hoikit
