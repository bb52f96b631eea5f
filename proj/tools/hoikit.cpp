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

// hoikit command-line interface.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include "CLI11.hpp"
#include "hoikit/dataset.hpp"
#include "hoikit/detector.hpp"
#include "hoikit/digest.hpp"
#include "hoikit/evaluation.hpp"
#include "hoikit/grounding.hpp"
#include "hoikit/itm_scoring.hpp"
#include "hoikit/report.hpp"
#include "hoikit/synthetic.hpp"
#include "hoikit/trainer.hpp"
#include "json.hpp"

using namespace hoikit;
using ordered_json = nlohmann::ordered_json;

namespace {

std::string read_text(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw InvalidArgument("cannot open " + path);
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot write " + path.string());
  f << text;
}

// Options shared by every subcommand that trains or scores.
struct RunOptions {
  std::string config;
  std::string scorer;
  std::string endpoint;
  std::optional<double> alpha;
  std::string variant;
  std::optional<std::uint64_t> seed;
  std::optional<int> epochs;
  std::string out_dir;
  std::vector<std::string> overrides;  // key=value
};

void add_run_options(CLI::App* app, RunOptions& o, bool config_required) {
  auto* c = app->add_option("--config", o.config, "Flat key = value training config");
  if (config_required) c->required();
  app->add_option("--scorer", o.scorer, "ITM scorer: mock | remote");
  app->add_option("--endpoint", o.endpoint, "Scoring service URL for --scorer remote");
  app->add_option("--alpha", o.alpha, "Positive margin");
  app->add_option("--variant", o.variant, "Prompt variant: full | verb | object");
  app->add_option("--seed", o.seed, "Training seed");
  app->add_option("--epochs", o.epochs, "Epoch count");
  app->add_option("--out", o.out_dir, "Output directory for checkpoint and logs");
  app->add_option("--set", o.overrides, "Extra config override key=value (repeatable)");
}

TrainConfig resolve_config(const RunOptions& o) {
  TrainConfig cfg = o.config.empty() ? TrainConfig{} : load_train_config(o.config);
  if (!o.config.empty() && !cfg.data.empty()) {
    const std::filesystem::path data(cfg.data);
    if (data.is_relative())
      cfg.data = (std::filesystem::path(o.config).parent_path() / data).lexically_normal().string();
  }
  for (const auto& kv : o.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw InvalidArgument("--set expects key=value, got " + kv);
    set_train_option(cfg, kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (!o.scorer.empty()) cfg.scorer = o.scorer;
  if (!o.endpoint.empty()) cfg.endpoint = o.endpoint;
  if (o.alpha) cfg.margin.alpha = *o.alpha;
  if (!o.variant.empty()) cfg.variant = parse_prompt_variant(o.variant);
  if (o.seed) cfg.seed = *o.seed;
  if (o.epochs) cfg.epochs = *o.epochs;
  if (!o.out_dir.empty()) cfg.out_dir = o.out_dir;
  cfg.validate();
  return cfg;
}

std::unique_ptr<ItmScorer> make_scorer(const TrainConfig& cfg, const TrainData& data) {
  if (cfg.scorer == "mock") {
    auto s = std::make_unique<MockScorer>(data.manifest.vocabulary, cfg.mock);
    return s;
  }
  RemoteScorerConfig rc;
  rc.endpoint = cfg.endpoint;
  rc.cache_dir = RemoteScorerConfig::default_cache_dir();
  const auto* images = &data.images;
  return std::make_unique<RemoteScorer>(rc, [images](const ImageAnnotation& a) {
    const auto it = images->find(a.image_id);
    if (it == images->end())
      throw ScorerError(ScorerError::Kind::kUnknownImage, "no image for " + a.image_id);
    return encode_ppm(it->second);
  });
}

ordered_json summary_json(const APResult& r) {
  ordered_json j;
  j["full_map"] = r.full_map;
  if (r.rare_map) j["rare_map"] = *r.rare_map;
  if (r.nonrare_map) j["nonrare_map"] = *r.nonrare_map;
  if (r.role_ap_s1) j["role_ap_s1"] = *r.role_ap_s1;
  if (r.role_ap_s2) j["role_ap_s2"] = *r.role_ap_s2;
  return j;
}

std::string error_kind(const std::exception& e) {
  if (const auto* s = dynamic_cast<const ScorerError*>(&e))
    return "scorer_" + std::string(s->kind_name());
  if (dynamic_cast<const IngestionError*>(&e)) return "ingestion_error";
  if (dynamic_cast<const TrainingError*>(&e)) return "training_error";
  if (dynamic_cast<const InvalidArgument*>(&e)) return "invalid_argument";
  return "error";
}

void print_error(const std::string& kind, const std::string& message) {
  ordered_json j;
  j["error"] = kind;
  j["message"] = message;
  std::cerr << j.dump() << std::endl;
}

std::vector<double> parse_alphas(const std::string& list) {
  std::vector<double> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw InvalidArgument("bad margin value: " + item);
    }
  }
  return out;
}

std::vector<std::string> split_list(const std::string& list) {
  std::vector<std::string> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(item);
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hoikit: HOI detection with image-text matching distillation"};
  app.require_subcommand(1);

  RunOptions train_opts;
  auto* train_cmd = app.add_subcommand("train", "Train the toy detector");
  add_run_options(train_cmd, train_opts, true);

  std::string pred_path, gt_path, gt_format = "native", benchmark, setting = "default",
                                  split = "all", eval_json;
  int scenario = 0;
  double iou = 0.5;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a predictions file");
  eval_cmd->add_option("--pred", pred_path, "Predictions JSON")->required();
  eval_cmd->add_option("--gt", gt_path, "Ground-truth annotations")->required();
  eval_cmd->add_option("--gt-format", gt_format, "native | hico_json | vcoco_json");
  eval_cmd->add_option("--benchmark", benchmark, "hico | vcoco | synthetic")->required();
  eval_cmd->add_option("--setting", setting, "default | known_object");
  eval_cmd->add_option("--scenario", scenario, "V-COCO scenario 1 | 2");
  eval_cmd->add_option("--iou", iou, "IoU threshold");
  eval_cmd->add_option("--split", split, "train | test | all");
  eval_cmd->add_option("--json", eval_json, "Write the APResult JSON here");

  std::string ann_path, variant = "full";
  int negative_cap = 16;
  auto* ground_cmd = app.add_subcommand("ground", "Print grounded sentences for annotations");
  ground_cmd->add_option("--annotations", ann_path, "Native annotations")->required();
  ground_cmd->add_option("--variant", variant, "full | verb | object");
  ground_cmd->add_option("--negative-cap", negative_cap, "Negatives per image");

  RunOptions score_opts;
  std::string csv_path = "scores.csv", svg_path = "scores.svg", checkpoint;
  auto* score_cmd = app.add_subcommand("score", "Score grounded sentences and plot histograms");
  score_cmd->add_option("--annotations", ann_path, "Native annotations")->required();
  add_run_options(score_cmd, score_opts, false);
  score_cmd->add_option("--csv", csv_path, "CSV output");
  score_cmd->add_option("--plot", svg_path, "SVG histogram output");
  score_cmd->add_option("--checkpoint", checkpoint, "Use a trained model's predictions");

  RunOptions ablate_opts;
  std::string alphas = "0,1,2", variants = "full,verb,object", ablate_json;
  auto* ablate_cmd = app.add_subcommand("ablate", "Margin or prompt ablation");
  ablate_cmd->require_subcommand(1);
  auto* margin_cmd = ablate_cmd->add_subcommand("margin", "Train one model per margin");
  add_run_options(margin_cmd, ablate_opts, true);
  margin_cmd->add_option("--alphas", alphas, "Comma-separated margins");
  margin_cmd->add_option("--json", ablate_json, "Write the report JSON here");
  auto* prompt_cmd = ablate_cmd->add_subcommand("prompt", "Train one model per prompt variant");
  add_run_options(prompt_cmd, ablate_opts, true);
  prompt_cmd->add_option("--variants", variants, "Comma-separated variants");
  prompt_cmd->add_option("--json", ablate_json, "Write the report JSON here");

  std::string spec_path, synth_out;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic shape-world dataset");
  synth_cmd->add_option("--spec", spec_path, "SyntheticSpec JSON (default: built-in world)");
  synth_cmd->add_option("--out", synth_out, "Output directory")->required();

  RunOptions params_opts;
  auto* params_cmd = app.add_subcommand("params", "Per-component learnable parameter counts");
  add_run_options(params_cmd, params_opts, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    print_error("usage", e.what());
    return 2;
  }

  try {
    if (*train_cmd) {
      const TrainConfig cfg = resolve_config(train_opts);
      const TrainData data = load_train_data(cfg);
      const auto scorer = make_scorer(cfg, data);
      const TrainResult r = train(cfg, data, cfg.use_itm ? scorer.get() : nullptr);
      for (const auto& e : r.epochs) std::cout << epoch_metrics_to_json(e) << "\n";
      ordered_json j;
      j["epochs"] = cfg.epochs;
      j["parameters"] = r.model.num_parameters();
      if (!r.epochs.empty() && r.epochs.back().eval) j["final"] = summary_json(*r.epochs.back().eval);
      j["scorer_digest_before"] = r.scorer_digest_before;
      j["scorer_digest_after"] = r.scorer_digest_after;
      j["checkpoint_sha256"] = sha256_hex(r.model.serialize());
      if (!cfg.out_dir.empty()) {
        const std::filesystem::path dir = cfg.out_dir;
        j["checkpoint"] = (dir / "model.ckpt").string();
        const auto& test = data.manifest.test;
        const auto preds =
            predict(r.model, test, data.images, cfg.eval_score_threshold, cfg.eval_expand_verbs);
        write_text(dir / "predictions.json", predictions_to_json(preds, test) + "\n");
        // In-memory synthetic data has no file on disk to evaluate against.
        if (cfg.data.empty()) save_native(data.manifest, dir / "annotations.json");
        j["predictions"] = (dir / "predictions.json").string();
      }
      std::cout << j.dump() << std::endl;
    } else if (*eval_cmd) {
      EvalConfig ec;
      ec.benchmark = parse_benchmark(benchmark);
      ec.setting = parse_eval_setting(setting);
      ec.iou_threshold = iou;
      ec.scenario = scenario;
      if (ec.benchmark == Benchmark::kVcoco && ec.scenario == 0) ec.scenario = 1;
      const DatasetManifest m = load_annotations(gt_path, parse_annotation_format(gt_format),
                                                 split == "test" ? "test" : "train");
      std::vector<ImageAnnotation> gts;
      if (split == "train" || split == "all") gts.insert(gts.end(), m.train.begin(), m.train.end());
      if (split == "test" || split == "all") gts.insert(gts.end(), m.test.begin(), m.test.end());
      if (split != "train" && split != "test" && split != "all")
        throw InvalidArgument("split must be train, test or all");
      if (m.vocabulary.benchmark != ec.benchmark)
        throw InvalidArgument("--benchmark " + benchmark + " does not match the annotation vocabulary (" +
                              std::string(to_string(m.vocabulary.benchmark)) + ")");
      const auto preds = parse_predictions(read_text(pred_path), gts, m.vocabulary);
      const APResult r = evaluate(preds, gts, m.vocabulary, ec);
      const std::string json = ap_result_to_json(r, m.vocabulary);
      if (!eval_json.empty()) write_text(eval_json, json + "\n");
      std::cout << format_ap_table(r, ec) << summary_json(r).dump() << std::endl;
    } else if (*ground_cmd) {
      const DatasetManifest m = load_annotations(ann_path);
      const PromptVariant v = parse_prompt_variant(variant);
      ordered_json out = ordered_json::array();
      // Scoring is not needed here; a scorer that returns zeros fills the records.
      struct NullScorer final : ItmScorer {
        ITMScoreVector score(const ImageAnnotation&, std::span<const std::string> s) const override {
          return {std::vector<double>(s.size(), 0.0)};
        }
        std::string state_digest() const override { return {}; }
        std::string name() const override { return "none"; }
      } null_scorer;
      std::vector<ImageAnnotation> all = m.train;
      all.insert(all.end(), m.test.begin(), m.test.end());
      for (const auto& a : all) {
        const ImageAnnotation* one = &a;
        const auto recs = collect_scores(std::span(one, 1), m.vocabulary, null_scorer, v, negative_cap);
        int idx = 0;
        for (const auto& r : recs) {
          ordered_json e;
          e["image_id"] = r.image_id;
          e["text"] = r.text;
          e["polarity"] = std::string(to_string(r.polarity));
          e["source_index"] = idx++;
          out.push_back(e);
        }
      }
      std::cout << out.dump(1) << std::endl;
    } else if (*score_cmd) {
      TrainConfig cfg = resolve_config(score_opts);
      cfg.data = ann_path;
      const TrainData data = load_train_data(cfg);
      const auto scorer = make_scorer(cfg, data);
      std::vector<ImageAnnotation> all = data.manifest.train;
      all.insert(all.end(), data.manifest.test.begin(), data.manifest.test.end());
      std::vector<ScoreRecord> recs;
      if (!checkpoint.empty()) {
        const HoiDetector model = HoiDetector::load(checkpoint);
        recs = collect_scores(model, all, data.images, data.manifest.vocabulary, *scorer,
                              cfg.variant, cfg.verb_threshold, cfg.negative_cap);
      } else {
        recs = collect_scores(all, data.manifest.vocabulary, *scorer, cfg.variant, cfg.negative_cap);
      }
      write_score_histogram(recs, csv_path, svg_path);
      ordered_json j;
      j["rows"] = recs.size();
      j["csv"] = csv_path;
      j["plot"] = svg_path;
      j["scorer"] = scorer->name();
      std::cout << j.dump() << std::endl;
    } else if (*ablate_cmd) {
      const TrainConfig cfg = resolve_config(ablate_opts);
      AblationReport report;
      if (*margin_cmd) {
        const auto list = parse_alphas(alphas);
        const TrainData data = load_train_data(cfg);
        const auto scorer = make_scorer(cfg, data);
        report = ablate_margin(cfg, data, *scorer, list);
      } else {
        const auto list = split_list(variants);
        for (const auto& v : list) parse_prompt_variant(v);
        const TrainData data = load_train_data(cfg);
        const auto scorer = make_scorer(cfg, data);
        report = ablate_prompt(cfg, data, *scorer, list);
      }
      if (!ablate_json.empty()) write_text(ablate_json, report.to_json() + "\n");
      std::cout << report.format();
    } else if (*synth_cmd) {
      const SyntheticSpec spec =
          spec_path.empty() ? SyntheticSpec::standard() : synthetic_spec_from_json(read_text(spec_path));
      const DatasetManifest m = write_synthetic(generate_synthetic(spec), synth_out);
      ordered_json j;
      j["annotations"] = (std::filesystem::path(synth_out) / "annotations.json").string();
      j["train"] = m.train.size();
      j["test"] = m.test.size();
      j["seed"] = spec.seed;
      std::cout << j.dump() << std::endl;
    } else if (*params_cmd) {
      const TrainConfig cfg = resolve_config(params_opts);
      ModelConfig mc = cfg.model;
      std::cout << HoiDetector(mc).parameter_report().format();
    }
  } catch (const std::exception& e) {
    print_error(error_kind(e), e.what());
    return 1;
  }
  return 0;
}
