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

// Ablation tables, score histograms and evaluation tables.

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hoikit/evaluation.hpp"
#include "hoikit/grounding.hpp"
#include "hoikit/trainer.hpp"

namespace hoikit {

// Published V-COCO role AP (scenario 1, scenario 2), for annotation only.
std::optional<std::pair<double, double>> published_margin_reference(double alpha);
std::optional<std::pair<double, double>> published_prompt_reference(PromptVariant variant);

struct AblationRow {
  std::string setting;  // as given by the caller
  APResult result;
  std::optional<std::pair<double, double>> reference;
};

struct AblationReport {
  std::string kind;    // margin | prompt
  std::string column;  // first column header
  Benchmark benchmark = Benchmark::kSynthetic;
  std::vector<AblationRow> rows;

  std::string format() const;  // plain-text table
  std::string to_json() const;
};

AblationReport ablate_margin(const TrainConfig& cfg, const TrainData& data,
                             const ItmScorer& scorer, std::span<const double> alphas);
// Every tag is parsed before any training starts.
AblationReport ablate_prompt(const TrainConfig& cfg, const TrainData& data,
                             const ItmScorer& scorer, std::span<const std::string> variants);

std::string format_alpha(double alpha);

struct ScoreRecord {
  std::string image_id;
  Polarity polarity = Polarity::kPositive;
  std::string text;
  double score = 0.0;
};

// Ground-truth based sets: one positive per ground-truth triplet, negatives
// from vocabulary categories absent from the image (at most `negative_cap`).
std::vector<ScoreRecord> collect_scores(std::span<const ImageAnnotation> annotations,
                                        const Vocabulary& vocab, const ItmScorer& scorer,
                                        PromptVariant variant, int negative_cap = 16);
// Prediction based sets, built exactly as in a training step.
std::vector<ScoreRecord> collect_scores(const HoiDetector& model,
                                        std::span<const ImageAnnotation> annotations,
                                        const std::map<std::string, Image>& images,
                                        const Vocabulary& vocab, const ItmScorer& scorer,
                                        PromptVariant variant, double verb_threshold = 0.5,
                                        int negative_cap = 16);

std::string scores_to_csv(std::span<const ScoreRecord> records);
std::string score_histogram_svg(std::span<const ScoreRecord> records, int bins = 20);
void write_score_histogram(std::span<const ScoreRecord> records, const std::filesystem::path& csv,
                           const std::filesystem::path& svg);

// Benchmark-style summary of one evaluation.
std::string format_ap_table(const APResult& result, const EvalConfig& cfg);

}  // namespace hoikit
