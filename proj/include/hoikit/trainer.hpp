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

// Training loop: Hungarian-matched set loss plus the weighted ITM
// distillation term from a frozen scorer, optimized with AdamW.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hoikit/dataset.hpp"
#include "hoikit/detector.hpp"
#include "hoikit/evaluation.hpp"
#include "hoikit/itm_scoring.hpp"
#include "hoikit/losses.hpp"

namespace hoikit {

struct TrainConfig {
  int epochs = 30;
  int batch_size = 2;
  double lr = 5e-4;           // heads and decoders
  double lr_backbone = 5e-4;  // patch embedding and encoder
  int lr_drop_epoch = 20;  // learning rates scale by lr_drop_factor after this epoch; 0 disables
  double lr_drop_factor = 0.1;
  std::string optimizer = "adamw";
  double weight_decay = 1e-4;
  double clip_norm = 0.0;  // global gradient norm clip; 0 disables
  // Random horizontal flip and wrap-around shift that keeps every box inside.
  bool augment = true;
  int max_shift = 8;  // pixels
  std::uint64_t seed = 0;

  Margin margin{1.0};
  LossWeights weights{};
  double no_object_weight = 0.1;
  bool use_itm = true;
  PromptVariant variant = PromptVariant::kFull;
  int negative_cap = 16;
  double verb_threshold = 0.5;  // below this a query's verb counts as no-interaction

  std::string scorer = "mock";  // mock | remote
  std::string endpoint;
  MockScorerConfig mock{};

  ModelConfig model{};  // vocabulary sizes are taken from the data

  int eval_every = 5;
  double eval_score_threshold = 0.0;
  bool eval_expand_verbs = true;

  // Data source: a native annotation file, or an in-memory synthetic set.
  std::string data;
  int synthetic_train = 200;
  int synthetic_test = 50;
  std::uint64_t synthetic_seed = 7;
  std::string out_dir;

  void validate() const;
};

// Flat key = value file; '#' starts a comment. Every field is addressable
// (nested ones as e.g. model.embed_dim, mock.sigma, lambda.l1).
TrainConfig parse_train_config(const std::string& text, const std::string& source = "<config>");
TrainConfig load_train_config(const std::filesystem::path& path);
void set_train_option(TrainConfig& cfg, const std::string& key, const std::string& value);
std::string train_config_to_text(const TrainConfig& cfg);

struct TrainData {
  DatasetManifest manifest;
  std::map<std::string, Image> images;
};

// Per-step accounting; l_total is l_hoi + l_itm.
struct StepRecord {
  int epoch = 0;
  int step = 0;
  double l_hoi = 0.0;
  double l_itm = 0.0;
  double l_itm_unweighted = 0.0;  // the plain margin loss over the same sentences
  double l_total = 0.0;
  int positives = 0;
  int negatives = 0;
};

struct EpochMetrics {
  int epoch = 0;
  double l_hoi = 0.0, l_itm = 0.0, l_total = 0.0;
  HoiLossTerms terms;  // unweighted components, averaged over images
  double seconds = 0.0;
  std::optional<APResult> eval;
};

struct TrainResult {
  HoiDetector model;
  std::vector<EpochMetrics> epochs;
  std::vector<StepRecord> steps;
  std::string scorer_digest_before;
  std::string scorer_digest_after;
};

class TrainingError : public Error {
 public:
  using Error::Error;
};

TrainData load_train_data(const TrainConfig& cfg);

// Flips (optional) then rolls the image by (dx, dy) pixels and moves the
// ground-truth boxes to match.
void augment_sample(Image& image, ImageAnnotation& ann, bool flip, int dx, int dy);

// `scorer` may be null only when cfg.use_itm is false.
TrainResult train(const TrainConfig& cfg, const TrainData& data, const ItmScorer* scorer);

std::vector<ImagePredictions> predict(const HoiDetector& model,
                                      std::span<const ImageAnnotation> annotations,
                                      const std::map<std::string, Image>& images,
                                      double score_threshold = 0.0, bool expand_verbs = true);

APResult evaluate_model(const HoiDetector& model, const TrainData& data,
                        double score_threshold = 0.0, bool expand_verbs = true);

std::string epoch_metrics_to_json(const EpochMetrics& m);

}  // namespace hoikit
