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

// Image-text matching scorers. The scorer is a frozen teacher: it maps
// (image, sentence) to a nonnegative score and is never trained.

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "hoikit/core.hpp"

namespace hoikit {

struct ITMScoreVector {
  std::vector<double> scores;

  size_t size() const { return scores.size(); }
  // Throws unless every score is finite and >= 0 and the length matches.
  void validate(size_t expected) const;
};

class ScorerError : public Error {
 public:
  enum class Kind { kTimeout, kMalformedResponse, kHttpStatus, kTransport, kUnknownImage };
  ScorerError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}
  Kind kind() const { return kind_; }
  std::string_view kind_name() const;

 private:
  Kind kind_;
};

class ItmScorer {
 public:
  virtual ~ItmScorer() = default;
  virtual ITMScoreVector score(const ImageAnnotation& image,
                               std::span<const std::string> sentences) const = 0;
  // Digest of everything that determines the scores; caches excluded.
  virtual std::string state_digest() const = 0;
  virtual std::string name() const = 0;
};

struct MockScorerConfig {
  double positive_level = 2.0;
  double negative_level = 0.1;
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;

  void validate() const;
};

// positive_level when the sentence equals a grounding of one of the image's
// ground-truth triplets (under any prompt variant), negative_level otherwise;
// plus optional Gaussian noise seeded by (seed, image, sentence), clipped at 0.
double mock_oracle_score(const ImageAnnotation& annotation, const Vocabulary& vocab,
                         std::string_view sentence, const MockScorerConfig& cfg);

class MockScorer final : public ItmScorer {
 public:
  MockScorer(Vocabulary vocab, MockScorerConfig cfg);

  ITMScoreVector score(const ImageAnnotation& image,
                       std::span<const std::string> sentences) const override;
  // Scores by image id against annotations registered up front.
  ITMScoreVector score(std::string_view image_id, std::span<const std::string> sentences) const;
  void register_annotations(std::span<const ImageAnnotation> annotations);

  std::string state_digest() const override;
  std::string name() const override { return "mock"; }
  const MockScorerConfig& config() const { return cfg_; }

 private:
  Vocabulary vocab_;
  MockScorerConfig cfg_;
  std::unordered_map<std::string, ImageAnnotation> known_;
};

struct RemoteScorerConfig {
  std::string endpoint = "http://127.0.0.1:8000";  // scheme://host:port
  std::string path = "/itm";
  double timeout_seconds = 30.0;
  int retries = 2;
  size_t batch_size = 32;
  // Persistent cache location; empty disables persistence.
  std::filesystem::path cache_dir;

  // Fills cache_dir from HOIKIT_CACHE_DIR when it is unset.
  static std::filesystem::path default_cache_dir();
};

// Client for the HTTP scoring service:
//   POST {path} {"image_b64": ..., "texts": [...]} -> {"scores": [...]}
// Responses are cached by (SHA-256 of image bytes, sentence).
class RemoteScorer final : public ItmScorer {
 public:
  using ImageLoader = std::function<std::vector<std::uint8_t>(const ImageAnnotation&)>;

  explicit RemoteScorer(RemoteScorerConfig cfg, ImageLoader loader = {});

  ITMScoreVector score(const ImageAnnotation& image,
                       std::span<const std::string> sentences) const override;
  ITMScoreVector score_bytes(std::span<const std::uint8_t> image_bytes,
                             std::span<const std::string> sentences) const;

  std::string state_digest() const override;
  std::string name() const override { return "remote"; }

  size_t network_calls() const { return calls_.load(); }
  size_t cache_size() const;
  void set_cache_enabled(bool enabled) { cache_enabled_ = enabled; }

 private:
  std::vector<double> request(const std::string& image_b64,
                              std::span<const std::string> texts) const;
  std::optional<double> cached(const std::string& digest, const std::string& text) const;
  void store(const std::string& digest, const std::string& text, double score) const;
  void load_persisted();

  RemoteScorerConfig cfg_;
  ImageLoader loader_;
  bool cache_enabled_ = true;
  mutable std::shared_mutex mutex_;
  mutable std::map<std::pair<std::string, std::string>, double> cache_;
  mutable std::atomic<size_t> calls_{0};
};

}  // namespace hoikit
