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

#include "hoikit/itm_scoring.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <random>
#include <sstream>

#include "hoikit/digest.hpp"
#include "hoikit/grounding.hpp"
#include "hoikit/image.hpp"
#include "httplib.h"
#include "json.hpp"

namespace hoikit {

namespace {

std::string exact(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%a", v);
  return buf;
}

}  // namespace

void ITMScoreVector::validate(size_t expected) const {
  if (scores.size() != expected)
    throw ScorerError(ScorerError::Kind::kMalformedResponse,
                      "scorer returned " + std::to_string(scores.size()) + " scores for " +
                          std::to_string(expected) + " sentences");
  for (double s : scores)
    if (!std::isfinite(s) || s < 0)
      throw ScorerError(ScorerError::Kind::kMalformedResponse,
                        "scorer returned a negative or non-finite score");
}

std::string_view ScorerError::kind_name() const {
  switch (kind_) {
    case Kind::kTimeout: return "timeout";
    case Kind::kMalformedResponse: return "malformed_response";
    case Kind::kHttpStatus: return "http_status";
    case Kind::kTransport: return "transport";
    case Kind::kUnknownImage: return "unknown_image";
  }
  return "unknown";
}

void MockScorerConfig::validate() const {
  if (!(positive_level > negative_level && negative_level >= 0))
    throw InvalidArgument("mock scorer needs positive_level > negative_level >= 0");
  if (!(noise_sigma >= 0)) throw InvalidArgument("noise sigma must be >= 0");
}

double mock_oracle_score(const ImageAnnotation& annotation, const Vocabulary& vocab,
                         std::string_view sentence, const MockScorerConfig& cfg) {
  bool grounded = false;
  for (const auto& t : annotation.gt_triplets) {
    if (has_sentinel(t, vocab)) continue;
    for (PromptVariant v : {PromptVariant::kFull, PromptVariant::kVerb, PromptVariant::kObject}) {
      if (ground_triplet(t, vocab, v) == sentence) {
        grounded = true;
        break;
      }
    }
    if (grounded) break;
  }
  double score = grounded ? cfg.positive_level : cfg.negative_level;
  if (cfg.noise_sigma > 0) {
    std::uint64_t h = fnv1a64(annotation.image_id, cfg.seed ^ 0x9e3779b97f4a7c15ULL);
    h = fnv1a64("\x1f", h);
    h = fnv1a64(sentence, h);
    std::mt19937_64 rng(h);
    std::normal_distribution<double> noise(0.0, cfg.noise_sigma);
    score = std::max(0.0, score + noise(rng));
  }
  return score;
}

MockScorer::MockScorer(Vocabulary vocab, MockScorerConfig cfg)
    : vocab_(std::move(vocab)), cfg_(cfg) {
  cfg_.validate();
}

ITMScoreVector MockScorer::score(const ImageAnnotation& image,
                                 std::span<const std::string> sentences) const {
  ITMScoreVector out;
  out.scores.reserve(sentences.size());
  for (const auto& s : sentences) {
    if (s.empty()) throw InvalidArgument("cannot score an empty sentence");
    out.scores.push_back(mock_oracle_score(image, vocab_, s, cfg_));
  }
  return out;
}

ITMScoreVector MockScorer::score(std::string_view image_id,
                                 std::span<const std::string> sentences) const {
  const auto it = known_.find(std::string(image_id));
  if (it == known_.end())
    throw ScorerError(ScorerError::Kind::kUnknownImage,
                      "mock scorer has no annotation for image " + std::string(image_id));
  return score(it->second, sentences);
}

void MockScorer::register_annotations(std::span<const ImageAnnotation> annotations) {
  for (const auto& a : annotations) known_[a.image_id] = a;
}

std::string MockScorer::state_digest() const {
  std::ostringstream os;
  os << "mock|" << exact(cfg_.positive_level) << "|" << exact(cfg_.negative_level) << "|"
     << exact(cfg_.noise_sigma) << "|" << cfg_.seed;
  for (const auto& n : vocab_.object_names) os << "|o:" << n;
  for (const auto& n : vocab_.verb_names) os << "|v:" << n;
  return sha256_hex(os.str());
}

std::filesystem::path RemoteScorerConfig::default_cache_dir() {
  if (const char* dir = std::getenv("HOIKIT_CACHE_DIR"); dir && *dir) return dir;
  return {};
}

RemoteScorer::RemoteScorer(RemoteScorerConfig cfg, ImageLoader loader)
    : cfg_(std::move(cfg)), loader_(std::move(loader)) {
  if (cfg_.batch_size == 0) throw InvalidArgument("batch size must be positive");
  if (cfg_.retries < 0) throw InvalidArgument("retries must be >= 0");
  if (!loader_) {
    loader_ = [](const ImageAnnotation& a) {
      if (a.image_ref.empty())
        throw ScorerError(ScorerError::Kind::kUnknownImage,
                          "image " + a.image_id + " has no file reference");
      return read_file_bytes(a.image_ref);
    };
  }
  if (!cfg_.cache_dir.empty()) load_persisted();
}

ITMScoreVector RemoteScorer::score(const ImageAnnotation& image,
                                   std::span<const std::string> sentences) const {
  if (sentences.empty()) return {};
  const auto bytes = loader_(image);
  return score_bytes(bytes, sentences);
}

ITMScoreVector RemoteScorer::score_bytes(std::span<const std::uint8_t> image_bytes,
                                         std::span<const std::string> sentences) const {
  ITMScoreVector out;
  out.scores.assign(sentences.size(), 0.0);
  if (sentences.empty()) return out;
  for (const auto& s : sentences)
    if (s.empty()) throw InvalidArgument("cannot score an empty sentence");
  const std::string digest = sha256_hex(image_bytes);

  std::vector<size_t> missing;
  for (size_t i = 0; i < sentences.size(); ++i) {
    const auto hit = cache_enabled_ ? cached(digest, sentences[i]) : std::nullopt;
    if (hit)
      out.scores[i] = *hit;
    else
      missing.push_back(i);
  }
  if (missing.empty()) return out;

  const std::string image_b64 = base64_encode(image_bytes);
  for (size_t start = 0; start < missing.size(); start += cfg_.batch_size) {
    const size_t end = std::min(missing.size(), start + cfg_.batch_size);
    std::vector<std::string> texts;
    for (size_t k = start; k < end; ++k) texts.push_back(sentences[missing[k]]);
    const auto scores = request(image_b64, texts);
    for (size_t k = start; k < end; ++k) {
      out.scores[missing[k]] = scores[k - start];
      if (cache_enabled_) store(digest, sentences[missing[k]], scores[k - start]);
    }
  }
  return out;
}

std::vector<double> RemoteScorer::request(const std::string& image_b64,
                                          std::span<const std::string> texts) const {
  const nlohmann::json body = {{"image_b64", image_b64},
                               {"texts", std::vector<std::string>(texts.begin(), texts.end())}};
  const std::string payload = body.dump();
  const auto secs = static_cast<time_t>(cfg_.timeout_seconds);
  const auto usecs = static_cast<time_t>((cfg_.timeout_seconds - secs) * 1e6);

  std::optional<ScorerError> last;
  for (int attempt = 0; attempt <= cfg_.retries; ++attempt) {
    httplib::Client client(cfg_.endpoint);
    client.set_connection_timeout(secs, usecs);
    client.set_read_timeout(secs, usecs);
    client.set_write_timeout(secs, usecs);
    const auto started = std::chrono::steady_clock::now();
    ++calls_;
    auto res = client.Post(cfg_.path, payload, "application/json");
    if (!res) {
      const double elapsed =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
      const bool timed_out = res.error() == httplib::Error::ConnectionTimeout ||
                             (res.error() == httplib::Error::Read &&
                              elapsed >= 0.9 * cfg_.timeout_seconds);
      last.emplace(timed_out ? ScorerError::Kind::kTimeout : ScorerError::Kind::kTransport,
                   "itm request to " + cfg_.endpoint + cfg_.path + " failed: " +
                       httplib::to_string(res.error()));
      continue;
    }
    if (res->status < 200 || res->status >= 300)
      throw ScorerError(ScorerError::Kind::kHttpStatus,
                        "itm service returned HTTP " + std::to_string(res->status));
    ITMScoreVector parsed;
    try {
      const auto j = nlohmann::json::parse(res->body);
      for (const auto& v : j.at("scores")) parsed.scores.push_back(v.get<double>());
    } catch (const nlohmann::json::exception& e) {
      throw ScorerError(ScorerError::Kind::kMalformedResponse,
                        std::string("itm response is not valid: ") + e.what());
    }
    parsed.validate(texts.size());
    return parsed.scores;
  }
  throw *last;
}

std::optional<double> RemoteScorer::cached(const std::string& digest,
                                           const std::string& text) const {
  std::shared_lock lock(mutex_);
  const auto it = cache_.find({digest, text});
  if (it == cache_.end()) return std::nullopt;
  return it->second;
}

void RemoteScorer::store(const std::string& digest, const std::string& text, double score) const {
  std::unique_lock lock(mutex_);
  const bool inserted = cache_.emplace(std::make_pair(digest, text), score).second;
  if (!inserted || cfg_.cache_dir.empty()) return;
  std::filesystem::create_directories(cfg_.cache_dir);
  std::ofstream f(cfg_.cache_dir / "itm_cache.jsonl", std::ios::app);
  f << nlohmann::json{{"image", digest}, {"text", text}, {"score", score}}.dump() << "\n";
}

void RemoteScorer::load_persisted() {
  std::ifstream f(cfg_.cache_dir / "itm_cache.jsonl");
  std::string line;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      cache_.emplace(std::make_pair(j.at("image").get<std::string>(),
                                    j.at("text").get<std::string>()),
                     j.at("score").get<double>());
    } catch (const nlohmann::json::exception&) {
      // A torn trailing line from an interrupted run; skip it.
    }
  }
}

size_t RemoteScorer::cache_size() const {
  std::shared_lock lock(mutex_);
  return cache_.size();
}

std::string RemoteScorer::state_digest() const {
  return sha256_hex("remote|" + cfg_.endpoint + "|" + cfg_.path);
}

}  // namespace hoikit
