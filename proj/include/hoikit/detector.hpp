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

// Desk-scale query-based HOI detector: patch-embedding transformer encoder
// shared by three decoder branches (human, object, interaction), each with
// its own learned queries. Branch outputs are associated by query index.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "hoikit/autograd.hpp"
#include "hoikit/detector_output.hpp"
#include "hoikit/image.hpp"
#include "hoikit/losses.hpp"

namespace hoikit {

struct ModelConfig {
  int image_size = 32;  // square input, pixels
  int patch_size = 4;
  int embed_dim = 64;
  int encoder_layers = 2;
  int decoder_layers = 2;
  int heads = 4;
  int ffn_dim = 128;
  int num_queries = 16;
  int num_objects = 3;  // K, without the no-object class
  int num_verbs = 3;
  int branches = 3;     // 3 = separate human/object/interaction decoders, 1 = shared
  std::uint64_t seed = 0;

  void validate() const;
  int grid() const { return image_size / patch_size; }
  int tokens() const { return grid() * grid(); }
  int patch_dim() const { return patch_size * patch_size * 3; }
};

std::string model_config_to_json(const ModelConfig& cfg);
ModelConfig model_config_from_json(const std::string& text);

struct ParameterCount {
  std::string component;
  std::int64_t learnable = 0;
};

struct ParameterReport {
  std::vector<ParameterCount> rows;
  std::int64_t attention_projection = 0;  // all q/k/v/o projection weights
  std::int64_t total() const;
  std::string format() const;
};

class HoiDetector {
 public:
  explicit HoiDetector(const ModelConfig& cfg);

  const ModelConfig& config() const { return cfg_; }

  DetectorOutput forward(const Image& image) const;
  std::vector<DetectorOutput> forward(std::span<const Image> batch) const;

  // Runs a tracked forward pass, asks `loss` for head gradients, and
  // accumulates parameter gradients (scaled by `grad_scale`).
  using LossFn = std::function<HeadGradients(const DetectorOutput&)>;
  DetectorOutput forward_backward(const Image& image, const LossFn& loss,
                                  double grad_scale = 1.0);

  std::vector<ag::Parameter>& parameters() { return params_; }
  const std::vector<ag::Parameter>& parameters() const { return params_; }
  void zero_grad();
  std::int64_t num_parameters() const;
  ParameterReport parameter_report() const;

  // Single-file archive: magic, version, config echo, named float32 arrays.
  void save(const std::filesystem::path& path) const;
  std::vector<std::uint8_t> serialize() const;
  static HoiDetector load(const std::filesystem::path& path);
  static HoiDetector deserialize(const std::vector<std::uint8_t>& bytes);

  // Pixel patches scaled to [-0.5, 0.5], tokens x patch_dim.
  Eigen::MatrixXd patchify(const Image& image) const;

 private:
  struct Linear { size_t w, b; };
  struct Norm { size_t gain, bias; };
  struct Attention { Linear q, k, v, o; };
  struct EncoderLayer { Norm n1, n2; Attention attn; Linear ff1, ff2; };
  struct DecoderLayer { Norm n1, n2, n3; Attention self_attn, cross_attn; Linear ff1, ff2; };
  struct Branch { size_t queries; std::vector<DecoderLayer> layers; Norm out_norm; };

  using Binder = std::function<ag::Var(size_t)>;
  struct Heads { ag::Var human_boxes, object_boxes, object_logits, verb_logits; };

  size_t add_param(const std::string& name, ag::Matrix value);

  Heads build_graph(ag::Tape& tape, const Eigen::MatrixXd& patches, const Binder& bind) const;
  ag::Var linear(ag::Tape& t, ag::Var x, const Linear& l, const Binder& bind) const;
  ag::Var norm(ag::Tape& t, ag::Var x, const Norm& n, const Binder& bind) const;
  ag::Var attention(ag::Tape& t, ag::Var q_in, ag::Var kv_in, const Attention& a,
                    const Binder& bind) const;
  ag::Var feed_forward(ag::Tape& t, ag::Var x, const Linear& l1, const Linear& l2,
                       const Binder& bind) const;
  static DetectorOutput read_heads(const ag::Tape& tape, const Heads& h);

  ModelConfig cfg_;
  std::vector<ag::Parameter> params_;
  std::vector<std::string> param_component_;
  std::string current_component_;
  Eigen::MatrixXd position_;  // fixed 2-D sine/cosine table, tokens x dim

  Linear patch_embed_{};
  std::vector<EncoderLayer> encoder_;
  Norm encoder_norm_{};
  std::vector<Branch> branches_;
  Linear human_box1_{}, human_box2_{}, object_box1_{}, object_box2_{};
  Linear object_cls_{}, verb_cls_{};
};

}  // namespace hoikit
