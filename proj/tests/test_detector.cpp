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

#include <gtest/gtest.h>

#include <filesystem>
#include <random>

#include "fixtures.hpp"
#include "hoikit/detector.hpp"
#include "hoikit/losses.hpp"
#include "oracles.hpp"

namespace hoikit {
namespace {

ModelConfig tiny_config() {
  ModelConfig c;
  c.image_size = 8;
  c.patch_size = 4;
  c.embed_dim = 8;
  c.heads = 2;
  c.ffn_dim = 16;
  c.encoder_layers = 1;
  c.decoder_layers = 1;
  c.num_queries = 3;
  c.num_objects = 2;
  c.num_verbs = 2;
  c.seed = 4;
  return c;
}

Image random_image(int size, std::uint64_t seed) {
  Image img(size, size);
  std::mt19937_64 rng(seed);
  for (auto& p : img.rgb) p = static_cast<std::uint8_t>(rng() % 256);
  return img;
}

TEST(Detector, ShapeAndRange) {
  const ModelConfig cfg;
  const HoiDetector model(cfg);
  const auto out = model.forward(random_image(cfg.image_size, 1));
  EXPECT_EQ(out.num_queries(), cfg.num_queries);
  EXPECT_EQ(out.num_object_classes(), cfg.num_objects + 1);
  EXPECT_EQ(out.num_verbs(), cfg.num_verbs);
  EXPECT_GE(out.human_boxes.minCoeff(), 0.0);
  EXPECT_LE(out.human_boxes.maxCoeff(), 1.0);
  EXPECT_GE(out.object_boxes.minCoeff(), 0.0);
  EXPECT_LE(out.object_boxes.maxCoeff(), 1.0);
  EXPECT_TRUE(out.object_logits.allFinite());
  EXPECT_THROW(model.forward(random_image(16, 1)), InvalidArgument);
}

TEST(Detector, BatchDeterminism) {
  const auto cfg = tiny_config();
  const HoiDetector model(cfg);
  const auto a = random_image(8, 2), b = random_image(8, 3);
  const std::vector<Image> batch{a, b, a};
  const auto outs = model.forward(batch);
  ASSERT_EQ(outs.size(), 3u);
  EXPECT_EQ(outs[0].verb_logits, outs[2].verb_logits);
  EXPECT_EQ(outs[0].human_boxes, outs[2].human_boxes);
  EXPECT_EQ(outs[1].object_logits, model.forward(b).object_logits);
  // Same seed, same weights.
  EXPECT_EQ(HoiDetector(cfg).serialize(), model.serialize());
}

TEST(Detector, ConfigValidation) {
  auto cfg = tiny_config();
  cfg.heads = 3;
  EXPECT_THROW(HoiDetector{cfg}, InvalidArgument);
  cfg = tiny_config();
  cfg.image_size = 10;
  EXPECT_THROW(HoiDetector{cfg}, InvalidArgument);
  cfg = tiny_config();
  cfg.branches = 2;
  EXPECT_THROW(HoiDetector{cfg}, InvalidArgument);
}

DetectorOutput manual_output(double obj_p, double verb_p) {
  // Object probability obj_p on class 0 of K = 2, verb probability verb_p.
  DetectorOutput out;
  out.human_boxes = Eigen::MatrixXd::Constant(2, 4, 0.3);
  out.object_boxes = Eigen::MatrixXd::Constant(2, 4, 0.4);
  out.object_logits = Eigen::MatrixXd::Zero(2, 3);
  const double rest = (1 - obj_p) / 2;
  out.object_logits.row(0) << std::log(obj_p), std::log(rest), std::log(rest);
  out.object_logits.row(1) << 0.0, 0.0, 20.0;  // no-object
  out.verb_logits = Eigen::MatrixXd::Constant(2, 2, -20.0);
  out.verb_logits(0, 1) = std::log(verb_p / (1 - verb_p));
  return out;
}

TEST(Decode, Fixtures) {
  const auto out = manual_output(0.9, 0.8);
  const auto t = decode(out, 0.0);
  ASSERT_EQ(t.size(), 1u);
  EXPECT_NEAR(t[0].score, 0.72, 1e-12);
  EXPECT_EQ(t[0].object_id, 0);
  EXPECT_EQ(t[0].verb_id, 1);
  EXPECT_EQ(decode(out, 0.0, true).size(), 2u);
  EXPECT_TRUE(decode(out, 1.0).empty());
  EXPECT_TRUE(decode(out, 0.72 + 1e-9).empty());
  EXPECT_THROW(decode(out, 1.5), InvalidArgument);

  auto all_none = out;
  all_none.object_logits.row(0) << 0.0, 0.0, 20.0;
  EXPECT_TRUE(decode(all_none, 0.0).empty());
}

TEST(Decode, ArgmaxTripletsSentinelVerb) {
  const auto out = manual_output(0.9, 0.3);
  const auto t = argmax_triplets(out, 0.5);
  EXPECT_EQ(t[0].verb_id, out.num_verbs());
  EXPECT_EQ(t[1].object_id, 2);
  EXPECT_EQ(argmax_triplets(out, 0.0)[0].verb_id, 1);
}

TEST(ParameterReport, Accounting) {
  const HoiDetector model{ModelConfig{}};
  const auto report = model.parameter_report();
  EXPECT_LE(report.total(), 2'000'000);
  EXPECT_EQ(report.total(), model.num_parameters());
  bool frozen = false;
  for (const auto& r : report.rows)
    if (r.component.find("frozen") != std::string::npos) frozen = r.learnable == 0;
  EXPECT_TRUE(frozen);
  EXPECT_NE(report.format().find("total"), std::string::npos);

  auto big = ModelConfig{};
  big.embed_dim *= 2;
  EXPECT_EQ(HoiDetector(big).parameter_report().attention_projection,
            4 * report.attention_projection);
}

TEST(Checkpoint, RoundTrip) {
  const HoiDetector model(tiny_config());
  const auto path = std::filesystem::temp_directory_path() / "hoikit_test.ckpt";
  model.save(path);
  const auto loaded = HoiDetector::load(path);
  const auto img = random_image(8, 5);
  // Weights are stored as float32.
  EXPECT_LT((loaded.forward(img).verb_logits - model.forward(img).verb_logits).cwiseAbs().maxCoeff(),
            1e-5);
  EXPECT_EQ(loaded.serialize(), model.serialize());
  const auto twice = HoiDetector::deserialize(loaded.serialize());
  EXPECT_EQ(twice.forward(img).verb_logits, loaded.forward(img).verb_logits);
  auto bytes = model.serialize();
  bytes.pop_back();
  EXPECT_THROW(HoiDetector::deserialize(bytes), Error);
  bytes[0] ^= 0xff;
  EXPECT_THROW(HoiDetector::deserialize(bytes), Error);
  std::filesystem::remove(path);
}

// Analytic parameter gradients of a fixed linear functional of the heads
// against central differences.
TEST(Detector, BackwardMatchesFiniteDifferences) {
  HoiDetector model(tiny_config());
  const auto img = random_image(8, 6);
  const auto ref = model.forward(img);
  std::mt19937_64 rng(7);
  std::normal_distribution<double> g(0.0, 1.0);
  HeadGradients c = HeadGradients::zeros_like(ref);
  for (auto* m : {&c.human_boxes, &c.object_boxes, &c.object_logits, &c.verb_logits})
    for (Eigen::Index i = 0; i < m->size(); ++i) m->data()[i] = g(rng);
  auto functional = [&](const DetectorOutput& o) {
    return (o.human_boxes.array() * c.human_boxes.array()).sum() +
           (o.object_boxes.array() * c.object_boxes.array()).sum() +
           (o.object_logits.array() * c.object_logits.array()).sum() +
           (o.verb_logits.array() * c.verb_logits.array()).sum();
  };
  model.zero_grad();
  model.forward_backward(img, [&](const DetectorOutput&) { return c; });
  double worst = 0.0;
  int checked = 0;
  for (auto& p : model.parameters()) {
    for (Eigen::Index i = 0; i < p.size(); i += std::max<Eigen::Index>(1, p.size() / 3)) {
      const double keep = p.value.data()[i];
      const double h = 1e-5;
      p.value.data()[i] = keep + h;
      const double up = functional(model.forward(img));
      p.value.data()[i] = keep - h;
      const double down = functional(model.forward(img));
      p.value.data()[i] = keep;
      const double numeric = (up - down) / (2 * h);
      const double analytic = p.grad.data()[i];
      if (std::abs(numeric) + std::abs(analytic) < 1e-7) continue;
      worst = std::max(worst, oracle::relative_error(analytic, numeric));
      ++checked;
    }
  }
  EXPECT_GT(checked, 50);
  EXPECT_LT(worst, 1e-4);
}

TEST(Detector, GradientStepReducesLoss) {
  HoiDetector model(tiny_config());
  const auto img = random_image(8, 8);
  const std::vector<HOITriplet> gts{fixtures::triplet(.4, .4, .6, .6, 1, 0)};
  auto loss_of = [&](const DetectorOutput& out) {
    const auto m = match_predictions(query_predictions(out), gts);
    return hoi_loss(out, gts, m);
  };
  const double before = loss_of(model.forward(img)).terms.total;
  model.zero_grad();
  model.forward_backward(img, [&](const DetectorOutput& out) { return loss_of(out).grads; });
  for (auto& p : model.parameters()) p.value -= 1e-3 * p.grad;
  EXPECT_LT(loss_of(model.forward(img)).terms.total, before);
}

}  // namespace
}  // namespace hoikit
