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

#include "hoikit/detector.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <random>
#include <sstream>

#include "json.hpp"

namespace hoikit {

namespace {

constexpr char kMagic[8] = {'H', 'O', 'I', 'K', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kFormatVersion = 1;

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_f32(std::vector<std::uint8_t>& out, float f) {
  std::uint32_t bits;
  std::memcpy(&bits, &f, sizeof bits);
  put_u32(out, bits);
}

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& b) : bytes_(b) {}
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_++]) << (8 * i);
    return v;
  }
  float f32() {
    const std::uint32_t bits = u32();
    float f;
    std::memcpy(&f, &bits, sizeof f);
    return f;
  }
  std::string str(size_t n) {
    need(n);
    std::string s(bytes_.begin() + static_cast<std::ptrdiff_t>(pos_),
                  bytes_.begin() + static_cast<std::ptrdiff_t>(pos_ + n));
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(size_t n) const {
    if (pos_ + n > bytes_.size()) throw Error("checkpoint truncated");
  }
  const std::vector<std::uint8_t>& bytes_;
  size_t pos_ = 0;
};

Eigen::MatrixXd sine_position_table(int grid, int dim) {
  // Half the channels encode rows, half encode columns.
  Eigen::MatrixXd pos(grid * grid, dim);
  const int half = dim / 2;
  for (int r = 0; r < grid; ++r) {
    for (int c = 0; c < grid; ++c) {
      const int t = r * grid + c;
      for (int k = 0; k < half; ++k) {
        const double freq = M_PI * (k / 2 + 1);
        const double yr = (r + 0.5) / grid * freq;
        const double xc = (c + 0.5) / grid * freq;
        pos(t, k) = (k % 2 == 0) ? std::sin(yr) : std::cos(yr);
        pos(t, half + k) = (k % 2 == 0) ? std::sin(xc) : std::cos(xc);
      }
      for (int k = 2 * half; k < dim; ++k) pos(t, k) = 0.0;
    }
  }
  return pos;
}

}  // namespace

void ModelConfig::validate() const {
  if (image_size <= 0 || patch_size <= 0 || image_size % patch_size != 0)
    throw InvalidArgument("image size must be a positive multiple of patch size");
  if (embed_dim <= 0 || heads <= 0 || embed_dim % heads != 0)
    throw InvalidArgument("embed dim must be divisible by head count");
  if (ffn_dim <= 0 || encoder_layers < 0 || decoder_layers < 1)
    throw InvalidArgument("invalid layer configuration");
  if (num_queries < 1) throw InvalidArgument("need at least one query");
  if (num_objects < 1 || num_verbs < 1) throw InvalidArgument("empty vocabulary");
  if (branches != 1 && branches != 3) throw InvalidArgument("branches must be 1 or 3");
}

std::string model_config_to_json(const ModelConfig& c) {
  nlohmann::ordered_json j = {
      {"image_size", c.image_size},         {"patch_size", c.patch_size},
      {"embed_dim", c.embed_dim},           {"encoder_layers", c.encoder_layers},
      {"decoder_layers", c.decoder_layers}, {"heads", c.heads},
      {"ffn_dim", c.ffn_dim},               {"num_queries", c.num_queries},
      {"num_objects", c.num_objects},       {"num_verbs", c.num_verbs},
      {"branches", c.branches},             {"seed", c.seed}};
  return j.dump();
}

ModelConfig model_config_from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  ModelConfig c;
  c.image_size = j.at("image_size");
  c.patch_size = j.at("patch_size");
  c.embed_dim = j.at("embed_dim");
  c.encoder_layers = j.at("encoder_layers");
  c.decoder_layers = j.at("decoder_layers");
  c.heads = j.at("heads");
  c.ffn_dim = j.at("ffn_dim");
  c.num_queries = j.at("num_queries");
  c.num_objects = j.at("num_objects");
  c.num_verbs = j.at("num_verbs");
  c.branches = j.at("branches");
  c.seed = j.at("seed");
  c.validate();
  return c;
}

std::int64_t ParameterReport::total() const {
  std::int64_t t = 0;
  for (const auto& r : rows) t += r.learnable;
  return t;
}

std::string ParameterReport::format() const {
  std::ostringstream os;
  os << "component              learnable\n";
  for (const auto& r : rows) {
    std::string name = r.component;
    name.resize(22, ' ');
    os << name << " " << r.learnable << "\n";
  }
  os << "total                  " << total() << "\n";
  return os.str();
}

HoiDetector::HoiDetector(const ModelConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  const int d = cfg_.embed_dim;
  std::mt19937_64 rng(cfg_.seed);
  position_ = sine_position_table(cfg_.grid(), d);

  // Parameters are created in a fixed order; the RNG draws follow it.
  auto xavier = [&](int in, int out, double gain) {
    const double a = gain * std::sqrt(6.0 / (in + out));
    std::uniform_real_distribution<double> u(-a, a);
    ag::Matrix m(in, out);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
    return m;
  };
  auto trunc_normal = [&](int rows, int cols, double std) {
    std::normal_distribution<double> n(0.0, 1.0);
    ag::Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) {
      double v;
      do v = n(rng);
      while (std::abs(v) > 2.0);
      m.data()[i] = v * std;
    }
    return m;
  };
  auto linear = [&](const std::string& name, int in, int out, double gain = 1.0) {
    const size_t w = add_param(name + ".weight", xavier(in, out, gain));
    const size_t b = add_param(name + ".bias", ag::Matrix::Zero(1, out));
    return Linear{w, b};
  };
  auto norm = [&](const std::string& name) {
    const size_t g = add_param(name + ".gain", ag::Matrix::Ones(1, d));
    const size_t b = add_param(name + ".bias", ag::Matrix::Zero(1, d));
    return Norm{g, b};
  };
  auto attention = [&](const std::string& name) {
    return Attention{linear(name + ".q", d, d), linear(name + ".k", d, d),
                     linear(name + ".v", d, d), linear(name + ".o", d, d)};
  };

  current_component_ = "patch_embed";
  patch_embed_ = linear("patch_embed", cfg_.patch_dim(), d);

  current_component_ = "encoder";
  for (int l = 0; l < cfg_.encoder_layers; ++l) {
    const std::string p = "encoder." + std::to_string(l);
    EncoderLayer layer;
    layer.n1 = norm(p + ".norm1");
    layer.attn = attention(p + ".attn");
    layer.n2 = norm(p + ".norm2");
    layer.ff1 = linear(p + ".ff1", d, cfg_.ffn_dim);
    layer.ff2 = linear(p + ".ff2", cfg_.ffn_dim, d);
    encoder_.push_back(layer);
  }
  encoder_norm_ = norm("encoder.norm");

  static const char* kBranchNames[] = {"human_branch", "object_branch", "interaction_branch"};
  for (int b = 0; b < cfg_.branches; ++b) {
    current_component_ = cfg_.branches == 3 ? kBranchNames[b] : "decoder";
    const std::string p = current_component_;
    Branch branch;
    branch.queries = add_param(p + ".queries", trunc_normal(cfg_.num_queries, d, 1.0));
    for (int l = 0; l < cfg_.decoder_layers; ++l) {
      const std::string lp = p + "." + std::to_string(l);
      DecoderLayer layer;
      layer.n1 = norm(lp + ".norm1");
      layer.self_attn = attention(lp + ".self_attn");
      layer.n2 = norm(lp + ".norm2");
      layer.cross_attn = attention(lp + ".cross_attn");
      layer.n3 = norm(lp + ".norm3");
      layer.ff1 = linear(lp + ".ff1", d, cfg_.ffn_dim);
      layer.ff2 = linear(lp + ".ff2", cfg_.ffn_dim, d);
      branch.layers.push_back(layer);
    }
    branch.out_norm = norm(p + ".norm");
    branches_.push_back(branch);
  }

  // Output heads start close to zero so early boxes sit near the image centre
  // and class logits near uniform.
  constexpr double kHeadGain = 0.1;
  current_component_ = cfg_.branches == 3 ? "human_branch" : "decoder";
  human_box1_ = linear("human_head.box1", d, d);
  human_box2_ = linear("human_head.box2", d, 4, kHeadGain);
  current_component_ = cfg_.branches == 3 ? "object_branch" : "decoder";
  object_box1_ = linear("object_head.box1", d, d);
  object_box2_ = linear("object_head.box2", d, 4, kHeadGain);
  object_cls_ = linear("object_head.cls", d, cfg_.num_objects + 1, kHeadGain);
  current_component_ = cfg_.branches == 3 ? "interaction_branch" : "decoder";
  verb_cls_ = linear("interaction_head.cls", d, cfg_.num_verbs, kHeadGain);
}

size_t HoiDetector::add_param(const std::string& name, ag::Matrix value) {
  params_.emplace_back(name, std::move(value));
  param_component_.push_back(current_component_);
  return params_.size() - 1;
}

Eigen::MatrixXd HoiDetector::patchify(const Image& image) const {
  if (image.width != cfg_.image_size || image.height != cfg_.image_size)
    throw InvalidArgument("image is " + std::to_string(image.width) + "x" +
                          std::to_string(image.height) + ", model expects " +
                          std::to_string(cfg_.image_size));
  const int g = cfg_.grid(), p = cfg_.patch_size;
  Eigen::MatrixXd patches(cfg_.tokens(), cfg_.patch_dim());
  for (int gy = 0; gy < g; ++gy)
    for (int gx = 0; gx < g; ++gx) {
      int k = 0;
      for (int y = 0; y < p; ++y)
        for (int x = 0; x < p; ++x) {
          const std::uint8_t* px = image.pixel(gx * p + x, gy * p + y);
          for (int ch = 0; ch < 3; ++ch) patches(gy * g + gx, k++) = px[ch] / 255.0 - 0.5;
        }
    }
  return patches;
}

ag::Var HoiDetector::linear(ag::Tape& t, ag::Var x, const Linear& l, const Binder& bind) const {
  return t.add_row(t.matmul(x, bind(l.w)), bind(l.b));
}

ag::Var HoiDetector::norm(ag::Tape& t, ag::Var x, const Norm& n, const Binder& bind) const {
  return t.layer_norm(x, bind(n.gain), bind(n.bias));
}

ag::Var HoiDetector::attention(ag::Tape& t, ag::Var q_in, ag::Var kv_in, const Attention& a,
                               const Binder& bind) const {
  const ag::Var q = linear(t, q_in, a.q, bind);
  const ag::Var k = linear(t, kv_in, a.k, bind);
  const ag::Var v = linear(t, kv_in, a.v, bind);
  const int dh = cfg_.embed_dim / cfg_.heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  std::vector<ag::Var> outs;
  outs.reserve(cfg_.heads);
  for (int h = 0; h < cfg_.heads; ++h) {
    const ag::Var qh = cfg_.heads == 1 ? q : t.slice_cols(q, h * dh, dh);
    const ag::Var kh = cfg_.heads == 1 ? k : t.slice_cols(k, h * dh, dh);
    const ag::Var vh = cfg_.heads == 1 ? v : t.slice_cols(v, h * dh, dh);
    const ag::Var weights = t.softmax_rows(t.scale(t.matmul_nt(qh, kh), scale));
    outs.push_back(t.matmul(weights, vh));
  }
  const ag::Var joined = cfg_.heads == 1 ? outs[0] : t.concat_cols(outs);
  return linear(t, joined, a.o, bind);
}

ag::Var HoiDetector::feed_forward(ag::Tape& t, ag::Var x, const Linear& l1, const Linear& l2,
                                  const Binder& bind) const {
  return linear(t, t.relu(linear(t, x, l1, bind)), l2, bind);
}

HoiDetector::Heads HoiDetector::build_graph(ag::Tape& t, const Eigen::MatrixXd& patches,
                                            const Binder& bind) const {
  ag::Var x = t.add(linear(t, t.constant(patches), patch_embed_, bind), t.constant(position_));
  for (const auto& layer : encoder_) {
    const ag::Var h = norm(t, x, layer.n1, bind);
    x = t.add(x, attention(t, h, h, layer.attn, bind));
    x = t.add(x, feed_forward(t, norm(t, x, layer.n2, bind), layer.ff1, layer.ff2, bind));
  }
  const ag::Var memory = norm(t, x, encoder_norm_, bind);

  std::vector<ag::Var> outputs;
  for (const auto& branch : branches_) {
    ag::Var q = bind(branch.queries);
    for (const auto& layer : branch.layers) {
      const ag::Var h = norm(t, q, layer.n1, bind);
      q = t.add(q, attention(t, h, h, layer.self_attn, bind));
      q = t.add(q, attention(t, norm(t, q, layer.n2, bind), memory, layer.cross_attn, bind));
      q = t.add(q, feed_forward(t, norm(t, q, layer.n3, bind), layer.ff1, layer.ff2, bind));
    }
    outputs.push_back(norm(t, q, branch.out_norm, bind));
  }
  const ag::Var human = outputs[0];
  const ag::Var object = outputs[cfg_.branches == 3 ? 1 : 0];
  const ag::Var interaction = outputs[cfg_.branches == 3 ? 2 : 0];

  Heads heads;
  heads.human_boxes =
      t.sigmoid(linear(t, t.relu(linear(t, human, human_box1_, bind)), human_box2_, bind));
  heads.object_boxes =
      t.sigmoid(linear(t, t.relu(linear(t, object, object_box1_, bind)), object_box2_, bind));
  heads.object_logits = linear(t, object, object_cls_, bind);
  heads.verb_logits = linear(t, interaction, verb_cls_, bind);
  return heads;
}

DetectorOutput HoiDetector::read_heads(const ag::Tape& tape, const Heads& h) {
  DetectorOutput out;
  out.human_boxes = tape.value(h.human_boxes);
  out.object_boxes = tape.value(h.object_boxes);
  out.object_logits = tape.value(h.object_logits);
  out.verb_logits = tape.value(h.verb_logits);
  return out;
}

DetectorOutput HoiDetector::forward(const Image& image) const {
  ag::Tape tape;
  const Eigen::MatrixXd patches = patchify(image);
  const auto heads =
      build_graph(tape, patches, [&](size_t i) { return tape.constant(params_[i].value); });
  return read_heads(tape, heads);
}

std::vector<DetectorOutput> HoiDetector::forward(std::span<const Image> batch) const {
  std::vector<DetectorOutput> outs;
  outs.reserve(batch.size());
  for (const auto& img : batch) outs.push_back(forward(img));
  return outs;
}

DetectorOutput HoiDetector::forward_backward(const Image& image, const LossFn& loss,
                                             double grad_scale) {
  ag::Tape tape;
  const Eigen::MatrixXd patches = patchify(image);
  const auto heads =
      build_graph(tape, patches, [&](size_t i) { return tape.param(params_[i]); });
  DetectorOutput out = read_heads(tape, heads);
  const HeadGradients g = loss(out);
  const std::pair<ag::Var, ag::Matrix> seeds[] = {
      {heads.human_boxes, g.human_boxes * grad_scale},
      {heads.object_boxes, g.object_boxes * grad_scale},
      {heads.object_logits, g.object_logits * grad_scale},
      {heads.verb_logits, g.verb_logits * grad_scale}};
  tape.backward(seeds);
  return out;
}

void HoiDetector::zero_grad() {
  for (auto& p : params_) p.zero_grad();
}

std::int64_t HoiDetector::num_parameters() const {
  std::int64_t n = 0;
  for (const auto& p : params_) n += p.size();
  return n;
}

ParameterReport HoiDetector::parameter_report() const {
  ParameterReport report;
  for (size_t i = 0; i < params_.size(); ++i) {
    auto it = std::find_if(report.rows.begin(), report.rows.end(), [&](const ParameterCount& r) {
      return r.component == param_component_[i];
    });
    if (it == report.rows.end()) {
      report.rows.push_back({param_component_[i], 0});
      it = std::prev(report.rows.end());
    }
    it->learnable += params_[i].size();
    const std::string& n = params_[i].name;
    const bool projection = n.find("attn.") != std::string::npos &&
                            n.size() > 7 && n.compare(n.size() - 7, 7, ".weight") == 0;
    if (projection) report.attention_projection += params_[i].size();
  }
  report.rows.push_back({"itm_scorer (frozen)", 0});
  return report;
}

std::vector<std::uint8_t> HoiDetector::serialize() const {
  std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
  put_u32(out, kFormatVersion);
  const std::string cfg = model_config_to_json(cfg_);
  put_u32(out, static_cast<std::uint32_t>(cfg.size()));
  out.insert(out.end(), cfg.begin(), cfg.end());
  put_u32(out, static_cast<std::uint32_t>(params_.size()));
  for (const auto& p : params_) {
    put_u32(out, static_cast<std::uint32_t>(p.name.size()));
    out.insert(out.end(), p.name.begin(), p.name.end());
    put_u32(out, static_cast<std::uint32_t>(p.value.rows()));
    put_u32(out, static_cast<std::uint32_t>(p.value.cols()));
    for (Eigen::Index r = 0; r < p.value.rows(); ++r)
      for (Eigen::Index c = 0; c < p.value.cols(); ++c)
        put_f32(out, static_cast<float>(p.value(r, c)));
  }
  return out;
}

void HoiDetector::save(const std::filesystem::path& path) const {
  const auto bytes = serialize();
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot write checkpoint " + path.string());
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

HoiDetector HoiDetector::deserialize(const std::vector<std::uint8_t>& bytes) {
  Reader r(bytes);
  if (r.str(8) != std::string(kMagic, 8)) throw Error("not a hoikit checkpoint");
  const std::uint32_t version = r.u32();
  if (version != kFormatVersion)
    throw Error("unsupported checkpoint version " + std::to_string(version));
  HoiDetector model(model_config_from_json(r.str(r.u32())));
  const std::uint32_t count = r.u32();
  if (count != model.params_.size()) throw Error("checkpoint parameter count mismatch");
  for (auto& p : model.params_) {
    const std::string name = r.str(r.u32());
    const std::uint32_t rows = r.u32(), cols = r.u32();
    if (name != p.name || rows != p.value.rows() || cols != p.value.cols())
      throw Error("checkpoint parameter mismatch at " + name);
    for (std::uint32_t i = 0; i < rows; ++i)
      for (std::uint32_t j = 0; j < cols; ++j) p.value(i, j) = r.f32();
  }
  if (!r.done()) throw Error("trailing bytes in checkpoint");
  return model;
}

HoiDetector HoiDetector::load(const std::filesystem::path& path) {
  return deserialize(read_file_bytes(path));
}

}  // namespace hoikit
