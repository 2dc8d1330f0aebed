#include "sci/res2former.hpp"

#include <cmath>
#include <functional>
#include <stdexcept>

#include "json.hpp"
#include "sci/ad/ops.hpp"
#include "sci/random.hpp"

namespace sci::net {

namespace {

using ad::Shape;
using ad::Tensor;
using nlohmann::json;

Tensor uniform_tensor(Shape shape, double bound, Rng& rng) {
  std::vector<double> values(ad::numel(shape));
  for (double& v : values) v = rng.uniform(-bound, bound);
  return Tensor::from(std::move(shape), std::move(values), true);
}

Conv3dLayer make_conv(int in, int out, std::array<int, 3> kernel, std::array<int, 3> stride,
                      std::array<int, 3> padding, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(in * kernel[0] * kernel[1] * kernel[2]));
  Conv3dLayer layer;
  layer.weight = uniform_tensor({out, in, kernel[0], kernel[1], kernel[2]}, bound, rng);
  layer.bias = uniform_tensor({out}, bound, rng);
  layer.stride = stride;
  layer.padding = padding;
  return layer;
}

Conv3dLayer pointwise(int in, int out, Rng& rng) {
  return make_conv(in, out, {1, 1, 1}, {1, 1, 1}, {0, 0, 0}, rng);
}

Conv3dLayer cube(int in, int out, Rng& rng, std::array<int, 3> stride = {1, 1, 1}) {
  return make_conv(in, out, {3, 3, 3}, stride, {1, 1, 1}, rng);
}

void zero(Tensor& t) {
  for (double& v : t.mutable_data()) v = 0.0;
}

using Visitor = std::function<void(const std::string&, Tensor&)>;

void visit_conv(const std::string& name, Conv3dLayer& layer, const Visitor& fn) {
  fn(name + ".weight", layer.weight);
  fn(name + ".bias", layer.bias);
}

void visit_blocks(const std::string& name, std::vector<ResTsaWeights>& blocks, const Visitor& fn) {
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    const std::string block = name + "." + std::to_string(b);
    auto& branches = blocks[b].branches;
    for (std::size_t p = 0; p < branches.size(); ++p) {
      const std::string branch = block + ".tsa" + std::to_string(p);
      TsaWeights& w = branches[p];
      visit_conv(branch + ".local", w.local, fn);
      fn(branch + ".query", w.query);
      fn(branch + ".key", w.key);
      fn(branch + ".value", w.value);
      fn(branch + ".output", w.output);
      visit_conv(branch + ".ffn_expand", w.ffn_expand, fn);
      visit_conv(branch + ".ffn_project", w.ffn_project, fn);
    }
    visit_conv(block + ".fuse", blocks[b].fuse, fn);
  }
}

std::vector<ResTsaWeights> make_stage(int channels, int levels, int depth, Rng& rng) {
  std::vector<ResTsaWeights> blocks;
  for (int i = 0; i < depth; ++i) blocks.push_back(make_restsa(channels, levels, static_cast<std::uint64_t>(rng.uniform() * 0x1p53)));
  return blocks;
}

Tensor run_stage(Tensor x, const std::vector<ResTsaWeights>& blocks, int heads, AttentionTrace* trace) {
  for (const auto& block : blocks) x = restsa_module(x, block, heads, trace);
  return x;
}

void require(bool condition, const std::string& message) {
  if (!condition) throw std::invalid_argument("Res2formerConfig: " + message);
}

}  // namespace

void Res2formerConfig::validate() const {
  require(channels > 0 && heads > 0 && levels > 0, "channels, heads and levels must be positive");
  require(encoder_depth >= 0 && bottleneck_depth >= 0, "depths must be non-negative");
  require(frames > 0 && height > 0 && width > 0, "geometry must be positive");
  require(embed_stride == 1 || embed_stride == 2, "embed_stride must be 1 or 2");
  require(channels % levels == 0, "C=" + std::to_string(channels) + " not divisible by P=" +
                                      std::to_string(levels));
  const int branch = channels / levels;
  require(branch % (2 * heads) == 0, "branch channels C/P=" + std::to_string(branch) +
                                         " not divisible by 2N=" + std::to_string(2 * heads));
  require(channels % (embed_stride * embed_stride) == 0,
          "C must be divisible by embed_stride^2 for the recovery pixel-shuffle");
  const int f = spatial_factor();
  require(height % f == 0 && width % f == 0,
          "H and W must be divisible by " + std::to_string(f) + ", got " + std::to_string(height) +
              "x" + std::to_string(width));
}

std::string Res2formerConfig::to_json() const {
  json j{{"channels", channels},
         {"heads", heads},
         {"levels", levels},
         {"encoder_depth", encoder_depth},
         {"bottleneck_depth", bottleneck_depth},
         {"frames", frames},
         {"height", height},
         {"width", width},
         {"embed_stride", embed_stride},
         {"input", input == DecoderInput::coarse ? "coarse" : "coarse_and_measurement"}};
  return j.dump();
}

Res2formerConfig Res2formerConfig::from_json(const std::string& text) {
  const json j = json::parse(text);
  Res2formerConfig c;
  c.channels = j.at("channels").get<int>();
  c.heads = j.at("heads").get<int>();
  c.levels = j.at("levels").get<int>();
  c.encoder_depth = j.at("encoder_depth").get<int>();
  c.bottleneck_depth = j.at("bottleneck_depth").get<int>();
  c.frames = j.at("frames").get<int>();
  c.height = j.at("height").get<int>();
  c.width = j.at("width").get<int>();
  c.embed_stride = j.value("embed_stride", 1);
  c.input = j.value("input", std::string("coarse")) == "coarse" ? DecoderInput::coarse
                                                                 : DecoderInput::coarse_and_measurement;
  c.validate();
  return c;
}

Res2formerConfig Res2formerConfig::toy(int frames, int height, int width) {
  Res2formerConfig c;
  c.channels = 16;
  c.heads = 2;
  c.levels = 4;
  c.encoder_depth = 1;
  c.bottleneck_depth = 1;
  c.frames = frames;
  c.height = height;
  c.width = width;
  return c;
}

Tensor Conv3dLayer::operator()(const Tensor& x) const {
  return ad::conv3d(x, weight, bias, stride, padding);
}

Tensor temporal_attention(const Tensor& features, const TsaWeights& w, int heads,
                          AttentionTrace* trace) {
  if (features.ndim() != 4) {
    throw std::invalid_argument("temporal_attention expects [c, B, h, w], got " +
                                ad::to_string(features.shape()));
  }
  const int c = features.dim(0);
  const int frames = features.dim(1);
  const int h = features.dim(2);
  const int wd = features.dim(3);
  const int hw = h * wd;
  const int half = c / 2;
  if (c % (2 * heads) != 0 || w.query.dim(0) != c || w.query.dim(1) != half) {
    throw std::invalid_argument("temporal_attention: channel count " + std::to_string(c) +
                                " does not match weights / heads");
  }
  const int d = half / heads;

  // [c, B, h, w] -> [hw, B, c]
  Tensor tokens = ad::permute(ad::reshape(features, {c, frames, hw}), {2, 1, 0});
  auto split_heads = [&](const Tensor& t) {
    return ad::reshape(ad::permute(ad::reshape(t, {hw, frames, heads, d}), {0, 2, 1, 3}),
                       {hw * heads, frames, d});
  };
  Tensor q = split_heads(ad::matmul(tokens, w.query));
  Tensor k = split_heads(ad::matmul(tokens, w.key));
  Tensor v = split_heads(ad::matmul(tokens, w.value));

  Tensor scores = ad::scale(ad::matmul(q, ad::transpose(k, 1, 2)), 1.0 / std::sqrt(static_cast<double>(d)));
  Tensor attention = ad::softmax(scores, 2);
  if (trace) trace->maps.push_back(attention);

  Tensor mixed = ad::matmul(attention, v);  // [hw*N, B, d]
  Tensor concat = ad::reshape(ad::permute(ad::reshape(mixed, {hw, heads, frames, d}), {0, 2, 1, 3}),
                              {hw, frames, half});
  Tensor projected = ad::matmul(concat, w.output);  // [hw, B, c]
  return ad::reshape(ad::permute(projected, {2, 1, 0}), {c, frames, h, wd});
}

Tensor tsa_branch(const Tensor& x, const TsaWeights& w, int heads, AttentionTrace* trace) {
  Tensor local = w.local(x);
  Tensor attended = ad::add(x, temporal_attention(local, w, heads, trace));
  Tensor refined = w.ffn_project(ad::leaky_relu(w.ffn_expand(attended)));
  return ad::add(attended, refined);
}

Tensor restsa_module(const Tensor& x, const ResTsaWeights& w, int heads, AttentionTrace* trace) {
  const int channels = x.dim(0);
  const int levels = static_cast<int>(w.branches.size());
  if (levels == 0 || channels % levels != 0) {
    throw std::invalid_argument("restsa_module: " + std::to_string(channels) +
                                " channels not divisible into " + std::to_string(levels) + " branches");
  }
  auto groups = ad::split(x, std::vector<int>(static_cast<std::size_t>(levels), channels / levels), 0);
  std::vector<Tensor> outputs;
  for (int p = 0; p < levels; ++p) {
    Tensor in = p == 0 ? groups[0] : ad::add(groups[static_cast<std::size_t>(p)], outputs.back());
    outputs.push_back(tsa_branch(in, w.branches[static_cast<std::size_t>(p)], heads, trace));
  }
  return ad::add(x, w.fuse(ad::concat(outputs, 0)));
}

TsaWeights make_tsa(int channels, std::uint64_t seed) {
  Rng rng(seed);
  const int half = channels / 2;
  TsaWeights w;
  w.local = make_conv(channels, channels, {1, 3, 3}, {1, 1, 1}, {0, 1, 1}, rng);
  const double in_bound = 1.0 / std::sqrt(static_cast<double>(channels));
  w.query = uniform_tensor({channels, half}, in_bound, rng);
  w.key = uniform_tensor({channels, half}, in_bound, rng);
  w.value = uniform_tensor({channels, half}, in_bound, rng);
  w.output = uniform_tensor({half, channels}, 1.0 / std::sqrt(static_cast<double>(half)), rng);
  w.ffn_expand = cube(channels, channels, rng);
  w.ffn_project = pointwise(channels, channels, rng);
  return w;
}

ResTsaWeights make_restsa(int channels, int levels, std::uint64_t seed) {
  if (levels <= 0 || channels % levels != 0) {
    throw std::invalid_argument("make_restsa: channels not divisible by levels");
  }
  ResTsaWeights w;
  for (int p = 0; p < levels; ++p) {
    w.branches.push_back(make_tsa(channels / levels, derive_seed(seed, static_cast<std::uint64_t>(p))));
  }
  Rng rng(derive_seed(seed, static_cast<std::uint64_t>(levels)));
  w.fuse = pointwise(channels, channels, rng);
  zero(w.fuse.weight);
  zero(w.fuse.bias);
  return w;
}

Res2former::Res2former(const Res2formerConfig& config, std::uint64_t seed) : config_(config) {
  config_.validate();
  Rng rng(seed);
  const int c = config_.channels;
  const int s = config_.embed_stride;
  embed_ = cube(config_.input_channels(), c, rng);
  embed_refine_ = make_conv(c, c, {1, 3, 3}, {1, s, s}, {0, 1, 1}, rng);
  encoder0_ = make_stage(c, config_.levels, config_.encoder_depth, rng);
  down0_ = cube(c, 2 * c, rng, {1, 2, 2});
  encoder1_ = make_stage(2 * c, config_.levels, config_.encoder_depth, rng);
  down1_ = cube(2 * c, 4 * c, rng, {1, 2, 2});
  bottleneck_ = make_stage(4 * c, config_.levels, config_.bottleneck_depth, rng);
  up1_ = pointwise(4 * c, 4 * 2 * c, rng);
  decoder1_ = make_stage(2 * c, config_.levels, config_.encoder_depth, rng);
  up0_ = pointwise(2 * c, 4 * c, rng);
  decoder0_ = make_stage(c, config_.levels, config_.encoder_depth, rng);
  const int shuffled = c / (s * s);
  recover_mix_ = pointwise(shuffled, shuffled, rng);
  recover_out_ = cube(shuffled, 1, rng);
}

Tensor Res2former::forward(const Tensor& coarse, const Tensor& measurement, AttentionTrace* trace) const {
  const int frames = config_.frames;
  const int height = config_.height;
  const int width = config_.width;
  if (coarse.shape() != Shape{frames, height, width}) {
    throw std::invalid_argument("Res2former expects input " + ad::to_string({frames, height, width}) +
                                ", got " + ad::to_string(coarse.shape()));
  }
  Tensor x = ad::reshape(coarse, {1, frames, height, width});
  if (config_.input == DecoderInput::coarse_and_measurement) {
    if (!measurement.defined() || measurement.shape() != Shape{height, width}) {
      throw std::invalid_argument("Res2former needs an [H, W] measurement plane for this input mode");
    }
    std::vector<Tensor> copies(static_cast<std::size_t>(frames), ad::reshape(measurement, {1, height, width}));
    x = ad::concat({x, ad::reshape(ad::concat(copies, 0), {1, frames, height, width})}, 0);
  }

  const int heads = config_.heads;
  Tensor features = embed_refine_(ad::leaky_relu(embed_(x)));
  Tensor e0 = run_stage(features, encoder0_, heads, trace);
  Tensor e1 = run_stage(down0_(e0), encoder1_, heads, trace);
  Tensor bottom = run_stage(down1_(e1), bottleneck_, heads, trace);
  Tensor d1 = run_stage(ad::add(ad::pixel_shuffle(up1_(bottom), 2), e1), decoder1_, heads, trace);
  Tensor d0 = run_stage(ad::add(ad::pixel_shuffle(up0_(d1), 2), e0), decoder0_, heads, trace);
  Tensor trunk = ad::add(d0, features);

  Tensor up = ad::pixel_shuffle(trunk, config_.embed_stride);
  Tensor out = recover_out_(ad::leaky_relu(recover_mix_(up)));
  return ad::reshape(out, {frames, height, width});
}

std::vector<ad::NamedTensor> Res2former::named_parameters() const {
  std::vector<ad::NamedTensor> out;
  auto& self = const_cast<Res2former&>(*this);
  const Visitor collect = [&](const std::string& name, Tensor& t) {
    if (t.defined()) out.emplace_back(name, t);
  };
  visit_conv("embed", self.embed_, collect);
  visit_conv("embed_refine", self.embed_refine_, collect);
  visit_blocks("encoder0", self.encoder0_, collect);
  visit_conv("down0", self.down0_, collect);
  visit_blocks("encoder1", self.encoder1_, collect);
  visit_conv("down1", self.down1_, collect);
  visit_blocks("bottleneck", self.bottleneck_, collect);
  visit_conv("up1", self.up1_, collect);
  visit_blocks("decoder1", self.decoder1_, collect);
  visit_conv("up0", self.up0_, collect);
  visit_blocks("decoder0", self.decoder0_, collect);
  visit_conv("recover_mix", self.recover_mix_, collect);
  visit_conv("recover_out", self.recover_out_, collect);
  return out;
}

std::vector<Tensor> Res2former::parameters() const {
  std::vector<Tensor> out;
  for (auto& [name, t] : named_parameters()) out.push_back(t);
  return out;
}

std::size_t Res2former::parameter_count() const {
  std::size_t n = 0;
  for (const auto& [name, t] : named_parameters()) n += t.numel();
  return n;
}

void Res2former::load_parameters(const ad::Checkpoint& checkpoint, const std::string& prefix) {
  for (auto& [name, t] : named_parameters()) {
    const Tensor* stored = checkpoint.find(prefix + name);
    if (!stored) throw std::invalid_argument("checkpoint is missing " + prefix + name);
    if (stored->shape() != t.shape()) {
      throw std::invalid_argument("checkpoint tensor " + prefix + name + " has shape " +
                                  ad::to_string(stored->shape()) + ", expected " + ad::to_string(t.shape()));
    }
    std::copy(stored->data().begin(), stored->data().end(), t.mutable_data().begin());
  }
}

void Res2former::zero_block_projections() {
  for (int stage = 0; stage < 5; ++stage) {
    for (auto& block : blocks_at(stage)) {
      zero(block.fuse.weight);
      zero(block.fuse.bias);
    }
  }
}

std::vector<ResTsaWeights>& Res2former::blocks_at(int stage) {
  switch (stage) {
    case 0: return encoder0_;
    case 1: return encoder1_;
    case 2: return bottleneck_;
    case 3: return decoder1_;
    case 4: return decoder0_;
    default: throw std::out_of_range("Res2former has stages 0..4");
  }
}

std::size_t count_params(const Res2former& network) { return network.parameter_count(); }

}  // namespace sci::net
