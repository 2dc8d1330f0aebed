#pragma once

// Res2former decoder: feature extraction, a two-level U-shaped stack of
// ResTSA modules (hierarchical temporal self-attention), and video recovery.
//
// Feature maps are laid out [C, B, H, W]: channels first, frames as the conv
// depth axis. Attention only mixes along B.

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "sci/ad/checkpoint.hpp"
#include "sci/ad/tensor.hpp"

namespace sci::net {

enum class DecoderInput {
  coarse,                   // Phi^T (Phi Phi^T)^{-1} y only
  coarse_and_measurement,   // plus the normalized measurement broadcast over frames
};

struct Res2formerConfig {
  int channels = 96;        // C at the first level
  int heads = 4;            // N
  int levels = 4;           // P, TSA branches per ResTSA module
  int encoder_depth = 3;    // N1
  int bottleneck_depth = 3; // N2
  int frames = 8;
  int height = 256;
  int width = 256;
  DecoderInput input = DecoderInput::coarse;
  /// Spatial stride of the second extraction conv (1 or 2). With 2 the
  /// trunk runs at half resolution and recovery pixel-shuffles back up.
  int embed_stride = 1;

  /// Required divisor of H and W.
  int spatial_factor() const { return 4 * embed_stride; }

  /// Throws std::invalid_argument when an invariant fails.
  void validate() const;
  int input_channels() const { return input == DecoderInput::coarse ? 1 : 2; }

  std::string to_json() const;
  static Res2formerConfig from_json(const std::string& text);

  static Res2formerConfig toy(int frames = 8, int height = 32, int width = 32);
};

struct Conv3dLayer {
  ad::Tensor weight;  // [out, in, kd, kh, kw]
  ad::Tensor bias;    // [out]
  std::array<int, 3> stride{1, 1, 1};
  std::array<int, 3> padding{0, 0, 0};

  ad::Tensor operator()(const ad::Tensor& x) const;
};

struct TsaWeights {
  Conv3dLayer local;       // 1x3x3 per-frame conv before attention
  ad::Tensor query;        // [c, c/2]
  ad::Tensor key;          // [c, c/2]
  ad::Tensor value;        // [c, c/2]
  ad::Tensor output;       // [c/2, c]
  Conv3dLayer ffn_expand;  // 3x3x3
  Conv3dLayer ffn_project; // 1x1x1
};

struct ResTsaWeights {
  std::vector<TsaWeights> branches;
  Conv3dLayer fuse;  // 1x1x1 over the concatenated branch outputs
};

/// Captures attention maps during a forward pass (one [hw*N, B, B] tensor per call).
struct AttentionTrace {
  std::vector<ad::Tensor> maps;
};

/// Multi-head self-attention across frames at every spatial position.
/// `features` is [c, B, h, w] after the local conv; returns the concatenated
/// heads mapped back to c channels (no residual).
ad::Tensor temporal_attention(const ad::Tensor& features, const TsaWeights& w, int heads,
                              AttentionTrace* trace = nullptr);

/// One TSA branch: local conv, temporal attention with residual, feed-forward
/// refinement with residual.
ad::Tensor tsa_branch(const ad::Tensor& x, const TsaWeights& w, int heads,
                      AttentionTrace* trace = nullptr);

/// P-level hierarchical residual module over channel groups.
ad::Tensor restsa_module(const ad::Tensor& x, const ResTsaWeights& w, int heads,
                         AttentionTrace* trace = nullptr);

TsaWeights make_tsa(int channels, std::uint64_t seed);
ResTsaWeights make_restsa(int channels, int levels, std::uint64_t seed);

class Res2former {
 public:
  Res2former() = default;
  Res2former(const Res2formerConfig& config, std::uint64_t seed);

  const Res2formerConfig& config() const noexcept { return config_; }

  /// coarse: [B, H, W]; measurement: [H, W] (required for coarse_and_measurement).
  /// Returns the reconstructed [B, H, W] video.
  ad::Tensor forward(const ad::Tensor& coarse, const ad::Tensor& measurement = {},
                     AttentionTrace* trace = nullptr) const;

  /// Every trainable tensor with a stable dotted name, in registration order.
  std::vector<ad::NamedTensor> named_parameters() const;
  std::vector<ad::Tensor> parameters() const;
  std::size_t parameter_count() const;

  /// Copies values from a checkpoint; throws if a name or shape is missing.
  void load_parameters(const ad::Checkpoint& checkpoint, const std::string& prefix = "decoder.");

  /// Zeroes the fuse projection of every ResTSA module.
  void zero_block_projections();

  std::vector<ResTsaWeights>& blocks_at(int stage);

 private:
  Res2formerConfig config_;
  Conv3dLayer embed_;
  Conv3dLayer embed_refine_;
  std::vector<ResTsaWeights> encoder0_;
  Conv3dLayer down0_;
  std::vector<ResTsaWeights> encoder1_;
  Conv3dLayer down1_;
  std::vector<ResTsaWeights> bottleneck_;
  Conv3dLayer up1_;
  std::vector<ResTsaWeights> decoder1_;
  Conv3dLayer up0_;
  std::vector<ResTsaWeights> decoder0_;
  Conv3dLayer recover_mix_;
  Conv3dLayer recover_out_;
};

std::size_t count_params(const Res2former& network);

}  // namespace sci::net
