#pragma once

#include <utility>
#include <vector>

#include <torch/nn.h>

#include "styleblend/config.hpp"
#include "styleblend/encoder.hpp"
#include "styleblend/rng.hpp"

namespace styleblend {

inline constexpr double kAdainEpsilon = 1e-5;

struct AdainOptions {
  double eps = kAdainEpsilon;
  /// Stops gradients through the instance statistics. Forward values are
  /// unchanged, so only a gradient check can notice; used by the selfcheck
  /// mutation harness.
  bool detach_statistics = false;
};

/// [gamma, beta] = T w, split in halves. `w` is (N, D); returns two (N, C).
std::pair<torch::Tensor, torch::Tensor> style_to_affine(const torch::Tensor& w,
                                                        torch::nn::Linear affine);

/// (x - mean) / (std + eps) * gamma + beta with per-sample, per-channel
/// spatial statistics (population std). x is (N, C, H, W), gamma/beta (N, C).
torch::Tensor adain_modulate(const torch::Tensor& x, const torch::Tensor& gamma,
                             const torch::Tensor& beta, const AdainOptions& opts = {});

torch::Tensor adain(const torch::Tensor& x, const torch::Tensor& w,
                    torch::nn::Linear affine, const AdainOptions& opts = {});

/// conv3x3 -> per-pixel noise * learned per-channel scale -> LeakyReLU -> AdaIN.
struct StyleLayerImpl : torch::nn::Module {
  StyleLayerImpl(int64_t in, int64_t out, int64_t style_dim);

  torch::Tensor forward(const torch::Tensor& x, const torch::Tensor& w, RngStream& noise,
                        const AdainOptions& opts = {});
  void reset(RngStream& rng);

  torch::nn::Conv2d conv{nullptr};
  torch::Tensor noise_scale;
  torch::nn::Linear affine{nullptr};
};
TORCH_MODULE(StyleLayer);

/// One resolution of the decoder: optional x2 upsample, two style layers,
/// and, when a pyramid level has this resolution, the target shortcut.
struct DecoderBlockImpl : torch::nn::Module {
  DecoderBlockImpl(int64_t in, int64_t out, int64_t style_dim, bool upsample,
                   int64_t shortcut_channels);

  bool upsample;
  StyleLayer layer0{nullptr}, layer1{nullptr};
  torch::nn::Conv2d shortcut{nullptr};
  torch::Tensor gate;
};
TORCH_MODULE(DecoderBlock);

/// Style decoder: learned 4x4 constant, decoder_blocks progressive blocks
/// (block b renders 2^(b+2) and consumes style elements 2b and 2b+1),
/// extra "tail" style layers at full resolution for any remaining
/// elements, then a 1x1 to-RGB conv and tanh.
struct DecoderImpl : torch::nn::Module {
  explicit DecoderImpl(const ModelConfig& cfg);

  torch::Tensor forward(const torch::Tensor& codes, const FeaturePyramid& pyramid,
                        RngStream& noise, const AdainOptions& opts = {});
  void reset(RngStream& rng);

  /// Pyramid level feeding block b's shortcut, or -1.
  int64_t level_for_block(int64_t b) const;

  ModelConfig cfg;
  torch::Tensor constant;
  std::vector<DecoderBlock> blocks;
  std::vector<StyleLayer> tail;
  torch::nn::Conv2d to_rgb{nullptr};
};
TORCH_MODULE(Decoder);

}  // namespace styleblend
