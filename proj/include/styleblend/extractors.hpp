#pragma once

#include <torch/nn.h>

#include "styleblend/config.hpp"
#include "styleblend/rng.hpp"

namespace styleblend {

/// Stand-in identity network: three stride-2 conv3x3 + LeakyReLU blocks,
/// global average pool, linear map to E, then L2 normalization. Weights
/// are random, seeded and frozen. Any Image -> unit vector module with the
/// same interface can replace it.
struct IdExtractorImpl : torch::nn::Module {
  explicit IdExtractorImpl(const ModelConfig& cfg);

  /// Pre-normalization embedding (N, E).
  torch::Tensor raw(const torch::Tensor& images);
  /// Unit-norm embedding (N, E).
  torch::Tensor forward(const torch::Tensor& images);
  void reset(RngStream& rng);

  int64_t image_size;
  torch::nn::Conv2d conv0{nullptr}, conv1{nullptr}, conv2{nullptr};
  torch::nn::Linear project{nullptr};
};
TORCH_MODULE(IdExtractor);

/// Stand-in landmark network: two stride-2 conv3x3 + LeakyReLU layers and a
/// 1x1 conv to K heatmaps at quarter resolution, followed by soft-argmax.
struct LandmarkExtractorImpl : torch::nn::Module {
  explicit LandmarkExtractorImpl(const ModelConfig& cfg);

  /// Heatmap logits (N, K, H/4, W/4).
  torch::Tensor heatmaps(const torch::Tensor& images);
  /// Keypoints (N, K, 2) as (x, y) in [0,1]^2.
  torch::Tensor forward(const torch::Tensor& images);
  void reset(RngStream& rng);

  int64_t image_size;
  torch::nn::Conv2d conv0{nullptr}, conv1{nullptr}, heat{nullptr};
};
TORCH_MODULE(LandmarkExtractor);

inline constexpr double kSoftArgmaxTemperature = 1.0;

/// Expected pixel-center coordinate under softmax(heatmap / temperature).
/// Pixel (r, c) of an HxW map sits at ((c + 0.5) / W, (r + 0.5) / H).
/// heatmaps (..., H, W) -> points (..., 2), clamped to [0,1].
torch::Tensor soft_argmax(const torch::Tensor& heatmaps,
                          double temperature = kSoftArgmaxTemperature);

torch::Tensor l2_normalize(const torch::Tensor& x);

}  // namespace styleblend
