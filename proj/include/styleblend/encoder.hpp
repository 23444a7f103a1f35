#pragma once

#include <vector>

#include <torch/nn.h>

#include "styleblend/config.hpp"
#include "styleblend/layers.hpp"
#include "styleblend/rng.hpp"

namespace styleblend {

/// Multi-resolution encoder features, ordered coarse to fine. Level p has
/// shape (N, C, s_p, s_p) with s_p = image_size / 2^(P+1-p).
struct FeaturePyramid {
  std::vector<torch::Tensor> levels;
};

struct Encoding {
  torch::Tensor codes;  // (N, L, D)
  FeaturePyramid pyramid;
};

/// Strided conv3x3 + LeakyReLU stack down to 1x1, then a linear map to D.
struct StyleHeadImpl : torch::nn::Module {
  StyleHeadImpl(int64_t channels, int64_t side, int64_t style_dim);

  int64_t channels;
  int64_t side;
  torch::nn::ModuleList convs;
  torch::nn::Linear project{nullptr};
};
TORCH_MODULE(StyleHead);

/// Applies a style head to features from its pyramid level; returns (N, D).
/// Throws std::invalid_argument when `feat` does not have the level's shape.
torch::Tensor style_head(const torch::Tensor& feat, StyleHeadImpl& head);

/// Facial attributes encoder: SE-residual backbone, top-down feature
/// pyramid over the last P stages, and L style heads (L/P per level).
struct EncoderImpl : torch::nn::Module {
  explicit EncoderImpl(const ModelConfig& cfg);

  Encoding forward(const torch::Tensor& images);
  void reset(RngStream& rng);

  ModelConfig cfg;
  torch::nn::Conv2d stem{nullptr};
  std::vector<torch::nn::Sequential> stages;
  std::vector<torch::nn::Conv2d> laterals;
  std::vector<StyleHead> heads;
};
TORCH_MODULE(Encoder);

}  // namespace styleblend
