#pragma once

#include <vector>

#include <torch/nn.h>

#include "styleblend/config.hpp"
#include "styleblend/rng.hpp"

namespace styleblend {

inline constexpr int64_t kCriticScales = 2;

/// Multi-scale patch discriminator. Scale s sees the image average-pooled
/// by 2^s and runs four stride-2 conv3x3 layers (LeakyReLU between) down to
/// a one-channel patch score map.
struct CriticImpl : torch::nn::Module {
  explicit CriticImpl(const ModelConfig& cfg, int64_t scales = kCriticScales);

  /// Per-sample realism score (N): mean over scales of the mean patch score.
  torch::Tensor forward(const torch::Tensor& images);
  void reset(RngStream& rng);

  int64_t image_size;
  std::vector<torch::nn::Sequential> scales;
};
TORCH_MODULE(Critic);

/// Generator hinge objective: -mean(fake).
torch::Tensor adv_loss_g(const torch::Tensor& fake_scores);

/// Critic hinge objective: mean(max(0, 1 - real)) + mean(max(0, 1 + fake)).
torch::Tensor adv_loss_v(const torch::Tensor& real_scores, const torch::Tensor& fake_scores);

}  // namespace styleblend
