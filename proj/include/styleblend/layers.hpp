#pragma once

#include <string>

#include <torch/nn.h>

#include "styleblend/rng.hpp"

namespace styleblend {

inline constexpr double kLeakySlope = 0.2;

inline torch::Tensor leaky(const torch::Tensor& x) {
  return torch::leaky_relu(x, kLeakySlope);
}

torch::nn::Conv2d conv3x3(int64_t in, int64_t out, int64_t stride = 1);
torch::nn::Conv2d conv1x1(int64_t in, int64_t out);

/// Squeeze-and-excitation gate: global average pool -> FC -> ReLU -> FC -> sigmoid.
struct SEGateImpl : torch::nn::Module {
  SEGateImpl(int64_t channels, int64_t reduction = 4);

  /// Per-channel gates in (0,1), shape (N, C).
  torch::Tensor gates(const torch::Tensor& x);

  int64_t channels;
  torch::nn::Linear squeeze{nullptr};
  torch::nn::Linear excite{nullptr};
};
TORCH_MODULE(SEGate);

/// Scales x channel-wise by its SE gates. Throws std::invalid_argument on a
/// channel mismatch.
torch::Tensor se_block(const torch::Tensor& x, SEGateImpl& gate);

/// conv3x3 -> lrelu -> conv3x3 -> SE, plus a (projected) identity shortcut.
struct SEResidualBlockImpl : torch::nn::Module {
  SEResidualBlockImpl(int64_t in, int64_t out, int64_t stride);
  torch::Tensor forward(const torch::Tensor& x);

  torch::nn::Conv2d conv1{nullptr};
  torch::nn::Conv2d conv2{nullptr};
  SEGate se{nullptr};
  torch::nn::Conv2d shortcut{nullptr};
};
TORCH_MODULE(SEResidualBlock);

/// Re-draws every parameter of `module` from `rng`: weights get a
/// LeakyReLU-gain Kaiming-uniform draw, biases become zero. Callers
/// overwrite special parameters afterwards.
void reset_parameters(torch::nn::Module& module, RngStream& rng);

/// "stage1.block0.conv1.weight" -> "<prefix>stage1/block0/conv1/weight"
std::string checkpoint_name(const std::string& prefix, const std::string& torch_name);

}  // namespace styleblend
