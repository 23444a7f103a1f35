#include "styleblend/layers.hpp"

#include <cmath>
#include <stdexcept>

#include <torch/torch.h>

namespace styleblend {

namespace nn = torch::nn;

nn::Conv2d conv3x3(int64_t in, int64_t out, int64_t stride) {
  return nn::Conv2d(nn::Conv2dOptions(in, out, 3).stride(stride).padding(1));
}

nn::Conv2d conv1x1(int64_t in, int64_t out) { return nn::Conv2d(nn::Conv2dOptions(in, out, 1)); }

SEGateImpl::SEGateImpl(int64_t channels_, int64_t reduction) : channels(channels_) {
  const int64_t hidden = std::max<int64_t>(channels / reduction, 1);
  squeeze = register_module("squeeze", nn::Linear(channels, hidden));
  excite = register_module("excite", nn::Linear(hidden, channels));
}

torch::Tensor SEGateImpl::gates(const torch::Tensor& x) {
  auto pooled = x.mean({2, 3});
  return torch::sigmoid(excite->forward(torch::relu(squeeze->forward(pooled))));
}

torch::Tensor se_block(const torch::Tensor& x, SEGateImpl& gate) {
  if (x.dim() != 4 || x.size(1) != gate.channels) {
    throw std::invalid_argument("se_block: expected " + std::to_string(gate.channels) +
                                " channels, got shape " + c10::str(x.sizes()));
  }
  auto g = gate.gates(x);
  return x * g.unsqueeze(-1).unsqueeze(-1);
}

SEResidualBlockImpl::SEResidualBlockImpl(int64_t in, int64_t out, int64_t stride) {
  conv1 = register_module("conv1", conv3x3(in, out, stride));
  conv2 = register_module("conv2", conv3x3(out, out));
  se = register_module("se", SEGate(out));
  if (in != out || stride != 1) {
    shortcut = register_module(
        "shortcut", nn::Conv2d(nn::Conv2dOptions(in, out, 1).stride(stride).bias(false)));
  }
}

torch::Tensor SEResidualBlockImpl::forward(const torch::Tensor& x) {
  auto y = se_block(conv2->forward(leaky(conv1->forward(x))), *se);
  auto skip = shortcut ? shortcut->forward(x) : x;
  return leaky(y + skip);
}

void reset_parameters(nn::Module& module, RngStream& rng) {
  torch::NoGradGuard no_grad;
  const double gain = std::sqrt(2.0 / (1.0 + kLeakySlope * kLeakySlope));
  for (auto& p : module.named_parameters(/*recurse=*/true)) {
    auto& t = p.value();
    if (t.dim() >= 2) {
      const int64_t fan_in = t.numel() / t.size(0);
      const double bound = gain * std::sqrt(3.0 / static_cast<double>(fan_in));
      t.copy_(rng.uniform(t.sizes(), t.scalar_type()) * (2 * bound) - bound);
    } else {
      t.zero_();
    }
  }
}

std::string checkpoint_name(const std::string& prefix, const std::string& torch_name) {
  std::string out = prefix;
  out.reserve(prefix.size() + torch_name.size());
  for (char c : torch_name) out.push_back(c == '.' ? '/' : c);
  return out;
}

}  // namespace styleblend
