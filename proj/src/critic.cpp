#include "styleblend/critic.hpp"

#include <stdexcept>

#include <torch/torch.h>

#include "styleblend/layers.hpp"

namespace styleblend {

namespace nn = torch::nn;

CriticImpl::CriticImpl(const ModelConfig& cfg, int64_t num_scales) : image_size(cfg.image_size) {
  if (num_scales < 1) throw std::invalid_argument("critic needs at least one scale");
  const int64_t base = cfg.base_width();
  for (int64_t s = 0; s < num_scales; ++s) {
    nn::Sequential stack;
    stack->push_back("conv0", conv3x3(3, base, 2));
    stack->push_back("act0", nn::LeakyReLU(nn::LeakyReLUOptions().negative_slope(kLeakySlope)));
    stack->push_back("conv1", conv3x3(base, 2 * base, 2));
    stack->push_back("act1", nn::LeakyReLU(nn::LeakyReLUOptions().negative_slope(kLeakySlope)));
    stack->push_back("conv2", conv3x3(2 * base, 4 * base, 2));
    stack->push_back("act2", nn::LeakyReLU(nn::LeakyReLUOptions().negative_slope(kLeakySlope)));
    stack->push_back("conv3", conv3x3(4 * base, 1, 2));
    scales.push_back(register_module("scale" + std::to_string(s), stack));
  }
}

torch::Tensor CriticImpl::forward(const torch::Tensor& images) {
  if (images.dim() != 4 || images.size(1) != 3 || images.size(2) != image_size ||
      images.size(3) != image_size) {
    throw std::invalid_argument("critic: expected (N, 3, " + std::to_string(image_size) + ", " +
                                std::to_string(image_size) + "), got " +
                                c10::str(images.sizes()));
  }
  torch::Tensor total;
  for (size_t s = 0; s < scales.size(); ++s) {
    auto x = s == 0 ? images : torch::avg_pool2d(images, int64_t{1} << s);
    auto score = scales[s]->forward(x).mean({1, 2, 3});
    total = s == 0 ? score : total + score;
  }
  return total / static_cast<double>(scales.size());
}

void CriticImpl::reset(RngStream& rng) { reset_parameters(*this, rng); }

torch::Tensor adv_loss_g(const torch::Tensor& fake_scores) { return -fake_scores.mean(); }

torch::Tensor adv_loss_v(const torch::Tensor& real_scores, const torch::Tensor& fake_scores) {
  return torch::relu(1.0 - real_scores).mean() + torch::relu(1.0 + fake_scores).mean();
}

}  // namespace styleblend
