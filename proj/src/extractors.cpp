#include "styleblend/extractors.hpp"

#include <stdexcept>

#include <torch/torch.h>

#include "styleblend/layers.hpp"

namespace styleblend {

namespace {

void check_images(const torch::Tensor& images, int64_t size, const char* who) {
  if (images.dim() != 4 || images.size(1) != 3 || images.size(2) != size ||
      images.size(3) != size) {
    throw std::invalid_argument(std::string(who) + ": expected (N, 3, " + std::to_string(size) +
                                ", " + std::to_string(size) + "), got " +
                                c10::str(images.sizes()));
  }
}

void freeze(torch::nn::Module& m) {
  for (auto& p : m.parameters()) p.set_requires_grad(false);
}

}  // namespace

torch::Tensor l2_normalize(const torch::Tensor& x) {
  return x / x.norm(2, -1, /*keepdim=*/true).clamp_min(1e-12);
}

IdExtractorImpl::IdExtractorImpl(const ModelConfig& cfg) : image_size(cfg.image_size) {
  const int64_t base = cfg.base_width();
  conv0 = register_module("conv0", conv3x3(3, base, 2));
  conv1 = register_module("conv1", conv3x3(base, 2 * base, 2));
  conv2 = register_module("conv2", conv3x3(2 * base, 4 * base, 2));
  project = register_module("project", torch::nn::Linear(4 * base, cfg.id_dim));
  freeze(*this);
}

torch::Tensor IdExtractorImpl::raw(const torch::Tensor& images) {
  check_images(images, image_size, "extract_id");
  auto x = leaky(conv0->forward(images));
  x = leaky(conv1->forward(x));
  x = leaky(conv2->forward(x));
  return project->forward(x.mean({2, 3}));
}

torch::Tensor IdExtractorImpl::forward(const torch::Tensor& images) {
  return l2_normalize(raw(images));
}

void IdExtractorImpl::reset(RngStream& rng) {
  reset_parameters(*this, rng);
  freeze(*this);
}

LandmarkExtractorImpl::LandmarkExtractorImpl(const ModelConfig& cfg)
    : image_size(cfg.image_size) {
  const int64_t base = cfg.base_width();
  conv0 = register_module("conv0", conv3x3(3, base, 2));
  conv1 = register_module("conv1", conv3x3(base, 2 * base, 2));
  heat = register_module("heat", conv1x1(2 * base, cfg.landmark_count));
  freeze(*this);
}

torch::Tensor LandmarkExtractorImpl::heatmaps(const torch::Tensor& images) {
  check_images(images, image_size, "extract_landmarks");
  auto x = leaky(conv0->forward(images));
  x = leaky(conv1->forward(x));
  return heat->forward(x);
}

torch::Tensor LandmarkExtractorImpl::forward(const torch::Tensor& images) {
  return soft_argmax(heatmaps(images));
}

void LandmarkExtractorImpl::reset(RngStream& rng) {
  reset_parameters(*this, rng);
  torch::NoGradGuard no_grad;
  // sharper random heatmaps so keypoints actually move with the image
  heat->weight.mul_(4.0);
  freeze(*this);
}

torch::Tensor soft_argmax(const torch::Tensor& heatmaps, double temperature) {
  if (heatmaps.dim() < 2 || temperature <= 0) {
    throw std::invalid_argument("soft_argmax: need (..., H, W) heatmaps and temperature > 0");
  }
  const int64_t h = heatmaps.size(-2);
  const int64_t w = heatmaps.size(-1);
  auto probs = torch::softmax((heatmaps / temperature).flatten(-2), -1);
  auto opts = heatmaps.options();
  auto ys = (torch::arange(h, opts) + 0.5) / static_cast<double>(h);
  auto xs = (torch::arange(w, opts) + 0.5) / static_cast<double>(w);
  auto grid_y = ys.unsqueeze(1).expand({h, w}).reshape({h * w});
  auto grid_x = xs.unsqueeze(0).expand({h, w}).reshape({h * w});
  auto px = (probs * grid_x).sum(-1);
  auto py = (probs * grid_y).sum(-1);
  return torch::stack({px, py}, -1).clamp(0.0, 1.0);
}

}  // namespace styleblend
