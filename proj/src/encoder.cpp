#include "styleblend/encoder.hpp"

#include <bit>
#include <stdexcept>

#include <torch/torch.h>

namespace styleblend {

namespace nn = torch::nn;
namespace F = torch::nn::functional;

StyleHeadImpl::StyleHeadImpl(int64_t channels_, int64_t side_, int64_t style_dim)
    : channels(channels_), side(side_) {
  const int depth = std::countr_zero(static_cast<uint64_t>(side));  // log2 of a power of two
  for (int i = 0; i < depth; ++i) convs->push_back(conv3x3(channels, channels, 2));
  register_module("convs", convs);
  project = register_module("project", nn::Linear(channels, style_dim));
}

torch::Tensor style_head(const torch::Tensor& feat, StyleHeadImpl& head) {
  if (feat.dim() != 4 || feat.size(1) != head.channels || feat.size(2) != head.side ||
      feat.size(3) != head.side) {
    throw std::invalid_argument("style_head: expected (N, " + std::to_string(head.channels) +
                                ", " + std::to_string(head.side) + ", " +
                                std::to_string(head.side) + "), got " + c10::str(feat.sizes()));
  }
  auto x = feat;
  for (const auto& m : *head.convs) x = leaky(m->as<nn::Conv2d>()->forward(x));
  return head.project->forward(x.flatten(1));
}

EncoderImpl::EncoderImpl(const ModelConfig& c) : cfg(c) {
  cfg.validate_shapes();
  const int64_t base = cfg.base_width();
  const int64_t num_stages = cfg.pyramid_levels + 1;
  stem = register_module("stem", conv3x3(3, base, 2));

  // Stage s (1-based) runs at image_size / 2^s.
  for (int64_t s = 1; s <= num_stages; ++s) {
    const int64_t in = base << std::max<int64_t>(s - 2, 0);
    const int64_t out = base << (s - 1);
    nn::Sequential stage;
    stage->push_back("block0", SEResidualBlock(in, out, s == 1 ? 1 : 2));
    stage->push_back("block1", SEResidualBlock(out, out, 1));
    stages.push_back(register_module("stage" + std::to_string(s), stage));
  }

  const int64_t pyr = cfg.pyramid_channels();
  for (int64_t p = 0; p < cfg.pyramid_levels; ++p) {
    const int64_t stage = num_stages - p;
    laterals.push_back(
        register_module("lateral" + std::to_string(p), conv1x1(base << (stage - 1), pyr)));
  }
  for (int64_t i = 0; i < cfg.style_count; ++i) {
    const int64_t level = i / cfg.styles_per_level();
    heads.push_back(register_module("head" + std::to_string(i),
                                    StyleHead(pyr, cfg.level_side(level), cfg.style_dim)));
  }
}

Encoding EncoderImpl::forward(const torch::Tensor& images) {
  if (images.dim() != 4 || images.size(1) != 3 || images.size(2) != cfg.image_size ||
      images.size(3) != cfg.image_size) {
    throw std::invalid_argument("encode: expected (N, 3, " + std::to_string(cfg.image_size) +
                                ", " + std::to_string(cfg.image_size) + "), got " +
                                c10::str(images.sizes()));
  }
  std::vector<torch::Tensor> stage_out;
  auto x = leaky(stem->forward(images));
  for (auto& stage : stages) {
    x = stage->forward(x);
    stage_out.push_back(x);
  }

  Encoding enc;
  const auto num_stages = static_cast<int64_t>(stages.size());
  for (int64_t p = 0; p < cfg.pyramid_levels; ++p) {
    auto lateral = laterals[p]->forward(stage_out[num_stages - 1 - p]);
    if (p > 0) {
      lateral = lateral + F::interpolate(enc.pyramid.levels.back(),
                                         F::InterpolateFuncOptions()
                                             .scale_factor(std::vector<double>{2.0, 2.0})
                                             .mode(torch::kNearest));
    }
    enc.pyramid.levels.push_back(lateral);
  }

  std::vector<torch::Tensor> elements;
  elements.reserve(heads.size());
  for (size_t i = 0; i < heads.size(); ++i) {
    const auto level = static_cast<int64_t>(i) / cfg.styles_per_level();
    elements.push_back(style_head(enc.pyramid.levels[level], *heads[i]));
  }
  enc.codes = torch::stack(elements, 1);
  return enc;
}

void EncoderImpl::reset(RngStream& rng) { reset_parameters(*this, rng); }

}  // namespace styleblend
