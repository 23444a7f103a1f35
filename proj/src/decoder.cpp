#include "styleblend/decoder.hpp"

#include <stdexcept>

#include <torch/torch.h>

#include "styleblend/layers.hpp"

namespace styleblend {

namespace nn = torch::nn;
namespace F = torch::nn::functional;

std::pair<torch::Tensor, torch::Tensor> style_to_affine(const torch::Tensor& w,
                                                        nn::Linear affine) {
  if (w.dim() != 2 || w.size(1) != affine->options.in_features()) {
    throw std::invalid_argument("style_to_affine: style element width mismatch");
  }
  auto gb = affine->forward(w);
  auto halves = gb.chunk(2, 1);
  return {halves[0], halves[1]};
}

torch::Tensor adain_modulate(const torch::Tensor& x, const torch::Tensor& gamma,
                             const torch::Tensor& beta, const AdainOptions& opts) {
  if (x.dim() != 4 || gamma.dim() != 2 || !gamma.sizes().equals(beta.sizes()) ||
      gamma.size(0) != x.size(0) || gamma.size(1) != x.size(1)) {
    throw std::invalid_argument("adain: expected x (N,C,H,W) with gamma/beta (N,C), got " +
                                c10::str(x.sizes()) + " and " + c10::str(gamma.sizes()));
  }
  const auto stats_src = opts.detach_statistics ? x.detach() : x;
  auto mean = stats_src.mean({2, 3}, /*keepdim=*/true);
  auto var = (stats_src - mean).square().mean({2, 3}, /*keepdim=*/true);
  // clamp keeps the sqrt derivative finite for constant channels
  auto stddev = var.clamp_min(1e-30).sqrt();
  auto normed = (x - mean) / (stddev + opts.eps);
  return normed * gamma.unsqueeze(-1).unsqueeze(-1) + beta.unsqueeze(-1).unsqueeze(-1);
}

torch::Tensor adain(const torch::Tensor& x, const torch::Tensor& w, nn::Linear affine,
                    const AdainOptions& opts) {
  if (affine->options.out_features() != 2 * x.size(1)) {
    throw std::invalid_argument("adain: affine output must be twice the channel count");
  }
  auto [gamma, beta] = style_to_affine(w, affine);
  return adain_modulate(x, gamma, beta, opts);
}

StyleLayerImpl::StyleLayerImpl(int64_t in, int64_t out, int64_t style_dim) {
  conv = register_module("conv", conv3x3(in, out));
  noise_scale = register_parameter("noise_scale", torch::zeros({out}));
  affine = register_module("affine", nn::Linear(style_dim, 2 * out));
}

torch::Tensor StyleLayerImpl::forward(const torch::Tensor& x, const torch::Tensor& w,
                                      RngStream& noise, const AdainOptions& opts) {
  auto y = conv->forward(x);
  auto n = noise.normal({y.size(0), 1, y.size(2), y.size(3)}, y.scalar_type());
  y = y + n * noise_scale.view({1, -1, 1, 1});
  return adain(leaky(y), w, affine, opts);
}

void StyleLayerImpl::reset(RngStream& rng) {
  torch::NoGradGuard no_grad;
  noise_scale.fill_(0.1);
  // gamma starts at 1 and beta at 0: AdaIN begins close to plain instance norm
  const int64_t c = noise_scale.size(0);
  affine->weight.mul_(0.25);
  affine->bias.zero_();
  affine->bias.narrow(0, 0, c).fill_(1.0);
  (void)rng;
}

DecoderBlockImpl::DecoderBlockImpl(int64_t in, int64_t out, int64_t style_dim, bool upsample_,
                                   int64_t shortcut_channels)
    : upsample(upsample_) {
  layer0 = register_module("layer0", StyleLayer(in, out, style_dim));
  layer1 = register_module("layer1", StyleLayer(out, out, style_dim));
  if (shortcut_channels > 0) {
    shortcut = register_module("shortcut", conv1x1(shortcut_channels, out));
    gate = register_parameter("gate", torch::ones({1}));
  }
}

DecoderImpl::DecoderImpl(const ModelConfig& c) : cfg(c) {
  cfg.validate_shapes();
  const int64_t d = cfg.style_dim;
  constant = register_parameter("constant", torch::zeros({1, cfg.decoder_channels(0), 4, 4}));
  for (int64_t b = 0; b < cfg.decoder_blocks; ++b) {
    const int64_t in = cfg.decoder_channels(std::max<int64_t>(b - 1, 0));
    const int64_t out = cfg.decoder_channels(b);
    const int64_t sc = level_for_block(b) >= 0 ? cfg.pyramid_channels() : 0;
    blocks.push_back(register_module("block" + std::to_string(b),
                                     DecoderBlock(in, out, d, b > 0, sc)));
  }
  const int64_t last = cfg.decoder_channels(cfg.decoder_blocks - 1);
  for (int64_t i = 2 * cfg.decoder_blocks; i < cfg.style_count; ++i) {
    tail.push_back(register_module("tail" + std::to_string(tail.size()),
                                   StyleLayer(last, last, d)));
  }
  to_rgb = register_module("to_rgb", conv1x1(last, 3));
}

int64_t DecoderImpl::level_for_block(int64_t b) const {
  const int64_t res = int64_t{4} << b;
  for (int64_t p = 0; p < cfg.pyramid_levels; ++p) {
    if (cfg.level_side(p) == res) return p;
  }
  return -1;
}

torch::Tensor DecoderImpl::forward(const torch::Tensor& codes, const FeaturePyramid& pyramid,
                                   RngStream& noise, const AdainOptions& opts) {
  if (codes.dim() != 3 || codes.size(1) != cfg.style_count || codes.size(2) != cfg.style_dim) {
    throw std::invalid_argument("decode: expected codes (N, " + std::to_string(cfg.style_count) +
                                ", " + std::to_string(cfg.style_dim) + "), got " +
                                c10::str(codes.sizes()));
  }
  if (static_cast<int64_t>(pyramid.levels.size()) != cfg.pyramid_levels) {
    throw std::invalid_argument("decode: pyramid has wrong number of levels");
  }
  const int64_t n = codes.size(0);
  auto x = constant.expand({n, -1, -1, -1});
  for (int64_t b = 0; b < cfg.decoder_blocks; ++b) {
    auto& block = blocks[b];
    if (block->upsample) {
      x = F::interpolate(x, F::InterpolateFuncOptions()
                                .scale_factor(std::vector<double>{2.0, 2.0})
                                .mode(torch::kBilinear)
                                .align_corners(false));
    }
    x = block->layer0->forward(x, codes.select(1, 2 * b), noise, opts);
    x = block->layer1->forward(x, codes.select(1, 2 * b + 1), noise, opts);
    if (block->shortcut) {
      x = x + block->gate * block->shortcut->forward(pyramid.levels[level_for_block(b)]);
    }
  }
  for (size_t i = 0; i < tail.size(); ++i) {
    x = tail[i]->forward(x, codes.select(1, 2 * cfg.decoder_blocks + static_cast<int64_t>(i)),
                         noise, opts);
  }
  return torch::tanh(to_rgb->forward(x));
}

void DecoderImpl::reset(RngStream& rng) {
  reset_parameters(*this, rng);
  torch::NoGradGuard no_grad;
  constant.copy_(rng.normal(constant.sizes(), constant.scalar_type()));
  for (auto& block : blocks) {
    block->layer0->reset(rng);
    block->layer1->reset(rng);
    if (block->shortcut) block->gate.fill_(1.0);
  }
  for (auto& layer : tail) layer->reset(rng);
}

}  // namespace styleblend
