#include "styleblend/sbm.hpp"

#include <cmath>
#include <stdexcept>

#include <torch/torch.h>

#include "styleblend/layers.hpp"

namespace styleblend {

namespace nn = torch::nn;

torch::Tensor cross_attention(const torch::Tensor& q, const torch::Tensor& k,
                              const torch::Tensor& v, int64_t heads) {
  if (q.dim() < 2 || !q.sizes().equals(k.sizes()) || !q.sizes().equals(v.sizes())) {
    throw std::invalid_argument("cross_attention: q, k, v must share shape (..., L, D)");
  }
  const int64_t dim = q.size(-1);
  if (heads <= 0 || dim % heads != 0) {
    throw std::invalid_argument("cross_attention: D=" + std::to_string(dim) +
                                " not divisible by heads=" + std::to_string(heads));
  }
  const int64_t width = dim / heads;
  auto split = [&](const torch::Tensor& x) {
    auto shape = x.sizes().vec();
    shape.back() = heads;
    shape.push_back(width);
    return x.reshape(shape).transpose(-3, -2);  // (..., H, L, d)
  };
  auto qh = split(q), kh = split(k), vh = split(v);
  auto scores = torch::matmul(qh, kh.transpose(-2, -1)) / std::sqrt(static_cast<double>(width));
  auto mixed = torch::matmul(torch::softmax(scores, -1), vh);  // (..., H, L, d)
  return mixed.transpose(-3, -2).reshape(q.sizes());
}

BlendWeights blend_normalize(const torch::Tensor& attn_target, const torch::Tensor& attn_source) {
  if (!attn_target.sizes().equals(attn_source.sizes())) {
    throw std::invalid_argument("blend_normalize: shape mismatch");
  }
  if (!torch::isfinite(attn_target).all().item<bool>() ||
      !torch::isfinite(attn_source).all().item<bool>()) {
    throw NonFiniteAttention("blend_normalize: non-finite attention");
  }
  auto m = torch::maximum(attn_target, attn_source).detach();
  auto et = torch::exp(attn_target - m);
  auto es = torch::exp(attn_source - m);
  auto denom = et + es;
  return {et / denom, es / denom};
}

BlendLayerImpl::BlendLayerImpl(int64_t dim, int64_t heads_, bool final_)
    : heads(heads_), final(final_) {
  q = register_module("q", nn::Linear(dim, dim));
  k = register_module("k", nn::Linear(dim, dim));
  v = register_module("v", nn::Linear(dim, dim));
  out = register_module("out", nn::Linear(dim, dim));
  if (!final) {
    norm = register_module("norm", nn::LayerNorm(nn::LayerNormOptions({dim})));
    ffn_norm = register_module("ffn_norm", nn::LayerNorm(nn::LayerNormOptions({dim})));
    ffn_in = register_module("ffn_in", nn::Linear(dim, 2 * dim));
    ffn_out = register_module("ffn_out", nn::Linear(2 * dim, dim));
  }
}

std::pair<torch::Tensor, torch::Tensor> BlendLayerImpl::attend(const torch::Tensor& src,
                                                               const torch::Tensor& tgt) {
  auto a_t = out->forward(
      cross_attention(q->forward(src), k->forward(tgt), v->forward(tgt), heads));
  auto a_s = out->forward(
      cross_attention(q->forward(tgt), k->forward(src), v->forward(src), heads));
  return {a_t, a_s};
}

std::pair<torch::Tensor, torch::Tensor> BlendLayerImpl::forward(const torch::Tensor& src,
                                                                const torch::Tensor& tgt) {
  auto [a_t, a_s] = attend(norm->forward(src), norm->forward(tgt));
  auto s = src + a_t;
  auto t = tgt + a_s;
  auto ffn = [&](const torch::Tensor& x) {
    return ffn_out->forward(torch::gelu(ffn_in->forward(ffn_norm->forward(x))));
  };
  return {s + ffn(s), t + ffn(t)};
}

BlenderImpl::BlenderImpl(const ModelConfig& cfg)
    : BlenderImpl(cfg.style_dim, cfg.heads, cfg.sbm_layers) {}

BlenderImpl::BlenderImpl(int64_t dim_, int64_t heads, int64_t num_layers) : dim(dim_) {
  if (num_layers < 1) throw std::invalid_argument("Blender needs at least one layer");
  for (int64_t i = 0; i < num_layers; ++i) {
    layers.push_back(register_module("layer" + std::to_string(i),
                                     BlendLayer(dim, heads, i + 1 == num_layers)));
  }
}

BlendResult BlenderImpl::forward(const torch::Tensor& source_codes,
                                 const torch::Tensor& target_codes) {
  if (!source_codes.sizes().equals(target_codes.sizes()) || source_codes.dim() < 2 ||
      source_codes.size(-1) != dim) {
    throw std::invalid_argument("blend: codes must share shape (..., L, " + std::to_string(dim) +
                                ")");
  }
  auto s = source_codes;
  auto t = target_codes;
  for (size_t i = 0; i + 1 < layers.size(); ++i) std::tie(s, t) = layers[i]->forward(s, t);
  auto [a_t, a_s] = layers.back()->attend(s, t);

  BlendResult r;
  r.weights = blend_normalize(a_t, a_s);
  r.codes = r.weights.target * target_codes + r.weights.source * source_codes;
  return r;
}

void BlenderImpl::reset(RngStream& rng) {
  reset_parameters(*this, rng);
  torch::NoGradGuard no_grad;
  for (auto& layer : layers) {
    if (layer->norm) {
      layer->norm->weight.fill_(1.0);
      layer->ffn_norm->weight.fill_(1.0);
    }
  }
  // A small readout keeps A^t - A^s in the unsaturated range of the
  // logistic, so training starts from a roughly even blend.
  layers.back()->out->weight.mul_(0.1);
}

void BlenderImpl::set_identity_projections() {
  torch::NoGradGuard no_grad;
  for (auto& layer : layers) {
    for (auto* lin : {&layer->q, &layer->k, &layer->v, &layer->out}) {
      auto& w = (*lin)->weight;
      w.copy_(torch::eye(dim, w.options()));
      (*lin)->bias.zero_();
    }
  }
}

}  // namespace styleblend
