#pragma once

#include <stdexcept>
#include <utility>
#include <vector>

#include <torch/nn.h>

#include "styleblend/config.hpp"
#include "styleblend/rng.hpp"

namespace styleblend {

/// Per-element mixing weights; target + source == 1 elementwise.
struct BlendWeights {
  torch::Tensor target;  // A_w^t, (N, L, D)
  torch::Tensor source;  // A_w^s, (N, L, D)
};

struct BlendResult {
  torch::Tensor codes;  // W', (N, L, D)
  BlendWeights weights;
};

/// Raised by blend_normalize when an attention entry is NaN or infinite,
/// which in practice means the model upstream has diverged.
class NonFiniteAttention : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Scaled dot-product attention per head over the style-element axis.
/// q, k, v are (..., L, D); returns the concatenated head outputs (before
/// any output projection). Throws std::invalid_argument on shape errors.
torch::Tensor cross_attention(const torch::Tensor& q, const torch::Tensor& k,
                              const torch::Tensor& v, int64_t heads);

/// exp(a_t) / (exp(a_s) + exp(a_t)) and its complement, evaluated after
/// subtracting the pairwise max. Throws NonFiniteAttention on non-finite
/// input and std::invalid_argument on mismatched shapes.
BlendWeights blend_normalize(const torch::Tensor& attn_target, const torch::Tensor& attn_source);

/// One MHCA-transformer layer. q/k/v/out projections are shared by the two
/// streams. Non-final layers are pre-norm and update both streams with
/// residual attention and a residual feed-forward; the final layer reads
/// the raw streams and returns the attentions (A^t, A^s) themselves.
struct BlendLayerImpl : torch::nn::Module {
  BlendLayerImpl(int64_t dim, int64_t heads, bool final);

  /// Returns (A^t, A^s): source queries over target keys/values, and the
  /// reverse.
  std::pair<torch::Tensor, torch::Tensor> attend(const torch::Tensor& src,
                                                 const torch::Tensor& tgt);
  /// Non-final layers: updated (source, target) streams.
  std::pair<torch::Tensor, torch::Tensor> forward(const torch::Tensor& src,
                                                  const torch::Tensor& tgt);

  int64_t heads;
  bool final;
  torch::nn::Linear q{nullptr}, k{nullptr}, v{nullptr}, out{nullptr};
  torch::nn::LayerNorm norm{nullptr}, ffn_norm{nullptr};
  torch::nn::Linear ffn_in{nullptr}, ffn_out{nullptr};
};
TORCH_MODULE(BlendLayer);

/// Style blending module: stacked cross-attention layers produce per-element
/// blend weights that convexly mix the ORIGINAL source and target codes.
struct BlenderImpl : torch::nn::Module {
  explicit BlenderImpl(const ModelConfig& cfg);
  BlenderImpl(int64_t dim, int64_t heads, int64_t layers);

  BlendResult forward(const torch::Tensor& source_codes, const torch::Tensor& target_codes);
  void reset(RngStream& rng);
  /// Sets q/k/v/out of every layer to the identity with zero bias.
  void set_identity_projections();

  int64_t dim;
  std::vector<BlendLayer> layers;
};
TORCH_MODULE(Blender);

}  // namespace styleblend
