#pragma once

#include <set>
#include <string>
#include <vector>

#include "styleblend/checkpoint.hpp"
#include "styleblend/config.hpp"
#include "styleblend/critic.hpp"
#include "styleblend/decoder.hpp"
#include "styleblend/encoder.hpp"
#include "styleblend/extractors.hpp"
#include "styleblend/rng.hpp"
#include "styleblend/sbm.hpp"

namespace styleblend {

enum class ParamGroup { kEncoder, kBlender, kDecoder, kCritic, kIdExtractor, kLandmarkExtractor };

/// Checkpoint name prefix of a group, e.g. "encoder/" or "frozen/id/".
const char* group_prefix(ParamGroup g);

struct SwapOutput {
  torch::Tensor image;
  Encoding source;
  Encoding target;
  BlendResult blend;
};

/// Generator (encoder, blender, decoder), critic and the frozen perception
/// stand-ins, all built from one ModelConfig and initialized from
/// seeded_rng(cfg.seed, "init/<part>").
class FaceSwapModel {
 public:
  explicit FaceSwapModel(const ModelConfig& cfg);

  const ModelConfig& config() const { return cfg_; }

  /// G(source, target): the source identity rendered into the target.
  torch::Tensor generate(const torch::Tensor& source, const torch::Tensor& target,
                         RngStream& noise, const AdainOptions& opts = {});
  SwapOutput generate_detailed(const torch::Tensor& source, const torch::Tensor& target,
                               RngStream& noise, const AdainOptions& opts = {});

  /// Every parameter, in a fixed order, under its checkpoint name.
  TensorList named_parameters() const;
  TensorList group_parameters(ParamGroup g) const;
  /// Copies parameter values by name. Throws CheckpointError if a parameter
  /// is missing or has the wrong shape.
  void load_parameters(const TensorList& tensors);

  void set_trainable(const std::set<ParamGroup>& groups);
  void to(torch::ScalarType dtype);

  Encoder encoder{nullptr};
  Blender sbm{nullptr};
  Decoder decoder{nullptr};
  Critic critic{nullptr};
  IdExtractor id_extractor{nullptr};
  LandmarkExtractor landmark_extractor{nullptr};

 private:
  torch::nn::Module& module(ParamGroup g) const;

  ModelConfig cfg_;
};

}  // namespace styleblend
