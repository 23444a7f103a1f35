#include "styleblend/model.hpp"

#include <map>

#include <torch/torch.h>

#include "styleblend/layers.hpp"

namespace styleblend {

namespace {

constexpr ParamGroup kAllGroups[] = {ParamGroup::kEncoder,    ParamGroup::kBlender,
                                     ParamGroup::kDecoder,    ParamGroup::kCritic,
                                     ParamGroup::kIdExtractor, ParamGroup::kLandmarkExtractor};

}  // namespace

const char* group_prefix(ParamGroup g) {
  switch (g) {
    case ParamGroup::kEncoder: return "encoder/";
    case ParamGroup::kBlender: return "sbm/";
    case ParamGroup::kDecoder: return "decoder/";
    case ParamGroup::kCritic: return "critic/";
    case ParamGroup::kIdExtractor: return "frozen/id/";
    case ParamGroup::kLandmarkExtractor: return "frozen/lm/";
  }
  return "";
}

FaceSwapModel::FaceSwapModel(const ModelConfig& cfg) : cfg_(cfg) {
  cfg_.validate_shapes();
  encoder = Encoder(cfg_);
  sbm = Blender(cfg_);
  decoder = Decoder(cfg_);
  critic = Critic(cfg_);
  id_extractor = IdExtractor(cfg_);
  landmark_extractor = LandmarkExtractor(cfg_);

  auto init = [&](const char* part) { return seeded_rng(cfg_.seed, std::string("init/") + part); };
  auto rng_e = init("encoder");
  encoder->reset(rng_e);
  auto rng_b = init("sbm");
  sbm->reset(rng_b);
  auto rng_d = init("decoder");
  decoder->reset(rng_d);
  auto rng_c = init("critic");
  critic->reset(rng_c);
  auto rng_i = init("frozen/id");
  id_extractor->reset(rng_i);
  auto rng_l = init("frozen/lm");
  landmark_extractor->reset(rng_l);
}

SwapOutput FaceSwapModel::generate_detailed(const torch::Tensor& source,
                                            const torch::Tensor& target, RngStream& noise,
                                            const AdainOptions& opts) {
  SwapOutput out;
  if (source.sizes().equals(target.sizes()) && source.is_same(target)) {
    out.source = encoder->forward(source);
    out.target = out.source;
  } else {
    // one encoder pass over the stacked pair
    auto both = encoder->forward(torch::cat({source, target}, 0));
    const int64_t n = source.size(0);
    out.source.codes = both.codes.narrow(0, 0, n);
    out.target.codes = both.codes.narrow(0, n, n);
    for (const auto& level : both.pyramid.levels) {
      out.source.pyramid.levels.push_back(level.narrow(0, 0, n));
      out.target.pyramid.levels.push_back(level.narrow(0, n, n));
    }
  }
  out.blend = sbm->forward(out.source.codes, out.target.codes);
  out.image = decoder->forward(out.blend.codes, out.target.pyramid, noise, opts);
  return out;
}

torch::Tensor FaceSwapModel::generate(const torch::Tensor& source, const torch::Tensor& target,
                                      RngStream& noise, const AdainOptions& opts) {
  return generate_detailed(source, target, noise, opts).image;
}

torch::nn::Module& FaceSwapModel::module(ParamGroup g) const {
  switch (g) {
    case ParamGroup::kEncoder: return *encoder.ptr();
    case ParamGroup::kBlender: return *sbm.ptr();
    case ParamGroup::kDecoder: return *decoder.ptr();
    case ParamGroup::kCritic: return *critic.ptr();
    case ParamGroup::kIdExtractor: return *id_extractor.ptr();
    case ParamGroup::kLandmarkExtractor: return *landmark_extractor.ptr();
  }
  throw std::logic_error("unknown parameter group");
}

TensorList FaceSwapModel::group_parameters(ParamGroup g) const {
  TensorList out;
  for (const auto& p : module(g).named_parameters(/*recurse=*/true)) {
    out.push_back({checkpoint_name(group_prefix(g), p.key()), p.value()});
  }
  return out;
}

TensorList FaceSwapModel::named_parameters() const {
  TensorList out;
  for (auto g : kAllGroups) {
    auto part = group_parameters(g);
    out.insert(out.end(), std::make_move_iterator(part.begin()),
               std::make_move_iterator(part.end()));
  }
  return out;
}

void FaceSwapModel::load_parameters(const TensorList& tensors) {
  std::map<std::string, const torch::Tensor*> by_name;
  for (const auto& t : tensors) by_name[t.name] = &t.value;
  torch::NoGradGuard no_grad;
  for (auto& p : named_parameters()) {
    auto it = by_name.find(p.name);
    if (it == by_name.end()) {
      throw CheckpointError(CheckpointError::Kind::kCorrupt, "missing parameter " + p.name);
    }
    if (!it->second->sizes().equals(p.value.sizes())) {
      throw CheckpointError(CheckpointError::Kind::kCorrupt,
                            "shape mismatch for parameter " + p.name);
    }
    p.value.copy_(*it->second);
  }
}

void FaceSwapModel::set_trainable(const std::set<ParamGroup>& groups) {
  for (auto g : kAllGroups) {
    const bool on = groups.contains(g) && g != ParamGroup::kIdExtractor &&
                    g != ParamGroup::kLandmarkExtractor;
    for (auto& p : module(g).parameters()) p.set_requires_grad(on);
  }
}

void FaceSwapModel::to(torch::ScalarType dtype) {
  for (auto g : kAllGroups) module(g).to(dtype);
}

}  // namespace styleblend
