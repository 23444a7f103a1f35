#include "styleblend/losses.hpp"

#include <cmath>
#include <limits>
#include <utility>

#include <torch/torch.h>

#include "styleblend/extractors.hpp"

namespace styleblend {

void to_json(nlohmann::json& j, const LossReport& r) {
  j = nlohmann::json{{"adv_g", r.adv_g}, {"adv_v", r.adv_v}, {"id", r.id},
                     {"con", r.con},     {"rec", r.rec},     {"lm", r.lm},
                     {"swap", r.swap},   {"total", r.total}};
}

void from_json(const nlohmann::json& j, LossReport& r) {
  r.adv_g = j.at("adv_g").get<double>();
  r.adv_v = j.at("adv_v").get<double>();
  r.id = j.at("id").get<double>();
  r.con = j.at("con").get<double>();
  r.rec = j.at("rec").get<double>();
  r.lm = j.at("lm").get<double>();
  r.swap = j.at("swap").get<double>();
  r.total = j.at("total").get<double>();
}

namespace {

torch::Tensor cosine(const torch::Tensor& a, const torch::Tensor& b) {
  auto na = a.norm(2, -1);
  auto nb = b.norm(2, -1);
  if ((na == 0).any().item<bool>() || (nb == 0).any().item<bool>()) {
    throw std::invalid_argument("cosine similarity of a zero-norm embedding");
  }
  return (a * b).sum(-1) / (na * nb);
}

}  // namespace

torch::Tensor id_loss(const torch::Tensor& e_swap, const torch::Tensor& e_src) {
  if (!e_swap.sizes().equals(e_src.sizes())) {
    throw std::invalid_argument("id_loss: embedding shape mismatch");
  }
  return (1.0 - cosine(e_swap, e_src)).mean();
}

torch::Tensor contrastive_id_loss(const torch::Tensor& e_swap, const torch::Tensor& e_src,
                                  const torch::Tensor& e_tgt, const torch::Tensor& negatives,
                                  double tau, bool include_positive) {
  if (!(tau > 0)) throw std::invalid_argument("contrastive_id_loss: tau must be positive");
  if (e_swap.dim() != 1 || !e_swap.sizes().equals(e_src.sizes()) ||
      !e_swap.sizes().equals(e_tgt.sizes()) || negatives.dim() != 2 ||
      (negatives.size(0) > 0 && negatives.size(1) != e_swap.size(0))) {
    throw std::invalid_argument("contrastive_id_loss: shape mismatch");
  }
  auto s_pos = cosine(e_swap, e_src) / tau;
  std::vector<torch::Tensor> denom{(cosine(e_swap, e_tgt) / tau).unsqueeze(0)};
  if (include_positive) denom.push_back(s_pos.unsqueeze(0));
  if (negatives.size(0) > 0) {
    denom.push_back(cosine(e_swap.unsqueeze(0).expand_as(negatives), negatives) / tau);
  }
  return torch::logsumexp(torch::cat(denom), 0) - s_pos;
}

torch::Tensor contrastive_id_loss_batch(const torch::Tensor& e_swap, const torch::Tensor& e_src,
                                        const torch::Tensor& e_tgt, double tau,
                                        bool include_positive) {
  if (!(tau > 0)) throw std::invalid_argument("contrastive_id_loss: tau must be positive");
  if (e_swap.dim() != 2 || !e_swap.sizes().equals(e_src.sizes()) ||
      !e_swap.sizes().equals(e_tgt.sizes())) {
    throw std::invalid_argument("contrastive_id_loss_batch: expected matching (N, E) inputs");
  }
  // cosine() validates norms; the matrix form below reuses normalized rows
  cosine(e_swap, e_src);
  cosine(e_swap, e_tgt);
  const int64_t n = e_swap.size(0);
  auto sw = l2_normalize(e_swap);
  auto sims = torch::matmul(sw, l2_normalize(e_src).transpose(0, 1)) / tau;  // (N, N)
  auto s_pos = sims.diagonal();
  auto s_tgt = (sw * l2_normalize(e_tgt)).sum(-1) / tau;
  auto others = sims;
  if (!include_positive) {
    auto eye = torch::eye(n, torch::TensorOptions().dtype(torch::kBool));
    others = sims.masked_fill(eye, -std::numeric_limits<double>::infinity());
  }
  auto logits = torch::cat({s_tgt.unsqueeze(1), others}, 1);
  return (torch::logsumexp(logits, 1) - s_pos).mean();
}

torch::Tensor reconstruction_loss(const torch::Tensor& output, const torch::Tensor& target,
                                  bool same_input) {
  if (!output.sizes().equals(target.sizes())) {
    throw std::invalid_argument("reconstruction_loss: shape mismatch");
  }
  if (!same_input) return torch::zeros({}, output.options());
  return 0.5 * (output - target).square().mean();
}

torch::Tensor reconstruction_loss(const torch::Tensor& output, const torch::Tensor& target,
                                  const torch::Tensor& same_input) {
  if (!output.sizes().equals(target.sizes()) || output.dim() < 2 || same_input.dim() != 1 ||
      same_input.size(0) != output.size(0)) {
    throw std::invalid_argument("reconstruction_loss: shape mismatch");
  }
  auto per_sample = 0.5 * (output - target).square().flatten(1).mean(1);
  auto mask = same_input.to(output.scalar_type());
  return (per_sample * mask).mean();
}

torch::Tensor landmark_loss(const torch::Tensor& lm_target, const torch::Tensor& lm_swap) {
  if (!lm_target.sizes().equals(lm_swap.sizes()) || lm_target.size(-1) != 2) {
    throw std::invalid_argument("landmark_loss: landmark count mismatch");
  }
  return 0.5 * (lm_target - lm_swap).square().mean();
}

DualSwapTerms dual_swap_terms(const GeneratorFn& gen, const torch::Tensor& source,
                              const torch::Tensor& target, const torch::Tensor& swapped) {
  if (!source.sizes().equals(target.sizes()) || !source.sizes().equals(swapped.sizes())) {
    throw std::invalid_argument("dual_swap_loss: image shape mismatch");
  }
  // The swapped face goes back onto the source, and the target face onto
  // the swapped image.
  auto back_to_source = gen(swapped, source);
  auto back_to_target = gen(target, swapped);
  return {0.5 * (back_to_source - source).square().mean(),
          0.5 * (back_to_target - target).square().mean()};
}

torch::Tensor weighted_total(const GeneratorTerms& t, const LossWeights& w) {
  return t.adv_g + w.id * t.id + w.con * t.con + w.rec * t.rec + w.lm * t.lm + w.swap * t.swap;
}

LossReport total_generator_loss(LossReport r, const LossWeights& w) {
  const std::pair<const char*, double> terms[] = {{"adv_g", r.adv_g}, {"adv_v", r.adv_v},
                                                  {"id", r.id},       {"con", r.con},
                                                  {"rec", r.rec},     {"lm", r.lm},
                                                  {"swap", r.swap}};
  for (const auto& [name, value] : terms) {
    if (!std::isfinite(value)) {
      throw NonFiniteLoss(name, std::string("non-finite loss term '") + name +
                                    "' = " + std::to_string(value));
    }
  }
  r.total = r.adv_g + w.id * r.id + w.con * r.con + w.rec * r.rec + w.lm * r.lm + w.swap * r.swap;
  return r;
}

}  // namespace styleblend
