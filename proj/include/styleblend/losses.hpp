#pragma once

#include <functional>
#include <stdexcept>
#include <string>

#include <json.hpp>
#include <torch/types.h>

namespace styleblend {

struct LossWeights {
  double id = 10.0;    // lambda_1
  double con = 5.0;    // lambda_2
  double rec = 1.0;    // lambda_3
  double lm = 100.0;   // lambda_4
  double swap = 1.0;   // lambda_5
  double tau = 0.07;   // InfoNCE temperature
  /// false: denominator is exp(S_t) + sum_n exp(S_n), exactly as the
  /// objective is written. true: standard InfoNCE, which also adds exp(S_s).
  bool con_denominator_includes_positive = false;
};

/// Generator objective terms as differentiable scalars.
struct GeneratorTerms {
  torch::Tensor adv_g, id, con, rec, lm, swap;
};

struct LossReport {
  double adv_g = 0, adv_v = 0, id = 0, con = 0, rec = 0, lm = 0, swap = 0, total = 0;
};

void to_json(nlohmann::json& j, const LossReport& r);
void from_json(const nlohmann::json& j, LossReport& r);

class NonFiniteLoss : public std::runtime_error {
 public:
  NonFiniteLoss(std::string term, const std::string& what)
      : std::runtime_error(what), term_(std::move(term)) {}
  const std::string& term() const noexcept { return term_; }

 private:
  std::string term_;
};

/// 1 - cos(e_swap, e_src), averaged over the batch. Inputs (N, E) or (E).
/// Throws std::invalid_argument on a zero-norm row.
torch::Tensor id_loss(const torch::Tensor& e_swap, const torch::Tensor& e_src);

/// Single-sample contrastive identity loss. With S_x = cos(e_swap, e_x) / tau:
///   -log( exp(S_s) / (exp(S_t) + sum_n exp(S_n)) )
/// evaluated with log-sum-exp. `negatives` is (M, E); M may be 0.
torch::Tensor contrastive_id_loss(const torch::Tensor& e_swap, const torch::Tensor& e_src,
                                  const torch::Tensor& e_tgt, const torch::Tensor& negatives,
                                  double tau, bool include_positive = false);

/// Batched form: the negatives of sample i are the source embeddings of
/// every other sample in the batch. Returns the batch mean.
torch::Tensor contrastive_id_loss_batch(const torch::Tensor& e_swap, const torch::Tensor& e_src,
                                        const torch::Tensor& e_tgt, double tau,
                                        bool include_positive = false);

/// 1/2 mean((output - target)^2) where same_input, else 0.
torch::Tensor reconstruction_loss(const torch::Tensor& output, const torch::Tensor& target,
                                  bool same_input);
/// Batched: per-sample reconstruction masked by `same_input` (N, bool), then
/// averaged over all N samples.
torch::Tensor reconstruction_loss(const torch::Tensor& output, const torch::Tensor& target,
                                  const torch::Tensor& same_input);

/// 1/2 mean of squared coordinate differences, (N, K, 2) or (K, 2).
torch::Tensor landmark_loss(const torch::Tensor& lm_target, const torch::Tensor& lm_swap);

/// gen(source, target) -> swapped image, batched.
using GeneratorFn = std::function<torch::Tensor(const torch::Tensor&, const torch::Tensor&)>;

struct DualSwapTerms {
  torch::Tensor source_cycle;  // 1/2 mean((gen(I_st, I_s) - I_s)^2)
  torch::Tensor target_cycle;  // 1/2 mean((gen(I_t, I_st) - I_t)^2)
  torch::Tensor total() const { return source_cycle + target_cycle; }
};

DualSwapTerms dual_swap_terms(const GeneratorFn& gen, const torch::Tensor& source,
                              const torch::Tensor& target, const torch::Tensor& swapped);

inline torch::Tensor dual_swap_loss(const GeneratorFn& gen, const torch::Tensor& source,
                                    const torch::Tensor& target, const torch::Tensor& swapped) {
  return dual_swap_terms(gen, source, target, swapped).total();
}

/// adv_g + l1 id + l2 con + l3 rec + l4 lm + l5 swap, differentiable.
torch::Tensor weighted_total(const GeneratorTerms& terms, const LossWeights& w);

/// Fills report.total from the other fields. Throws NonFiniteLoss naming
/// the first non-finite term.
LossReport total_generator_loss(LossReport report, const LossWeights& w);

}  // namespace styleblend
