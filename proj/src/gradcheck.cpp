#include "styleblend/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <torch/torch.h>

namespace styleblend {

GradCheckResult check_gradients(const std::string& name, const std::function<torch::Tensor()>& loss,
                                const std::vector<torch::Tensor>& inputs, RngStream& rng,
                                const GradCheckOptions& opts) {
  int64_t total = 0;
  for (const auto& t : inputs) {
    if (t.scalar_type() != torch::kFloat64 || !t.is_contiguous() || !t.is_leaf()) {
      throw std::invalid_argument("check_gradients(" + name +
                                  "): inputs must be contiguous float64 leaves");
    }
    total += t.numel();
  }
  if (total == 0) throw std::invalid_argument("check_gradients(" + name + "): no inputs");

  std::vector<bool> restore_flags;
  for (const auto& t : inputs) {
    restore_flags.push_back(t.requires_grad());
    const_cast<torch::Tensor&>(t).set_requires_grad(true);
  }
  auto value = loss();
  const double floor = std::max(opts.abs_floor, opts.value_floor * std::abs(value.item<double>()));
  auto grads = torch::autograd::grad({value}, inputs, /*grad_outputs=*/{}, /*retain_graph=*/false,
                                     /*create_graph=*/false, /*allow_unused=*/true);

  GradCheckResult result{name};
  torch::NoGradGuard no_grad;
  const int64_t n = std::min(opts.coordinates, total);
  auto picks = rng.uniform({n}, torch::kFloat64);
  for (int64_t i = 0; i < n; ++i) {
    int64_t flat = std::min<int64_t>(static_cast<int64_t>(picks[i].item<double>() * total), total - 1);
    size_t which = 0;
    while (flat >= inputs[which].numel()) flat -= inputs[which++].numel();

    double* x = inputs[which].data_ptr<double>() + flat;
    const double saved = *x;
    *x = saved + opts.step;
    const double up = loss().item<double>();
    *x = saved - opts.step;
    const double down = loss().item<double>();
    *x = saved;

    const double numeric = (up - down) / (2 * opts.step);
    const double analytic =
        grads[which].defined() ? grads[which].reshape({-1})[flat].item<double>() : 0.0;
    const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
    const double rel = std::abs(analytic - numeric) / denom;
    if (rel > result.max_rel_error || std::isnan(rel)) {
      result.max_rel_error = std::isnan(rel) ? INFINITY : rel;
      result.worst_analytic = analytic;
      result.worst_numeric = numeric;
    }
    ++result.coordinates;
  }
  for (size_t i = 0; i < inputs.size(); ++i) {
    const_cast<torch::Tensor&>(inputs[i]).set_requires_grad(restore_flags[i]);
  }
  return result;
}

}  // namespace styleblend
