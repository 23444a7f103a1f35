#pragma once

#include <functional>
#include <string>
#include <vector>

#include <torch/types.h>

#include "styleblend/rng.hpp"

namespace styleblend {

struct GradCheckOptions {
  double step = 1e-5;       // central-difference half-width h
  int64_t coordinates = 100;
  /// Relative error is |a - n| / max(|a|, |n|, floor) with
  /// floor = max(abs_floor, value_floor * |loss|). Central differences carry
  /// about eps_mach * |loss| / h of round-off, so without a floor that
  /// scales with the loss an exactly-zero gradient (a softmax key bias, say)
  /// reads as a large relative error.
  double abs_floor = 1e-7;
  double value_floor = 1e-6;
};

struct GradCheckResult {
  std::string name;
  double max_rel_error = 0;
  int64_t coordinates = 0;
  double worst_analytic = 0;
  double worst_numeric = 0;
};

/// Compares autograd gradients of the scalar `loss()` with central finite
/// differences at randomly chosen coordinates of `inputs`. Inputs must be
/// contiguous float64 leaf tensors; they are perturbed in place and
/// restored.
GradCheckResult check_gradients(const std::string& name, const std::function<torch::Tensor()>& loss,
                                const std::vector<torch::Tensor>& inputs, RngStream& rng,
                                const GradCheckOptions& opts = {});

}  // namespace styleblend
