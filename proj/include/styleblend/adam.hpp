#pragma once

#include <functional>
#include <string>
#include <vector>

#include "styleblend/checkpoint.hpp"

namespace styleblend {

struct AdamOptions {
  double beta1 = 0.0;
  double beta2 = 0.99;
  double eps = 1e-8;
};

/// Adam with per-parameter step counts, so parameters that sit out a phase
/// resume with correct bias correction. State is exported as plain tensors
/// for checkpointing.
class Adam {
 public:
  Adam(TensorList params, AdamOptions opts = {});

  /// Updates every parameter that has a gradient and passes `select`.
  void step(double lr, const std::function<bool(const std::string&)>& select = {});
  void zero_grad();

  /// "<prefix><param>/m", ".../v", ".../t" for every parameter.
  TensorList state(const std::string& prefix) const;
  void load_state(const Checkpoint& ckpt, const std::string& prefix);

 private:
  struct Slot {
    NamedTensor param;
    torch::Tensor m, v;
    int64_t t = 0;
  };
  std::vector<Slot> slots_;
  AdamOptions opts_;
};

}  // namespace styleblend
