#include "styleblend/adam.hpp"

#include <cmath>

#include <torch/torch.h>

namespace styleblend {

Adam::Adam(TensorList params, AdamOptions opts) : opts_(opts) {
  for (auto& p : params) {
    Slot s;
    s.m = torch::zeros_like(p.value);
    s.v = torch::zeros_like(p.value);
    s.param = std::move(p);
    slots_.push_back(std::move(s));
  }
}

void Adam::step(double lr, const std::function<bool(const std::string&)>& select) {
  torch::NoGradGuard no_grad;
  for (auto& s : slots_) {
    const auto& grad = s.param.value.grad();
    if (!grad.defined() || (select && !select(s.param.name))) continue;
    ++s.t;
    s.m.mul_(opts_.beta1).add_(grad, 1.0 - opts_.beta1);
    s.v.mul_(opts_.beta2).addcmul_(grad, grad, 1.0 - opts_.beta2);
    const double bc1 = 1.0 - std::pow(opts_.beta1, static_cast<double>(s.t));
    const double bc2 = 1.0 - std::pow(opts_.beta2, static_cast<double>(s.t));
    auto denom = (s.v / bc2).sqrt_().add_(opts_.eps);
    s.param.value.addcdiv_(s.m, denom, -lr / bc1);
  }
}

void Adam::zero_grad() {
  for (auto& s : slots_) {
    auto& g = s.param.value.mutable_grad();
    if (g.defined()) g = torch::Tensor();
  }
}

TensorList Adam::state(const std::string& prefix) const {
  TensorList out;
  for (const auto& s : slots_) {
    const std::string base = prefix + s.param.name;
    out.push_back({base + "/m", s.m});
    out.push_back({base + "/v", s.v});
    out.push_back({base + "/t", torch::full({}, static_cast<double>(s.t), torch::kFloat64)});
  }
  return out;
}

void Adam::load_state(const Checkpoint& ckpt, const std::string& prefix) {
  torch::NoGradGuard no_grad;
  for (auto& s : slots_) {
    const std::string base = prefix + s.param.name;
    try {
      s.m.copy_(ckpt.at(base + "/m"));
      s.v.copy_(ckpt.at(base + "/v"));
      s.t = static_cast<int64_t>(ckpt.at(base + "/t").item<double>());
    } catch (const std::out_of_range&) {
      throw CheckpointError(CheckpointError::Kind::kCorrupt, "missing optimizer state for " + base);
    }
  }
}

}  // namespace styleblend
