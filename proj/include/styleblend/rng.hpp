#pragma once

#include <cstdint>
#include <string_view>

#include <ATen/core/Generator.h>
#include <torch/types.h>

namespace styleblend {

/// A deterministic random stream keyed by (seed, label).
///
/// Every random draw in the system goes through one of these. The label
/// is hashed into the seed, so "init" and "noise" streams of the same run
/// never share state.
class RngStream {
 public:
  RngStream(uint64_t seed, std::string_view label);

  uint64_t derived_seed() const { return derived_seed_; }

  double uniform();
  double normal();
  torch::Tensor uniform(torch::IntArrayRef shape, torch::ScalarType dtype = torch::kFloat32);
  torch::Tensor normal(torch::IntArrayRef shape, torch::ScalarType dtype = torch::kFloat32);
  /// Integers in [0, high).
  torch::Tensor randint(int64_t high, torch::IntArrayRef shape);

  at::Generator& generator() { return gen_; }

 private:
  uint64_t derived_seed_;
  at::Generator gen_;
};

inline RngStream seeded_rng(uint64_t seed, std::string_view label) { return {seed, label}; }

}  // namespace styleblend
