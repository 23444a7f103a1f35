#include "styleblend/rng.hpp"

#include <ATen/CPUGeneratorImpl.h>
#include <torch/torch.h>

namespace styleblend {

namespace {

uint64_t fnv1a(std::string_view s) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

RngStream::RngStream(uint64_t seed, std::string_view label)
    : derived_seed_(splitmix64(splitmix64(seed) ^ fnv1a(label))),
      gen_(at::make_generator<at::CPUGeneratorImpl>(derived_seed_)) {}

double RngStream::uniform() { return uniform({1}, torch::kFloat64).item<double>(); }

double RngStream::normal() { return normal({1}, torch::kFloat64).item<double>(); }

torch::Tensor RngStream::uniform(torch::IntArrayRef shape, torch::ScalarType dtype) {
  return torch::rand(shape, gen_, torch::TensorOptions().dtype(dtype));
}

torch::Tensor RngStream::normal(torch::IntArrayRef shape, torch::ScalarType dtype) {
  return torch::randn(shape, gen_, torch::TensorOptions().dtype(dtype));
}

torch::Tensor RngStream::randint(int64_t high, torch::IntArrayRef shape) {
  return torch::randint(high, shape, gen_, torch::TensorOptions().dtype(torch::kInt64));
}

}  // namespace styleblend
