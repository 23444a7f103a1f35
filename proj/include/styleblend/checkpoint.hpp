#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <torch/types.h>

#include "styleblend/config.hpp"

namespace styleblend {

inline constexpr uint32_t kCheckpointFormatVersion = 1;

enum class TrainPhase : int { kEncoderBlender = 1, kDecoder = 2 };

struct CheckpointManifest {
  uint32_t format_version = kCheckpointFormatVersion;
  ModelConfig config;
  int64_t step = 0;
  TrainPhase phase = TrainPhase::kEncoderBlender;

  bool operator==(const CheckpointManifest&) const = default;
};

struct NamedTensor {
  std::string name;
  torch::Tensor value;
};
using TensorList = std::vector<NamedTensor>;

class CheckpointError : public std::runtime_error {
 public:
  enum class Kind { kIo, kDuplicateName, kUnsupportedDtype, kCorrupt, kUnsupportedVersion };
  CheckpointError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

struct Checkpoint {
  CheckpointManifest manifest;
  TensorList tensors;

  /// Throws std::out_of_range for unknown names.
  const torch::Tensor& at(const std::string& name) const;
};

/// Archive layout (all integers little-endian):
///   "SBLD" | u32 version | u64 len + JSON manifest |
///   per tensor: u32 len + name | u8 dtype (0=f32, 1=f64) | u8 rank | u64 dims[rank] | data
/// Tensors are written in list order; the manifest records their count.
void save_checkpoint(const std::filesystem::path& path, const TensorList& tensors,
                     const CheckpointManifest& manifest);

Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace styleblend
