#pragma once

#include <filesystem>
#include <vector>

#include <torch/types.h>

namespace styleblend {

/// A directory of pre-aligned face PNGs, indexed in lexicographic order.
class Dataset {
 public:
  /// Throws ImageError if the directory is missing or holds no PNGs.
  Dataset(const std::filesystem::path& root, int64_t image_size);

  size_t size() const { return files_.size(); }
  const std::vector<std::filesystem::path>& files() const { return files_; }

  torch::Tensor load(size_t index) const;
  /// Every image stacked into (M, 3, S, S).
  torch::Tensor load_all() const;

 private:
  std::vector<std::filesystem::path> files_;
  int64_t image_size_;
};

}  // namespace styleblend
