#include "styleblend/dataset.hpp"

#include <algorithm>

#include <torch/torch.h>

#include "styleblend/image_io.hpp"

namespace styleblend {

Dataset::Dataset(const std::filesystem::path& root, int64_t image_size) : image_size_(image_size) {
  std::error_code ec;
  if (!std::filesystem::is_directory(root, ec)) {
    throw ImageError("data directory " + root.string() + " does not exist");
  }
  for (const auto& entry : std::filesystem::directory_iterator(root)) {
    if (!entry.is_regular_file()) continue;
    auto ext = entry.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (ext == ".png") files_.push_back(entry.path());
  }
  std::sort(files_.begin(), files_.end());
  if (files_.empty()) throw ImageError("no PNG images in " + root.string());
}

torch::Tensor Dataset::load(size_t index) const { return load_face(files_.at(index), image_size_); }

torch::Tensor Dataset::load_all() const {
  std::vector<torch::Tensor> all;
  all.reserve(files_.size());
  for (size_t i = 0; i < files_.size(); ++i) all.push_back(load(i));
  return torch::stack(all);
}

}  // namespace styleblend
