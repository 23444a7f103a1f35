#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <vector>

#include <torch/types.h>

namespace styleblend {

class ImageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// 8-bit interleaved RGB pixels, row-major.
struct RgbImage {
  int64_t width = 0;
  int64_t height = 0;
  std::vector<uint8_t> pixels;
};

/// Decodes any PNG (gray, palette, alpha, 16-bit) to 8-bit RGB.
RgbImage read_png(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const RgbImage& image);

/// (3, H, W) in [-1, 1] <-> 8-bit RGB, via v -> round((v + 1) * 127.5).
torch::Tensor to_tensor(const RgbImage& image);
RgbImage to_rgb(const torch::Tensor& chw);

/// Center-crop to a square, resize to `size` (antialiased bilinear), map to
/// [-1, 1]. Returns (3, size, size) float32.
torch::Tensor load_face(const std::filesystem::path& path, int64_t size);

}  // namespace styleblend
