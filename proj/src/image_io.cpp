#include "styleblend/image_io.hpp"

#include <csetjmp>
#include <cstdio>
#include <memory>
#include <string>

#include <png.h>
#include <torch/torch.h>

namespace styleblend {

namespace {

struct FileCloser {
  void operator()(FILE* f) const { std::fclose(f); }
};
using File = std::unique_ptr<FILE, FileCloser>;

// libpng reports errors by longjmp; the helpers below keep only trivially
// destructible locals between setjmp and the libpng calls.
thread_local std::string g_png_error;

void png_fail(png_structp png, png_const_charp msg) {
  g_png_error = msg;
  png_longjmp(png, 1);
}
void png_warn(png_structp, png_const_charp) {}

bool read_header(png_structp png, png_infop info, FILE* f) {
  if (setjmp(png_jmpbuf(png))) return false;
  png_init_io(png, f);
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);
  const auto color = png_get_color_type(png, info);
  const auto depth = png_get_bit_depth(png, info);
  if (depth == 16) png_set_strip_16(png);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA) {
    png_set_gray_to_rgb(png);
  }
  png_set_strip_alpha(png);
  png_read_update_info(png, info);
  return true;
}

bool read_rows(png_structp png, png_bytepp rows) {
  if (setjmp(png_jmpbuf(png))) return false;
  png_read_image(png, rows);
  png_read_end(png, nullptr);
  return true;
}

bool write_rows(png_structp png, png_infop info, FILE* f, png_uint_32 w, png_uint_32 h,
                png_bytepp rows) {
  if (setjmp(png_jmpbuf(png))) return false;
  png_init_io(png, f);
  png_set_IHDR(png, info, w, h, 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, rows);
  png_write_end(png, nullptr);
  return true;
}

}  // namespace

RgbImage read_png(const std::filesystem::path& path) {
  File f(std::fopen(path.c_str(), "rb"));
  if (!f) throw ImageError("cannot open " + path.string());
  png_byte sig[8];
  if (std::fread(sig, 1, 8, f.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0) {
    throw ImageError(path.string() + " is not a PNG file");
  }
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, png_fail, png_warn);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw ImageError("libpng init failed");
  }
  auto fail = [&](const std::string& why) {
    png_destroy_read_struct(&png, &info, nullptr);
    return ImageError(path.string() + ": " + why);
  };
  if (!read_header(png, info, f.get())) throw fail(g_png_error);

  RgbImage img;
  img.width = png_get_image_width(png, info);
  img.height = png_get_image_height(png, info);
  if (png_get_rowbytes(png, info) != static_cast<size_t>(img.width * 3)) {
    throw fail("unexpected PNG row layout");
  }
  img.pixels.resize(static_cast<size_t>(img.width * img.height * 3));
  std::vector<png_bytep> rows(static_cast<size_t>(img.height));
  for (int64_t r = 0; r < img.height; ++r) rows[r] = img.pixels.data() + r * img.width * 3;
  if (!read_rows(png, rows.data())) throw fail(g_png_error);
  png_destroy_read_struct(&png, &info, nullptr);
  return img;
}

void write_png(const std::filesystem::path& path, const RgbImage& img) {
  if (img.pixels.size() != static_cast<size_t>(img.width * img.height * 3)) {
    throw ImageError("write_png: pixel buffer size mismatch");
  }
  File f(std::fopen(path.c_str(), "wb"));
  if (!f) throw ImageError("cannot open " + path.string() + " for writing");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, png_fail, png_warn);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw ImageError("libpng init failed");
  }
  std::vector<png_bytep> rows(static_cast<size_t>(img.height));
  for (int64_t r = 0; r < img.height; ++r) {
    rows[r] = const_cast<png_bytep>(img.pixels.data() + r * img.width * 3);
  }
  const bool ok = write_rows(png, info, f.get(), static_cast<png_uint_32>(img.width),
                             static_cast<png_uint_32>(img.height), rows.data());
  png_destroy_write_struct(&png, &info);
  if (!ok) throw ImageError(path.string() + ": " + g_png_error);
}

torch::Tensor to_tensor(const RgbImage& img) {
  auto hwc = torch::from_blob(const_cast<uint8_t*>(img.pixels.data()),
                              {img.height, img.width, 3}, torch::kUInt8);
  return hwc.permute({2, 0, 1}).to(torch::kFloat32).div(127.5).sub(1.0).contiguous();
}

RgbImage to_rgb(const torch::Tensor& chw) {
  if (chw.dim() != 3 || chw.size(0) != 3) throw ImageError("to_rgb: expected (3, H, W)");
  auto bytes = chw.detach()
                   .to(torch::kFloat64)
                   .clamp(-1.0, 1.0)
                   .add(1.0)
                   .mul(127.5)
                   .round()
                   .to(torch::kUInt8)
                   .permute({1, 2, 0})
                   .contiguous();
  RgbImage img;
  img.height = chw.size(1);
  img.width = chw.size(2);
  img.pixels.assign(bytes.data_ptr<uint8_t>(), bytes.data_ptr<uint8_t>() + bytes.numel());
  return img;
}

torch::Tensor load_face(const std::filesystem::path& path, int64_t size) {
  const RgbImage img = read_png(path);
  if (img.width < 1 || img.height < 1) throw ImageError(path.string() + " is empty");
  auto t = to_tensor(img);
  const int64_t side = std::min(img.width, img.height);
  t = t.narrow(1, (img.height - side) / 2, side).narrow(2, (img.width - side) / 2, side);
  if (side != size) {
    namespace F = torch::nn::functional;
    t = F::interpolate(t.unsqueeze(0), F::InterpolateFuncOptions()
                                           .size(std::vector<int64_t>{size, size})
                                           .mode(torch::kBilinear)
                                           .align_corners(false)
                                           .antialias(true))
            .squeeze(0);
  }
  return t.clamp(-1.0, 1.0).contiguous();
}

}  // namespace styleblend
