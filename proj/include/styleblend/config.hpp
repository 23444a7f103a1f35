#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>

#include <json.hpp>

namespace styleblend {

/// Reasons a ModelConfig can be rejected. Each violated constraint has its own code.
enum class ConfigErrorCode {
  kImageSizeNotPowerOfTwo,
  kImageSizeTooSmall,
  kNonPositiveCount,
  kStyleDimNotDivisibleByHeads,
  kStyleCountNotDivisibleByLevels,
  kImageSizeBlocksMismatch,
  kTooFewStyleElements,
  kPyramidTooDeep,
  kUnknownKey,
  kBadValue,
};

class ConfigError : public std::invalid_argument {
 public:
  ConfigError(ConfigErrorCode code, const std::string& what)
      : std::invalid_argument(what), code_(code) {}
  ConfigErrorCode code() const noexcept { return code_; }

 private:
  ConfigErrorCode code_;
};

/// Architecture hyper-parameters shared by every model component.
///
/// Decoder block b (0-based) renders at 2^(b+2), so image_size must equal
/// 2^(decoder_blocks+1). Each block consumes two style elements; elements
/// beyond 2*decoder_blocks drive extra layers at the final resolution.
struct ModelConfig {
  int64_t image_size = 64;
  int64_t style_count = 12;
  int64_t style_dim = 64;
  int64_t heads = 4;
  int64_t sbm_layers = 4;
  int64_t pyramid_levels = 3;
  int64_t decoder_blocks = 5;
  int64_t id_dim = 64;
  int64_t landmark_count = 19;
  uint64_t seed = 0;

  static ModelConfig desk_scale() { return {}; }
  /// 18x512 style code, 9 decoder blocks (4^2 -> 1024^2), 19 landmarks.
  static ModelConfig full_scale();

  /// Throws ConfigError naming the first violated constraint.
  void validate() const;
  /// Structural checks only; skips the minimum image size so that tiny
  /// float64 gradient-check models can be built.
  void validate_shapes() const;

  int64_t styles_per_level() const { return style_count / pyramid_levels; }
  int64_t head_dim() const { return style_dim / heads; }
  /// Spatial side of pyramid level p, levels ordered coarse to fine.
  int64_t level_side(int64_t p) const { return image_size >> (pyramid_levels + 1 - p); }

  // Derived channel widths.
  int64_t pyramid_channels() const { return std::min<int64_t>(style_dim, 64); }
  int64_t base_width() const { return std::clamp<int64_t>(style_dim / 4, 2, 16); }
  int64_t decoder_channels(int64_t block) const;

  bool operator==(const ModelConfig&) const = default;
};

void to_json(nlohmann::json& j, const ModelConfig& c);
/// Keys must be ModelConfig field names; missing keys keep desk-scale defaults.
void from_json(const nlohmann::json& j, ModelConfig& c);

ModelConfig load_config(const std::filesystem::path& path);

}  // namespace styleblend
