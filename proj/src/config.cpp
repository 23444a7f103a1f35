#include "styleblend/config.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <fstream>

namespace styleblend {

namespace {

constexpr std::array<const char*, 10> kFieldNames = {
    "image_size",     "style_count",    "style_dim", "heads",          "sbm_layers",
    "pyramid_levels", "decoder_blocks", "id_dim",    "landmark_count", "seed"};

bool is_pow2(int64_t v) { return v > 0 && std::has_single_bit(static_cast<uint64_t>(v)); }

}  // namespace

ModelConfig ModelConfig::full_scale() {
  ModelConfig c;
  c.image_size = 1024;
  c.style_count = 18;
  c.style_dim = 512;
  c.heads = 8;
  c.sbm_layers = 4;
  c.pyramid_levels = 3;
  c.decoder_blocks = 9;
  c.id_dim = 512;
  c.landmark_count = 19;
  return c;
}

void ModelConfig::validate() const {
  validate_shapes();
  if (image_size < 32) {
    throw ConfigError(ConfigErrorCode::kImageSizeTooSmall, "image_size must be at least 32");
  }
}

void ModelConfig::validate_shapes() const {
  using E = ConfigErrorCode;
  if (style_count <= 0 || style_dim <= 0 || heads <= 0 || sbm_layers <= 0 || pyramid_levels <= 0 ||
      decoder_blocks <= 0 || id_dim <= 0 || landmark_count <= 0) {
    throw ConfigError(E::kNonPositiveCount, "all counts must be positive");
  }
  if (!is_pow2(image_size)) {
    throw ConfigError(E::kImageSizeNotPowerOfTwo,
                      "image_size " + std::to_string(image_size) + " is not a power of two");
  }
  if (style_dim % heads != 0) {
    throw ConfigError(E::kStyleDimNotDivisibleByHeads,
                      "style_dim " + std::to_string(style_dim) + " not divisible by heads " +
                          std::to_string(heads));
  }
  if (style_count % pyramid_levels != 0) {
    throw ConfigError(E::kStyleCountNotDivisibleByLevels,
                      "style_count " + std::to_string(style_count) +
                          " not divisible by pyramid_levels " + std::to_string(pyramid_levels));
  }
  if (decoder_blocks > 30 || image_size != (int64_t{1} << (decoder_blocks + 1))) {
    throw ConfigError(E::kImageSizeBlocksMismatch,
                      "image_size must equal 2^(decoder_blocks+1)");
  }
  if (style_count < 2 * decoder_blocks) {
    throw ConfigError(E::kTooFewStyleElements,
                      "style_count must be at least 2*decoder_blocks");
  }
  if (pyramid_levels > decoder_blocks) {
    throw ConfigError(E::kPyramidTooDeep, "pyramid_levels too deep for image_size");
  }
}

int64_t ModelConfig::decoder_channels(int64_t block) const {
  const int64_t top = pyramid_channels();
  const int64_t floor = std::max<int64_t>(top / 4, 1);
  return std::max(top >> std::max<int64_t>(0, block - 1), floor);
}

void to_json(nlohmann::json& j, const ModelConfig& c) {
  j = nlohmann::json{{"image_size", c.image_size},
                     {"style_count", c.style_count},
                     {"style_dim", c.style_dim},
                     {"heads", c.heads},
                     {"sbm_layers", c.sbm_layers},
                     {"pyramid_levels", c.pyramid_levels},
                     {"decoder_blocks", c.decoder_blocks},
                     {"id_dim", c.id_dim},
                     {"landmark_count", c.landmark_count},
                     {"seed", c.seed}};
}

void from_json(const nlohmann::json& j, ModelConfig& c) {
  if (!j.is_object()) {
    throw ConfigError(ConfigErrorCode::kBadValue, "config must be a JSON object");
  }
  for (const auto& [key, _] : j.items()) {
    if (std::find_if(kFieldNames.begin(), kFieldNames.end(),
                     [&](const char* n) { return key == n; }) == kFieldNames.end()) {
      throw ConfigError(ConfigErrorCode::kUnknownKey, "unknown config key '" + key + "'");
    }
  }
  auto read = [&](const char* key, auto& field) {
    if (!j.contains(key)) return;
    const auto& v = j.at(key);
    if (!v.is_number_integer()) {
      throw ConfigError(ConfigErrorCode::kBadValue, std::string("config key '") + key +
                                                        "' must be an integer");
    }
    field = v.get<std::remove_reference_t<decltype(field)>>();
  };
  read("image_size", c.image_size);
  read("style_count", c.style_count);
  read("style_dim", c.style_dim);
  read("heads", c.heads);
  read("sbm_layers", c.sbm_layers);
  read("pyramid_levels", c.pyramid_levels);
  read("decoder_blocks", c.decoder_blocks);
  read("id_dim", c.id_dim);
  read("landmark_count", c.landmark_count);
  read("seed", c.seed);
}

ModelConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError(ConfigErrorCode::kBadValue, "cannot open config " + path.string());
  }
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(ConfigErrorCode::kBadValue, std::string("malformed config: ") + e.what());
  }
  ModelConfig c = j.get<ModelConfig>();
  c.validate();
  return c;
}

}  // namespace styleblend
