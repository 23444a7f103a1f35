#include "styleblend/checkpoint.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <set>

#include <json.hpp>
#include <torch/torch.h>

namespace styleblend {

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

namespace {

constexpr char kMagic[4] = {'S', 'B', 'L', 'D'};
constexpr uint8_t kDtypeF32 = 0;
constexpr uint8_t kDtypeF64 = 1;

using Kind = CheckpointError::Kind;

template <typename T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  template <typename T>
  T get() {
    T v{};
    read(&v, sizeof(T));
    return v;
  }

  void read(void* dst, size_t n) {
    in_.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
    if (static_cast<size_t>(in_.gcount()) != n) {
      throw CheckpointError(Kind::kCorrupt, "checkpoint truncated");
    }
  }

  std::string string(size_t n) {
    std::string s(n, '\0');
    read(s.data(), n);
    return s;
  }

  bool at_end() { return in_.peek() == std::char_traits<char>::eof(); }

 private:
  std::istream& in_;
};

nlohmann::json manifest_json(const CheckpointManifest& m, size_t tensor_count) {
  return {{"format_version", m.format_version},
          {"config", m.config},
          {"step", m.step},
          {"phase", static_cast<int>(m.phase)},
          {"tensor_count", tensor_count}};
}

}  // namespace

const torch::Tensor& Checkpoint::at(const std::string& name) const {
  auto it = std::find_if(tensors.begin(), tensors.end(),
                         [&](const NamedTensor& t) { return t.name == name; });
  if (it == tensors.end()) throw std::out_of_range("no tensor named " + name);
  return it->value;
}

void save_checkpoint(const std::filesystem::path& path, const TensorList& tensors,
                     const CheckpointManifest& manifest) {
  std::set<std::string> seen;
  for (const auto& t : tensors) {
    if (!seen.insert(t.name).second) {
      throw CheckpointError(Kind::kDuplicateName, "duplicate tensor name " + t.name);
    }
    const auto dtype = t.value.scalar_type();
    if (dtype != torch::kFloat32 && dtype != torch::kFloat64) {
      throw CheckpointError(Kind::kUnsupportedDtype, "tensor " + t.name + " is not f32/f64");
    }
  }

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CheckpointError(Kind::kIo, "cannot open " + path.string() + " for writing");

  out.write(kMagic, 4);
  put<uint32_t>(out, manifest.format_version);
  const std::string json = manifest_json(manifest, tensors.size()).dump();
  put<uint64_t>(out, json.size());
  out.write(json.data(), static_cast<std::streamsize>(json.size()));

  for (const auto& t : tensors) {
    const torch::Tensor data = t.value.detach().to(torch::kCPU).contiguous();
    put<uint32_t>(out, static_cast<uint32_t>(t.name.size()));
    out.write(t.name.data(), static_cast<std::streamsize>(t.name.size()));
    put<uint8_t>(out, data.scalar_type() == torch::kFloat32 ? kDtypeF32 : kDtypeF64);
    put<uint8_t>(out, static_cast<uint8_t>(data.dim()));
    for (int64_t d : data.sizes()) put<uint64_t>(out, static_cast<uint64_t>(d));
    out.write(static_cast<const char*>(data.data_ptr()),
              static_cast<std::streamsize>(data.numel() * data.element_size()));
  }
  out.flush();
  if (!out) throw CheckpointError(Kind::kIo, "write failed for " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError(Kind::kIo, "cannot open " + path.string());
  Reader r(in);

  char magic[4];
  try {
    r.read(magic, 4);
  } catch (const CheckpointError&) {
    throw CheckpointError(Kind::kCorrupt, "not a checkpoint archive (too short)");
  }
  if (std::memcmp(magic, kMagic, 4) != 0) {
    throw CheckpointError(Kind::kCorrupt, "bad magic bytes in " + path.string());
  }
  const auto version = r.get<uint32_t>();
  if (version != kCheckpointFormatVersion) {
    throw CheckpointError(Kind::kUnsupportedVersion,
                          "unsupported checkpoint format_version " + std::to_string(version));
  }

  const auto json_len = r.get<uint64_t>();
  if (json_len > (uint64_t{1} << 30)) throw CheckpointError(Kind::kCorrupt, "manifest too large");
  Checkpoint ckpt;
  size_t tensor_count = 0;
  try {
    const auto j = nlohmann::json::parse(r.string(json_len));
    ckpt.manifest.format_version = j.at("format_version").get<uint32_t>();
    ckpt.manifest.config = j.at("config").get<ModelConfig>();
    ckpt.manifest.step = j.at("step").get<int64_t>();
    const int phase = j.at("phase").get<int>();
    if (phase != 1 && phase != 2) throw CheckpointError(Kind::kCorrupt, "bad phase flag");
    ckpt.manifest.phase = static_cast<TrainPhase>(phase);
    tensor_count = j.at("tensor_count").get<size_t>();
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(Kind::kCorrupt, std::string("bad manifest: ") + e.what());
  } catch (const ConfigError& e) {
    throw CheckpointError(Kind::kCorrupt, std::string("bad manifest config: ") + e.what());
  }
  if (ckpt.manifest.format_version != version) {
    throw CheckpointError(Kind::kCorrupt, "manifest version disagrees with header");
  }

  std::set<std::string> seen;
  for (size_t i = 0; i < tensor_count; ++i) {
    NamedTensor t;
    t.name = r.string(r.get<uint32_t>());
    if (!seen.insert(t.name).second) {
      throw CheckpointError(Kind::kCorrupt, "duplicate tensor name " + t.name);
    }
    const auto tag = r.get<uint8_t>();
    if (tag != kDtypeF32 && tag != kDtypeF64) {
      throw CheckpointError(Kind::kCorrupt, "unknown dtype tag for " + t.name);
    }
    const auto rank = r.get<uint8_t>();
    std::vector<int64_t> dims(rank);
    for (auto& d : dims) {
      const auto v = r.get<uint64_t>();
      if (v > (uint64_t{1} << 40)) throw CheckpointError(Kind::kCorrupt, "absurd tensor dim");
      d = static_cast<int64_t>(v);
    }
    t.value = torch::empty(dims, tag == kDtypeF32 ? torch::kFloat32 : torch::kFloat64);
    r.read(t.value.data_ptr(), static_cast<size_t>(t.value.numel() * t.value.element_size()));
    ckpt.tensors.push_back(std::move(t));
  }
  if (!r.at_end()) throw CheckpointError(Kind::kCorrupt, "trailing bytes after last tensor");
  return ckpt;
}

}  // namespace styleblend
