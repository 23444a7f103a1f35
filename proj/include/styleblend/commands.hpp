#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>

#include <json.hpp>

#include "styleblend/selfcheck.hpp"
#include "styleblend/trainer.hpp"

namespace styleblend {

/// Process exit codes shared by every command.
enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,
  kExitBadConfig = 2,
  kExitBadData = 3,
  kExitNonFinite = 4,
};

inline constexpr const char* kSeedEnvVar = "STYLEBLEND_SEED";

/// Value of STYLEBLEND_SEED, if set and parseable.
std::optional<uint64_t> seed_from_env();

struct TrainArgs {
  std::filesystem::path config;
  std::filesystem::path data;
  std::filesystem::path out;
  std::optional<std::filesystem::path> resume;
  TrainConfig train;
};

struct SwapArgs {
  std::filesystem::path ckpt;
  std::filesystem::path source;
  std::filesystem::path target;
  std::filesystem::path out;
  std::optional<uint64_t> seed;
};

struct LossesArgs {
  std::filesystem::path ckpt;
  std::filesystem::path source;
  std::filesystem::path target;
  std::optional<uint64_t> seed;
};

// Diagnostics go to `err` as one JSON object per line.
int cmd_train(const TrainArgs& args, std::ostream& err);
int cmd_swap(const SwapArgs& args, std::ostream& err);
/// Prints one JSON LossReport (plus "rec_unpaired" and "same_input").
int cmd_losses(const LossesArgs& args, std::ostream& out, std::ostream& err);
int cmd_selfcheck(Mutation mutation, std::ostream& out, std::ostream& err);

/// Loss report for a single (source, target) pair under `model`.
nlohmann::json pair_losses(FaceSwapModel& model, const torch::Tensor& source,
                           const torch::Tensor& target, uint64_t noise_seed,
                           const LossWeights& weights = {});

}  // namespace styleblend
