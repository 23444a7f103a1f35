#pragma once

#include <functional>
#include <string>
#include <vector>

#include "styleblend/config.hpp"

namespace styleblend {

/// Deliberate defects the selfcheck must catch (mutation testing).
enum class Mutation {
  kNone,
  /// AdaIN statistics computed on a detached copy of x: identical forward
  /// values, wrong gradients.
  kAdainDetachedStatistics,
};

struct CheckOutcome {
  std::string name;
  std::string metric;  // "max_rel_error" or "max_deviation"
  double value = 0;
  double threshold = 0;
  bool passed() const { return value < threshold; }
};

/// The float64 toy configuration used by gradient checks: 16x16 images,
/// L=6, D=8, 2 heads, 2 SBM layers, 3 pyramid levels, 3 decoder blocks.
ModelConfig toy_config();

inline constexpr double kGradTolerance = 1e-4;
inline constexpr double kPartitionTolerance = 1e-6;
inline constexpr double kFixedPointTolerance = 1e-5;

/// Names of every check in execution order.
std::vector<std::string> selfcheck_names();

/// Runs one named check. Throws std::invalid_argument for unknown names.
CheckOutcome run_check(const std::string& name, Mutation mutation = Mutation::kNone);

/// Runs all checks, reporting each through `on_result`.
std::vector<CheckOutcome> run_selfcheck(Mutation mutation = Mutation::kNone,
                                        const std::function<void(const CheckOutcome&)>& on_result = {});

}  // namespace styleblend
