#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "cnode/dataset.hpp"
#include "cnode/ode.hpp"

namespace cnode {

enum class Method { kVanilla, kQuadratic, kSelfAdaptive };

std::string to_string(Method method);
/// Accepts "vanilla", "quadratic", "self-adaptive"; throws ConfigError otherwise.
Method parse_method(const std::string& name);

/// Everything that determines a run. Two runs with equal configs produce
/// bit-identical histories and metrics.
struct ExperimentConfig {
  SystemKind system = SystemKind::kWpg;
  TaskKind task = TaskKind::kReconstruction;
  Method method = Method::kSelfAdaptive;
  std::optional<double> mu;  // required for quadratic, rejected otherwise
  std::uint64_t seed = 1;
  long k_max = 2000;
  double lr = 1e-5;
  std::string architecture;  // empty selects the system's preset
  SolverOptions solver;
  double feasibility_tol = 1e-4;
  double zero_threshold = 0.0;
  double noise_sigma = 0.0;
  std::string output_dir;

  /// Throws ConfigError describing the first invalid field.
  void validate() const;

  /// "vanilla", "quadratic(mu=10)" or "self-adaptive".
  std::string method_label() const;

  bool operator==(const ExperimentConfig&) const = default;
};

inline constexpr long kFullIterations = 10000;
inline constexpr long kDeskIterations = 2000;
inline constexpr double kFullLearningRate = 1e-5;

}  // namespace cnode
