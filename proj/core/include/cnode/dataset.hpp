#pragma once

// Synthetic ground truth for the three constrained systems:
//   wpg  logistic growth      p' = r p (1 - p / K)
//   cr   reaction chain       A -> B -> C -> D with rates k1, k2, k3
//   dho  damped oscillator    x' = v, v' = -(k/m) x - (c/m) v

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "cnode/ode.hpp"

namespace cnode {

enum class SystemKind { kWpg, kCr, kDho };
enum class TaskKind { kReconstruction, kExtrapolation, kCompletion };

std::string to_string(SystemKind system);
std::string to_string(TaskKind task);
/// Throws ConfigError listing the valid names.
SystemKind parse_system(const std::string& name);
TaskKind parse_task(const std::string& name);

std::size_t state_dim(SystemKind system);
std::vector<std::string> state_names(SystemKind system);

struct SystemSpec {
  SystemKind system = SystemKind::kWpg;
  std::map<std::string, double> params;
  std::vector<double> y0;
  double t_start = 0.0;
  double t_end = 1.0;
  std::size_t n_points = 2;
  double noise_sigma = 0.0;
  std::uint64_t noise_seed = 0;

  /// Default constants, initial state and training window of a system.
  static SystemSpec defaults(SystemKind system);

  /// Throws ConfigError on missing or out-of-range parameters.
  void validate() const;
};

struct Window {
  double t_start = 0.0;
  double t_end = 1.0;
  std::size_t n_points = 2;

  bool operator==(const Window&) const = default;
};

struct TaskSpec {
  TaskKind kind = TaskKind::kReconstruction;
  Window train;
  Window test;

  /// The train/test windows used for a system and task in the reference experiments.
  static TaskSpec defaults(SystemKind system, TaskKind task);

  /// Throws ConfigError if the windows are inconsistent with the task kind.
  void validate() const;
};

/// Integrates the system with rk4 (10 substeps per output interval) on an
/// equally spaced grid and optionally adds Gaussian observation noise.
Trajectory generate(const SystemSpec& spec);

/// Train and test trajectories for a task; both start from the base spec's
/// initial state at its t_start.
std::pair<Trajectory, Trajectory> make_task(const SystemSpec& base, const TaskSpec& task);

struct Dataset {
  SystemKind system = SystemKind::kWpg;
  std::map<std::string, double> params;
  std::vector<std::string> columns;
  Trajectory trajectory;
};

/// CSV: "# cnode-dataset v1 system=<name> params=<k=v;...>", a "t,<states>"
/// header, then one row per grid point with round-trip precision.
void write_dataset_csv(std::ostream& out, const SystemSpec& spec, const Trajectory& traj);
Dataset read_dataset_csv(std::istream& in);

}  // namespace cnode
