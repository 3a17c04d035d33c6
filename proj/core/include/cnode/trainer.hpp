#pragma once

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "cnode/adam.hpp"
#include "cnode/config.hpp"
#include "cnode/constraints.hpp"
#include "cnode/dataset.hpp"
#include "cnode/diff.hpp"
#include "cnode/mlp.hpp"
#include "cnode/ode.hpp"
#include "cnode/penalty.hpp"

namespace cnode {

/// Network, data, constraints and solver for one training run.
struct TrainingProblem {
  Mlp net;
  Trajectory train;
  Trajectory test;
  ConstraintSet constraints;
  SolverOptions solver;

  /// Generates the task's datasets and resolves the architecture and constraint presets.
  static TrainingProblem from_config(const ExperimentConfig& config);
};

struct TrainOptions {
  LossRegime regime;
  long k_max = kDeskIterations;
  AdamOptions adam;
  double zero_threshold = 0.0;
  /// Called after every iteration with that iteration's report.
  std::function<void(const PenaltyReport&)> on_iteration;
};

/// The loss of a regime at one parameter point, recorded on a fresh graph so
/// the caller can decide whether a backward pass is needed.
class ObjectiveTape {
 public:
  ObjectiveTape(const TrainingProblem& problem, std::span<const double> theta,
                const LossRegime& regime, double zero_threshold = 0.0);

  const PenaltyReport& report() const { return report_; }
  double value() const { return report_.phi; }
  /// d(objective)/d(theta). Runs the backward pass on first use.
  std::vector<double> gradient();

 private:
  std::unique_ptr<Graph> graph_;
  std::vector<DiffValue> params_;
  DiffValue root_;
  PenaltyReport report_;
};

/// Same objective on plain doubles, without recording a graph.
PenaltyReport objective_report(const TrainingProblem& problem, std::span<const double> theta,
                               const LossRegime& regime, double zero_threshold = 0.0);

/// Predicted trajectory from the first state of `reference` over its grid.
Trajectory predict(const Mlp& net, std::span<const double> theta, const Trajectory& reference,
                   const SolverOptions& solver);

struct EvalMetrics {
  double mse = 0.0;
  double p_raw = 0.0;
  bool diverged = false;
};

/// MSE (mean over steps and components) and raw constraint violation of the
/// model's prediction of `test`. Divergence is reported as infinite metrics.
EvalMetrics evaluate(std::span<const double> theta, const Mlp& net, const Trajectory& test,
                     const ConstraintSet& constraints, const SolverOptions& solver);

enum class RunStatus { kOk, kDiverged };

struct RunMetrics {
  double train_mse = 0.0;
  double train_p_raw = 0.0;
  double test_mse = 0.0;
  double test_p_raw = 0.0;
  bool diverged = false;
};

struct RunResult {
  RunStatus status = RunStatus::kOk;
  std::string error;
  std::vector<double> theta_final;
  RunMetrics metrics;
  std::vector<PenaltyReport> history;
  /// phi_best after each iteration (self-adaptive runs only).
  std::vector<double> phi_best_history;
  double phi_best = 0.0;
  double wall_time_s = 0.0;
};

/// Self-adaptive penalty training with best-point tracking. Every iteration
/// solves from theta, evaluates phi, and on improvement stores (theta, phi,
/// grad phi) as the best point; Adam then always steps from the best point
/// with its cached gradient. Returns theta_best.
RunResult train_self_adaptive(const TrainingProblem& problem, const TrainOptions& options,
                              std::vector<double> theta);

/// Plain descent on l (vanilla) or l + mu/2 P (quadratic); returns the last iterate.
RunResult train_baseline(const TrainingProblem& problem, const TrainOptions& options,
                         std::vector<double> theta);

/// Builds the problem from `config`, initialises parameters from its seed and
/// dispatches on the method. Metrics are filled in on return.
RunResult train_self_adaptive(const ExperimentConfig& config);
RunResult train_baseline(const ExperimentConfig& config);
RunResult run_experiment(const ExperimentConfig& config);

LossRegime regime_for(const ExperimentConfig& config);
TrainOptions options_for(const ExperimentConfig& config);

}  // namespace cnode
