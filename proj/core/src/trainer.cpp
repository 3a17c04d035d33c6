#include "cnode/trainer.hpp"

#include <chrono>
#include <limits>

#include "cnode/errors.hpp"

namespace cnode {
namespace {

template <class Scalar>
struct Objective {
  Scalar root;
  PenaltyReport report;
};

/// A constant of the same scalar kind as `like`.
inline double lift(double, double v) { return v; }
inline DiffValue lift(DiffValue like, double v) { return detail::owner(like).variable(v); }

template <class Scalar>
Objective<Scalar> compute_objective(const TrainingProblem& p, std::span<const Scalar> theta,
                                    const LossRegime& regime, double zero_threshold) {
  const auto dynamics = [&](std::span<const Scalar> y) { return p.net.forward<Scalar>(theta, y); };
  std::vector<Scalar> y0;
  y0.reserve(p.train.dim());
  for (double v : p.train.states.front()) y0.push_back(lift(theta.front(), v));

  const BasicTrajectory<Scalar> pred = ode_solve<Scalar>(dynamics, std::move(y0), p.train.grid,
                                                         p.solver);
  const Scalar l = objective_l(pred, p.train);
  const Scalar F = normalised_objective(l);
  const BasicPenaltyTerms<Scalar> terms = penalty_terms(p.constraints, pred, zero_threshold);

  PenaltyReport report;
  report.l = value_of(l);
  report.F = value_of(F);
  report.P_theta = terms.total;
  report.feasible = terms.total <= regime.feasibility_tol;
  report.constraints.reserve(terms.terms.size());
  for (const auto& t : terms.terms) report.constraints.push_back({t.id, value_of(t.penalty), t.mu});

  Scalar root = l;
  switch (regime.kind) {
    case RegimeKind::kVanilla:
      break;
    case RegimeKind::kQuadratic:
      root = phi_quadratic(l, p.constraints, pred, regime.mu);
      break;
    case RegimeKind::kSelfAdaptive:
      root = phi_self_adaptive(F, terms, regime.feasibility_tol);
      break;
  }
  report.phi = value_of(root);
  return {root, std::move(report)};
}

std::string describe_failure(const std::exception& e, long iteration) {
  return std::string(e.what()) + " at iteration " + std::to_string(iteration);
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

void fill_metrics(RunResult& result, const TrainingProblem& problem) {
  const EvalMetrics train =
      evaluate(result.theta_final, problem.net, problem.train, problem.constraints, problem.solver);
  const EvalMetrics test =
      evaluate(result.theta_final, problem.net, problem.test, problem.constraints, problem.solver);
  result.metrics = {train.mse, train.p_raw, test.mse, test.p_raw, train.diverged || test.diverged};
}

}  // namespace

TrainingProblem TrainingProblem::from_config(const ExperimentConfig& config) {
  config.validate();
  SystemSpec base = SystemSpec::defaults(config.system);
  base.noise_sigma = config.noise_sigma;
  base.noise_seed = config.seed;
  auto [train, test] = make_task(base, TaskSpec::defaults(config.system, config.task));
  const std::string name = to_string(config.system);
  const std::size_t dim = state_dim(config.system);
  Mlp net = config.architecture.empty() ? Mlp::preset(name)
                                        : Mlp::parse(config.architecture, dim, dim);
  return TrainingProblem{std::move(net), std::move(train), std::move(test),
                         constraint_preset(name, base.params), config.solver};
}

ObjectiveTape::ObjectiveTape(const TrainingProblem& problem, std::span<const double> theta,
                             const LossRegime& regime, double zero_threshold)
    : graph_(std::make_unique<Graph>()) {
  params_ = graph_->variables(theta);
  auto objective =
      compute_objective<DiffValue>(problem, std::span<const DiffValue>(params_), regime,
                                   zero_threshold);
  root_ = objective.root;
  report_ = std::move(objective.report);
}

std::vector<double> ObjectiveTape::gradient() {
  if (!graph_->has_gradients()) graph_->backward(root_);
  return graph_->gradients(params_);
}

PenaltyReport objective_report(const TrainingProblem& problem, std::span<const double> theta,
                               const LossRegime& regime, double zero_threshold) {
  return compute_objective<double>(problem, theta, regime, zero_threshold).report;
}

Trajectory predict(const Mlp& net, std::span<const double> theta, const Trajectory& reference,
                   const SolverOptions& solver) {
  const auto dynamics = [&](std::span<const double> y) { return net.forward<double>(theta, y); };
  return ode_solve<double>(dynamics, reference.states.front(), reference.grid, solver);
}

EvalMetrics evaluate(std::span<const double> theta, const Mlp& net, const Trajectory& test,
                     const ConstraintSet& constraints, const SolverOptions& solver) {
  if (test.dim() != net.input_dim() || net.input_dim() != net.output_dim()) {
    throw ShapeError("network dimensions do not match the test trajectory");
  }
  Trajectory pred;
  try {
    pred = predict(net, theta, test, solver);
  } catch (const DivergenceError&) {
    constexpr double inf = std::numeric_limits<double>::infinity();
    return {inf, inf, true};
  }
  double sum = 0.0;
  for (std::size_t n = 0; n < pred.size(); ++n) {
    for (std::size_t d = 0; d < pred.dim(); ++d) {
      const double r = pred.states[n][d] - test.states[n][d];
      sum += r * r;
    }
  }
  const double mse = sum / static_cast<double>(pred.size() * pred.dim());
  return {mse, raw_violation_metric(constraints, pred), false};
}

RunResult train_self_adaptive(const TrainingProblem& problem, const TrainOptions& options,
                              std::vector<double> theta) {
  options.regime.validate();
  if (options.regime.kind != RegimeKind::kSelfAdaptive) {
    throw ConfigError("train_self_adaptive needs the self-adaptive regime");
  }
  if (options.k_max < 1) throw ConfigError("k_max must be >= 1");
  const auto start = std::chrono::steady_clock::now();

  RunResult result;
  AdamState adam(theta.size(), options.adam);
  double phi_best = std::numeric_limits<double>::infinity();
  std::vector<double> theta_best = theta;
  std::vector<double> grad_best(theta.size(), 0.0);
  result.history.reserve(static_cast<std::size_t>(options.k_max));
  result.phi_best_history.reserve(static_cast<std::size_t>(options.k_max));

  for (long k = 1; k <= options.k_max; ++k) {
    try {
      ObjectiveTape tape(problem, theta, options.regime, options.zero_threshold);
      PenaltyReport report = tape.report();
      report.iteration = k;
      if (report.phi < phi_best) {
        theta_best = theta;
        phi_best = report.phi;
        grad_best = tape.gradient();
      }
      result.history.push_back(report);
      result.phi_best_history.push_back(phi_best);
      if (options.on_iteration) options.on_iteration(report);

      // Rejected candidates are discarded: always step from the best point
      // with its cached gradient. Adam's moments keep evolving.
      theta = theta_best;
      adam_step(adam, theta, grad_best);
    } catch (const DivergenceError& e) {
      result.status = RunStatus::kDiverged;
      result.error = describe_failure(e, k);
      break;
    } catch (const NumericalError& e) {
      result.status = RunStatus::kDiverged;
      result.error = describe_failure(e, k);
      break;
    }
  }

  result.theta_final = std::move(theta_best);
  result.phi_best = phi_best;
  result.wall_time_s = seconds_since(start);
  return result;
}

RunResult train_baseline(const TrainingProblem& problem, const TrainOptions& options,
                         std::vector<double> theta) {
  options.regime.validate();
  if (options.regime.kind == RegimeKind::kSelfAdaptive) {
    throw ConfigError("train_baseline needs the vanilla or quadratic regime");
  }
  if (options.k_max < 1) throw ConfigError("k_max must be >= 1");
  const auto start = std::chrono::steady_clock::now();

  RunResult result;
  AdamState adam(theta.size(), options.adam);
  result.history.reserve(static_cast<std::size_t>(options.k_max));
  result.phi_best = std::numeric_limits<double>::infinity();

  for (long k = 1; k <= options.k_max; ++k) {
    try {
      ObjectiveTape tape(problem, theta, options.regime, options.zero_threshold);
      PenaltyReport report = tape.report();
      report.iteration = k;
      const std::vector<double> grad = tape.gradient();
      result.phi_best = std::min(result.phi_best, report.phi);
      result.history.push_back(std::move(report));
      if (options.on_iteration) options.on_iteration(result.history.back());
      adam_step(adam, theta, grad);
    } catch (const DivergenceError& e) {
      result.status = RunStatus::kDiverged;
      result.error = describe_failure(e, k);
      break;
    } catch (const NumericalError& e) {
      result.status = RunStatus::kDiverged;
      result.error = describe_failure(e, k);
      break;
    }
  }

  result.theta_final = std::move(theta);
  result.wall_time_s = seconds_since(start);
  return result;
}

LossRegime regime_for(const ExperimentConfig& config) {
  switch (config.method) {
    case Method::kVanilla: {
      LossRegime r = LossRegime::vanilla();
      r.feasibility_tol = config.feasibility_tol;
      return r;
    }
    case Method::kQuadratic: {
      LossRegime r = LossRegime::quadratic(config.mu.value_or(0.0));
      r.feasibility_tol = config.feasibility_tol;
      return r;
    }
    case Method::kSelfAdaptive:
      return LossRegime::self_adaptive(config.feasibility_tol);
  }
  throw ConfigError("unknown method");
}

TrainOptions options_for(const ExperimentConfig& config) {
  TrainOptions options;
  options.regime = regime_for(config);
  options.k_max = config.k_max;
  options.adam.learning_rate = config.lr;
  options.zero_threshold = config.zero_threshold;
  return options;
}

RunResult train_self_adaptive(const ExperimentConfig& config) {
  if (config.method != Method::kSelfAdaptive) {
    throw ConfigError("config method is not self-adaptive");
  }
  return run_experiment(config);
}

RunResult train_baseline(const ExperimentConfig& config) {
  if (config.method == Method::kSelfAdaptive) {
    throw ConfigError("config method is not a baseline");
  }
  return run_experiment(config);
}

RunResult run_experiment(const ExperimentConfig& config) {
  const TrainingProblem problem = TrainingProblem::from_config(config);
  std::vector<double> theta = init_params(problem.net, config.seed);
  const TrainOptions options = options_for(config);
  RunResult result = config.method == Method::kSelfAdaptive
                         ? train_self_adaptive(problem, options, std::move(theta))
                         : train_baseline(problem, options, std::move(theta));
  fill_metrics(result, problem);
  return result;
}

}  // namespace cnode
