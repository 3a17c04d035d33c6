#pragma once

// Fixed-step explicit integrators for autonomous systems y' = f(y).
//
// The solver is a template over the scalar type. With DiffValue states every
// stage becomes part of the graph, so gradients of anything computed from the
// trajectory are exact for the discrete scheme (discretize-then-optimize).

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "cnode/diff.hpp"
#include "cnode/errors.hpp"

namespace cnode {

class TimeGrid {
 public:
  TimeGrid() = default;
  /// Throws ShapeError unless there are at least two finite, strictly increasing points.
  explicit TimeGrid(std::vector<double> points);

  /// n equally spaced points on [t0, t1], endpoints included.
  static TimeGrid uniform(double t0, double t1, std::size_t n);

  std::size_t size() const { return points_.size(); }
  double operator[](std::size_t i) const { return points_[i]; }
  double front() const { return points_.front(); }
  double back() const { return points_.back(); }
  std::span<const double> points() const { return points_; }

  bool operator==(const TimeGrid&) const = default;

 private:
  std::vector<double> points_;
};

enum class TrajectoryKind { kGroundTruth, kPredicted };

template <class Scalar>
struct BasicTrajectory {
  TimeGrid grid;
  std::vector<std::vector<Scalar>> states;
  TrajectoryKind kind = TrajectoryKind::kGroundTruth;

  std::size_t size() const { return states.size(); }
  std::size_t dim() const { return states.empty() ? 0 : states.front().size(); }

  /// Throws ShapeError if states and grid disagree in length or the state dimension varies.
  void validate() const {
    if (states.size() != grid.size()) {
      throw ShapeError("trajectory has " + std::to_string(states.size()) + " states but " +
                       std::to_string(grid.size()) + " grid points");
    }
    for (const auto& s : states) {
      if (s.size() != dim()) throw ShapeError("trajectory state dimension is not uniform");
    }
  }
};

using Trajectory = BasicTrajectory<double>;
using DiffTrajectory = BasicTrajectory<DiffValue>;

enum class SolverMethod { kEuler, kRk4 };

struct SolverOptions {
  SolverMethod method = SolverMethod::kRk4;
  int substeps = 1;

  bool operator==(const SolverOptions&) const = default;
};

std::string to_string(SolverMethod method);
/// Accepts "euler" or "rk4"; throws ConfigError otherwise.
SolverMethod parse_solver_method(const std::string& name);

namespace detail {

template <class Scalar, class Dynamics>
std::vector<Scalar> eval_dynamics(Dynamics& f, const std::vector<Scalar>& y) {
  std::vector<Scalar> dy = f(std::span<const Scalar>(y));
  if (dy.size() != y.size()) {
    throw ShapeError("dynamics returned " + std::to_string(dy.size()) +
                     " components for a state of dimension " + std::to_string(y.size()));
  }
  return dy;
}

/// y + h * k, componentwise.
template <class Scalar>
std::vector<Scalar> axpy(const std::vector<Scalar>& y, double h, const std::vector<Scalar>& k) {
  std::vector<Scalar> out;
  out.reserve(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) out.push_back(y[i] + h * k[i]);
  return out;
}

template <class Scalar, class Dynamics>
void step(Dynamics& f, std::vector<Scalar>& y, double h, SolverMethod method) {
  if (method == SolverMethod::kEuler) {
    y = axpy(y, h, eval_dynamics(f, y));
    return;
  }
  const auto k1 = eval_dynamics(f, y);
  const auto k2 = eval_dynamics(f, axpy(y, 0.5 * h, k1));
  const auto k3 = eval_dynamics(f, axpy(y, 0.5 * h, k2));
  const auto k4 = eval_dynamics(f, axpy(y, h, k3));
  for (std::size_t i = 0; i < y.size(); ++i) {
    y[i] = y[i] + (h / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  }
}

template <class Scalar>
bool all_finite(const std::vector<Scalar>& y) {
  for (const auto& v : y) {
    if (!std::isfinite(value_of(v))) return false;
  }
  return true;
}

}  // namespace detail

/// Integrates y' = f(y) from y0 at grid.front() and returns the state at every
/// grid point (states[0] == y0). Each grid interval is split into
/// `opts.substeps` equal steps of the chosen method.
///
/// Throws DivergenceError with the first grid index whose state is not finite.
template <class Scalar, class Dynamics>
BasicTrajectory<Scalar> ode_solve(Dynamics&& f, std::vector<Scalar> y0, const TimeGrid& grid,
                                  const SolverOptions& opts = {}) {
  if (opts.substeps < 1) throw ConfigError("substeps must be >= 1");
  if (grid.size() < 2) throw ShapeError("time grid needs at least two points");
  if (!detail::all_finite(y0)) throw DivergenceError(0);

  BasicTrajectory<Scalar> traj;
  traj.grid = grid;
  traj.kind = TrajectoryKind::kPredicted;
  traj.states.reserve(grid.size());
  traj.states.push_back(y0);

  std::vector<Scalar> y = std::move(y0);
  for (std::size_t n = 1; n < grid.size(); ++n) {
    const double h = (grid[n] - grid[n - 1]) / opts.substeps;
    try {
      for (int s = 0; s < opts.substeps; ++s) detail::step(f, y, h, opts.method);
    } catch (const NumericalError&) {
      throw DivergenceError(n);
    }
    if (!detail::all_finite(y)) throw DivergenceError(n);
    traj.states.push_back(y);
  }
  return traj;
}

}  // namespace cnode
