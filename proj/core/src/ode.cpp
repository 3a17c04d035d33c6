#include "cnode/ode.hpp"

namespace cnode {

TimeGrid::TimeGrid(std::vector<double> points) : points_(std::move(points)) {
  if (points_.size() < 2) throw ShapeError("time grid needs at least two points");
  for (std::size_t i = 0; i < points_.size(); ++i) {
    if (!std::isfinite(points_[i])) throw ShapeError("time grid contains a non-finite point");
    if (i > 0 && !(points_[i] > points_[i - 1])) {
      throw ShapeError("time grid is not strictly increasing at index " + std::to_string(i));
    }
  }
}

TimeGrid TimeGrid::uniform(double t0, double t1, std::size_t n) {
  if (n < 2) throw ShapeError("time grid needs at least two points");
  if (!(t1 > t0)) throw ShapeError("time span must be increasing");
  std::vector<double> points(n);
  const double h = (t1 - t0) / static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i) points[i] = t0 + h * static_cast<double>(i);
  points.back() = t1;
  return TimeGrid(std::move(points));
}

std::string to_string(SolverMethod method) {
  return method == SolverMethod::kEuler ? "euler" : "rk4";
}

SolverMethod parse_solver_method(const std::string& name) {
  if (name == "euler") return SolverMethod::kEuler;
  if (name == "rk4") return SolverMethod::kRk4;
  throw ConfigError("unknown solver '" + name + "' (valid: euler, rk4)");
}

}  // namespace cnode
