#pragma once

// Loss regimes: the plain objective, the fixed-mu quadratic penalty
//   l + (mu / 2) * sum_c mean_t v_t,
// and the self-adaptive penalty
//   phi = F                                                      if feasible
//   phi = F + mean_{i in E} mu_i P_i + mean_{j in I} mu_j P_j     otherwise
// with F = psi(l), P the mean of psi(v_t) and mu the violated fraction.

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cnode/constraints.hpp"
#include "cnode/diff.hpp"
#include "cnode/ode.hpp"
#include "cnode/psi.hpp"

namespace cnode {

enum class RegimeKind { kVanilla, kQuadratic, kSelfAdaptive };

struct LossRegime {
  RegimeKind kind = RegimeKind::kSelfAdaptive;
  double mu = 0.0;  // quadratic only
  double feasibility_tol = 1e-4;

  static LossRegime vanilla() { return {RegimeKind::kVanilla, 0.0, 1e-4}; }
  static LossRegime quadratic(double mu);
  static LossRegime self_adaptive(double tol = 1e-4);

  /// Throws ConfigError if mu <= 0 for the quadratic regime or tol <= 0.
  void validate() const;
};

/// One training iteration as seen by the loss. For the baselines `phi` holds
/// the optimised objective (l or l + mu/2 P).
struct PenaltyReport {
  struct Entry {
    std::string id;
    double penalty = 0.0;
    double mu = 0.0;
  };

  long iteration = 0;
  double l = 0.0;
  double F = 0.0;
  std::vector<Entry> constraints;
  double P_theta = 0.0;
  double phi = 0.0;
  bool feasible = false;
};

/// Sum over steps and components of squared error.
template <class Scalar>
Scalar objective_l(const BasicTrajectory<Scalar>& pred, const Trajectory& truth) {
  if (pred.size() != truth.size() || pred.dim() != truth.dim() || !(pred.grid == truth.grid)) {
    throw ShapeError("prediction and ground truth grids differ");
  }
  std::vector<Scalar> terms;
  terms.reserve(pred.size() * pred.dim());
  for (std::size_t n = 0; n < pred.size(); ++n) {
    for (std::size_t d = 0; d < pred.dim(); ++d) {
      terms.push_back(square(pred.states[n][d] - truth.states[n][d]));
    }
  }
  if constexpr (std::is_same_v<Scalar, double>) {
    double acc = 0.0;
    for (double t : terms) acc += t;
    return acc;
  } else {
    return detail::owner(terms.front()).sum(terms);
  }
}

/// F = psi(l).
template <class Scalar>
Scalar normalised_objective(Scalar l) {
  return psi(l);
}

/// Self-adaptive penalty. The feasibility branch uses P_theta <= tol. Class
/// averages over an empty class contribute 0.
template <class Scalar>
Scalar phi_self_adaptive(Scalar F, const BasicPenaltyTerms<Scalar>& terms,
                         double feasibility_tol = 1e-4) {
  if (terms.total <= feasibility_tol) return F;
  std::optional<Scalar> equality, inequality;
  std::size_t n_eq = 0;
  std::size_t n_ineq = 0;
  for (const auto& t : terms.terms) {
    auto& acc = t.kind == ConstraintKind::kEquality ? equality : inequality;
    (t.kind == ConstraintKind::kEquality ? n_eq : n_ineq) += 1;
    const Scalar weighted = t.penalty * t.mu;
    acc = acc ? *acc + weighted : weighted;
  }
  Scalar phi = F;
  if (n_eq > 0) phi = phi + *equality * (1.0 / static_cast<double>(n_eq));
  if (n_ineq > 0) phi = phi + *inequality * (1.0 / static_cast<double>(n_ineq));
  return phi;
}

/// Un-normalised quadratic penalty sum_c mean_t v_t (differentiable).
template <class Scalar>
Scalar quadratic_violation(const ConstraintSet& constraints, const BasicTrajectory<Scalar>& traj) {
  std::optional<Scalar> total;
  for (const Constraint& c : constraints) {
    const auto vv = violations(c, traj);
    Scalar mean = vv.v.front();
    for (std::size_t t = 1; t < vv.v.size(); ++t) mean = mean + vv.v[t];
    mean = mean * (1.0 / static_cast<double>(vv.v.size()));
    total = total ? *total + mean : mean;
  }
  if (!total) throw ShapeError("quadratic penalty needs at least one constraint");
  return *total;
}

/// l + (mu / 2) * P. Throws ConfigError unless mu > 0. Returns l itself when
/// there are no constraints.
template <class Scalar>
Scalar phi_quadratic(Scalar l, const ConstraintSet& constraints,
                     const BasicTrajectory<Scalar>& traj, double mu) {
  if (!(mu > 0.0)) throw ConfigError("quadratic penalty requires mu > 0");
  if (constraints.empty()) return l;
  return l + (0.5 * mu) * quadratic_violation(constraints, traj);
}

/// Header row: iteration,l,F,P_theta,phi,feasible,P_<id>,mu_<id>,...
std::string history_csv_header(const ConstraintSet& constraints);
std::string history_csv_row(const PenaltyReport& report);
void write_history_csv(std::ostream& out, const ConstraintSet& constraints,
                       std::span<const PenaltyReport> history);

/// Formats doubles with enough digits to round-trip.
std::string format_real(double value);

}  // namespace cnode
