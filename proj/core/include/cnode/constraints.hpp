#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include "cnode/diff.hpp"
#include "cnode/errors.hpp"
#include "cnode/ode.hpp"
#include "cnode/psi.hpp"

namespace cnode {

enum class ConstraintKind { kEquality, kInequality };

/// Per-step constraints see one state; per-pair constraints see (y_t, y_{t+1}).
enum class ConstraintArity { kPerStep, kPerPair };

/// A constraint c on predicted states: c = 0 (equality) or c <= 0 (inequality).
///
/// The evaluation function is stored once per scalar type so the same
/// constraint can be applied to plain and differentiable trajectories. Build
/// one from a generic lambda taking (state, next, t); `next` is empty for
/// per-step constraints.
class Constraint {
 public:
  template <class Fn>
  Constraint(std::string id, ConstraintKind kind, ConstraintArity arity, std::size_t state_dim,
             Fn fn)
      : id_(std::move(id)),
        kind_(kind),
        arity_(arity),
        state_dim_(state_dim),
        real_(fn),
        diff_(fn) {}

  const std::string& id() const { return id_; }
  ConstraintKind kind() const { return kind_; }
  ConstraintArity arity() const { return arity_; }
  std::size_t state_dim() const { return state_dim_; }

  template <class Scalar>
  Scalar evaluate(std::span<const Scalar> state, std::span<const Scalar> next, double t) const {
    if constexpr (std::is_same_v<Scalar, double>) {
      return real_(state, next, t);
    } else {
      return diff_(state, next, t);
    }
  }

 private:
  std::string id_;
  ConstraintKind kind_;
  ConstraintArity arity_;
  std::size_t state_dim_;
  std::function<double(std::span<const double>, std::span<const double>, double)> real_;
  std::function<DiffValue(std::span<const DiffValue>, std::span<const DiffValue>, double)> diff_;
};

using ConstraintSet = std::vector<Constraint>;

template <class Scalar>
struct BasicViolationVector {
  std::string constraint_id;
  std::vector<Scalar> v;
};

using ViolationVector = BasicViolationVector<double>;

/// v_t = c_t^2 for equalities and ([c_t]^+)^2 for inequalities. Per-pair
/// constraints yield N - 1 entries. Throws ShapeError on dimension mismatch.
template <class Scalar>
BasicViolationVector<Scalar> violations(const Constraint& c, const BasicTrajectory<Scalar>& traj) {
  if (traj.dim() != c.state_dim()) {
    throw ShapeError("constraint '" + c.id() + "' expects states of dimension " +
                     std::to_string(c.state_dim()) + ", trajectory has " +
                     std::to_string(traj.dim()));
  }
  BasicViolationVector<Scalar> out{c.id(), {}};
  const std::size_t n = c.arity() == ConstraintArity::kPerPair ? traj.size() - 1 : traj.size();
  out.v.reserve(n);
  for (std::size_t t = 0; t < n; ++t) {
    const std::span<const Scalar> state(traj.states[t]);
    const std::span<const Scalar> next = c.arity() == ConstraintArity::kPerPair
                                             ? std::span<const Scalar>(traj.states[t + 1])
                                             : std::span<const Scalar>();
    const Scalar value = c.evaluate(state, next, traj.grid[t]);
    out.v.push_back(c.kind() == ConstraintKind::kEquality ? square(value)
                                                          : square(max_zero(value)));
  }
  return out;
}

/// Mean of psi over the entries: P = (1/n) sum_t psi(v_t), in [0, 1).
template <class Scalar>
Scalar penalty_term(std::span<const Scalar> v) {
  if (v.empty()) throw ShapeError("penalty_term of an empty violation vector");
  Scalar acc = psi(v[0]);
  for (std::size_t t = 1; t < v.size(); ++t) acc = acc + psi(v[t]);
  return acc * (1.0 / static_cast<double>(v.size()));
}

/// Fraction of entries strictly above `zero_threshold`.
template <class Scalar>
double adaptive_mu(std::span<const Scalar> v, double zero_threshold = 0.0) {
  if (zero_threshold < 0.0) throw DomainError("zero threshold must be >= 0");
  if (v.empty()) return 0.0;
  std::size_t violated = 0;
  for (const auto& x : v) {
    if (value_of(x) > zero_threshold) ++violated;
  }
  return static_cast<double>(violated) / static_cast<double>(v.size());
}

template <class Scalar>
struct PenaltyTerm {
  std::string id;
  ConstraintKind kind = ConstraintKind::kEquality;
  Scalar penalty{};  // P_i / P_j
  double mu = 0.0;   // detached: no gradient flows through the count
};

template <class Scalar>
struct BasicPenaltyTerms {
  std::vector<PenaltyTerm<Scalar>> terms;
  double total = 0.0;  // P_theta = sum of all P values
};

using PenaltyTerms = BasicPenaltyTerms<double>;

template <class Scalar>
BasicPenaltyTerms<Scalar> penalty_terms(const ConstraintSet& constraints,
                                        const BasicTrajectory<Scalar>& traj,
                                        double zero_threshold = 0.0) {
  BasicPenaltyTerms<Scalar> out;
  out.terms.reserve(constraints.size());
  for (const Constraint& c : constraints) {
    const auto vv = violations(c, traj);
    const std::span<const Scalar> v(vv.v);
    PenaltyTerm<Scalar> term{c.id(), c.kind(), penalty_term(v), adaptive_mu(v, zero_threshold)};
    out.total += value_of(term.penalty);
    out.terms.push_back(std::move(term));
  }
  return out;
}

/// Evaluation metric P: mean over constraints of the mean un-normalised
/// violation. Zero for an empty constraint set.
double raw_violation_metric(const ConstraintSet& constraints, const Trajectory& traj);

/// Constraints for a named system ("wpg", "cr", "dho"). Physical constants
/// (K, m_total, m, k, c) are read from `params`; throws ConfigError if missing.
ConstraintSet constraint_preset(std::string_view system, const std::map<std::string, double>& params);

}  // namespace cnode
