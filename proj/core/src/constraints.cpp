#include "cnode/constraints.hpp"

namespace cnode {
namespace {

double require(const std::map<std::string, double>& params, const std::string& key,
               std::string_view system) {
  const auto it = params.find(key);
  if (it == params.end()) {
    throw ConfigError("constraint preset '" + std::string(system) + "' needs parameter '" + key +
                      "'");
  }
  return it->second;
}

}  // namespace

double raw_violation_metric(const ConstraintSet& constraints, const Trajectory& traj) {
  if (constraints.empty()) return 0.0;
  double total = 0.0;
  for (const Constraint& c : constraints) {
    const ViolationVector vv = violations(c, traj);
    double sum = 0.0;
    for (double x : vv.v) sum += x;
    total += vv.v.empty() ? 0.0 : sum / static_cast<double>(vv.v.size());
  }
  return total / static_cast<double>(constraints.size());
}

ConstraintSet constraint_preset(std::string_view system,
                                const std::map<std::string, double>& params) {
  ConstraintSet set;
  if (system == "wpg") {
    // Carrying capacity: p(t) - K <= 0.
    const double capacity = require(params, "K", system);
    set.emplace_back("capacity", ConstraintKind::kInequality, ConstraintArity::kPerStep, 1,
                     [capacity](auto s, auto, double) { return s[0] - capacity; });
  } else if (system == "cr") {
    // Mass conservation: m_A + m_B + m_C + m_D - m_total = 0.
    const double total = require(params, "m_total", system);
    set.emplace_back("mass", ConstraintKind::kEquality, ConstraintArity::kPerStep, 4,
                     [total](auto s, auto, double) { return s[0] + s[1] + s[2] + s[3] - total; });
  } else if (system == "dho") {
    const double m = require(params, "m", system);
    const double k = require(params, "k", system);
    const double c = require(params, "c", system);
    // State is (x, v). Energy E = m v^2 / 2 + k x^2 / 2 must not increase.
    set.emplace_back("dissipation", ConstraintKind::kEquality, ConstraintArity::kPerPair, 2,
                     [c](auto s, auto next, double) {
                       // Dissipation rate -c v x must stay constant between samples.
                       return (-c) * (next[1] * next[0]) - (-c) * (s[1] * s[0]);
                     });
    set.emplace_back("energy", ConstraintKind::kInequality, ConstraintArity::kPerPair, 2,
                     [m, k](auto s, auto next, double) {
                       const auto e_next = (0.5 * m) * square(next[1]) + (0.5 * k) * square(next[0]);
                       const auto e_now = (0.5 * m) * square(s[1]) + (0.5 * k) * square(s[0]);
                       return e_next - e_now;
                     });
  } else {
    throw ConfigError("no constraint preset for system '" + std::string(system) +
                      "' (valid: wpg, cr, dho)");
  }
  return set;
}

}  // namespace cnode
