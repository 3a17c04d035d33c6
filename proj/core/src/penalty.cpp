#include "cnode/penalty.hpp"

#include <charconv>
#include <cmath>
#include <ostream>

namespace cnode {

LossRegime LossRegime::quadratic(double mu) {
  LossRegime r{RegimeKind::kQuadratic, mu, 1e-4};
  r.validate();
  return r;
}

LossRegime LossRegime::self_adaptive(double tol) {
  LossRegime r{RegimeKind::kSelfAdaptive, 0.0, tol};
  r.validate();
  return r;
}

void LossRegime::validate() const {
  if (kind == RegimeKind::kQuadratic && !(mu > 0.0)) {
    throw ConfigError("quadratic penalty requires mu > 0");
  }
  if (!(feasibility_tol > 0.0)) throw ConfigError("feasibility tolerance must be > 0");
}

std::string format_real(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, ptr);
}

std::string history_csv_header(const ConstraintSet& constraints) {
  std::string header = "iteration,l,F,P_theta,phi,feasible";
  for (const Constraint& c : constraints) header += ",P_" + c.id() + ",mu_" + c.id();
  return header;
}

std::string history_csv_row(const PenaltyReport& r) {
  std::string row = std::to_string(r.iteration) + ',' + format_real(r.l) + ',' +
                    format_real(r.F) + ',' + format_real(r.P_theta) + ',' + format_real(r.phi) +
                    ',' + (r.feasible ? "1" : "0");
  for (const auto& e : r.constraints) {
    row += ',' + format_real(e.penalty) + ',' + format_real(e.mu);
  }
  return row;
}

void write_history_csv(std::ostream& out, const ConstraintSet& constraints,
                       std::span<const PenaltyReport> history) {
  out << history_csv_header(constraints) << '\n';
  for (const PenaltyReport& r : history) out << history_csv_row(r) << '\n';
}

}  // namespace cnode
