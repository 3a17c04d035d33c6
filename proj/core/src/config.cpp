#include "cnode/config.hpp"

#include <cmath>
#include <sstream>

#include "cnode/errors.hpp"
#include "cnode/penalty.hpp"

namespace cnode {

std::string to_string(Method method) {
  switch (method) {
    case Method::kVanilla:
      return "vanilla";
    case Method::kQuadratic:
      return "quadratic";
    case Method::kSelfAdaptive:
      return "self-adaptive";
  }
  return "?";
}

Method parse_method(const std::string& name) {
  if (name == "vanilla") return Method::kVanilla;
  if (name == "quadratic") return Method::kQuadratic;
  if (name == "self-adaptive") return Method::kSelfAdaptive;
  throw ConfigError("unknown method '" + name + "' (valid: vanilla, quadratic, self-adaptive)");
}

void ExperimentConfig::validate() const {
  if (method == Method::kQuadratic) {
    if (!mu) throw ConfigError("method 'quadratic' requires --mu");
    if (!(*mu > 0.0) || !std::isfinite(*mu)) throw ConfigError("mu must be a finite value > 0");
  } else if (mu) {
    throw ConfigError("mu is only meaningful for method 'quadratic'");
  }
  if (k_max < 1) throw ConfigError("k_max must be >= 1");
  if (!(lr > 0.0) || !std::isfinite(lr)) throw ConfigError("learning rate must be > 0");
  if (solver.substeps < 1) throw ConfigError("solver substeps must be >= 1");
  if (!(feasibility_tol > 0.0)) throw ConfigError("feasibility tolerance must be > 0");
  if (!(zero_threshold >= 0.0)) throw ConfigError("zero threshold must be >= 0");
  if (!(noise_sigma >= 0.0)) throw ConfigError("noise sigma must be >= 0");
}

std::string ExperimentConfig::method_label() const {
  if (method == Method::kQuadratic && mu) return "quadratic(mu=" + format_real(*mu) + ")";
  return to_string(method);
}

}  // namespace cnode
