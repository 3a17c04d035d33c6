#pragma once

#include "cnode/diff.hpp"
#include "cnode/errors.hpp"

namespace cnode {

/// Normalisation psi(x) = 1 - 1/(1 + x), mapping [0, inf) onto [0, 1).
/// Throws DomainError for x < 0.
template <class Scalar>
Scalar psi(Scalar x) {
  if (!(value_of(x) >= 0.0)) throw DomainError("psi is defined for x >= 0 only");
  return 1.0 - reciprocal(x + 1.0);
}

}  // namespace cnode
