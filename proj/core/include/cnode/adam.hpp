#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace cnode {

struct AdamOptions {
  double learning_rate = 1e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  AdamState() = default;
  AdamState(std::size_t n, AdamOptions opts) : options(opts), m(n, 0.0), v(n, 0.0) {}

  AdamOptions options;
  long step_count = 0;
  std::vector<double> m;
  std::vector<double> v;
};

/// One bias-corrected Adam update of `params` in place. Throws ShapeError on
/// length mismatch and NumericalError on non-finite gradients.
void adam_step(AdamState& state, std::span<double> params, std::span<const double> grads);

}  // namespace cnode
