#pragma once

// Central finite differences, the independent oracle for every gradient test.

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <vector>

namespace cnode::testing {

inline std::vector<double> central_difference(const std::function<double(std::span<const double>)>& f,
                                              std::vector<double> x, double h = 1e-5) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double x0 = x[i];
    x[i] = x0 + h;
    const double up = f(x);
    x[i] = x0 - h;
    const double down = f(x);
    x[i] = x0;
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

/// Relative error, or absolute error when both values are below `floor`.
inline bool gradients_agree(double analytic, double numeric, double rel, double abs_floor) {
  const double diff = std::abs(analytic - numeric);
  const double scale = std::max(std::abs(analytic), std::abs(numeric));
  if (scale < abs_floor) return diff <= abs_floor;
  return diff <= rel * scale || diff <= abs_floor;
}

}  // namespace cnode::testing
