#pragma once

#include <utility>
#include <vector>

namespace pchaos {

struct RateFit {
  double slope = 0.0;
  double stderr_slope = 0.0;
  double intercept = 0.0;
};

// Least-squares fit of log(value) against log(n). Needs at least three points
// with n > 0 and value > 0.
RateFit fit_rate(const std::vector<std::pair<double, double>>& points);

}  // namespace pchaos
