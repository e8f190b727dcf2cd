#include "pchaos/rate.hpp"

#include <cmath>
#include <stdexcept>

namespace pchaos {

RateFit fit_rate(const std::vector<std::pair<double, double>>& points) {
  if (points.size() < 3) throw std::invalid_argument("fit_rate: at least three points are needed");
  const double k = static_cast<double>(points.size());
  double sx = 0, sy = 0;
  for (const auto& [n, v] : points) {
    if (!(n > 0.0) || !(v > 0.0)) throw std::invalid_argument("fit_rate: n and value must be positive");
    sx += std::log(n);
    sy += std::log(v);
  }
  const double mx = sx / k, my = sy / k;
  double sxx = 0, sxy = 0;
  for (const auto& [n, v] : points) {
    const double dx = std::log(n) - mx;
    sxx += dx * dx;
    sxy += dx * (std::log(v) - my);
  }
  if (sxx == 0.0) throw std::invalid_argument("fit_rate: all n values coincide");
  RateFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double rss = 0;
  for (const auto& [n, v] : points) {
    const double e = std::log(v) - fit.intercept - fit.slope * std::log(n);
    rss += e * e;
  }
  fit.stderr_slope = std::sqrt(rss / (k - 2.0) / sxx);
  return fit;
}

}  // namespace pchaos
