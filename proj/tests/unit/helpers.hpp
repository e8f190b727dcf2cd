#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "pchaos/space.hpp"

namespace testkit {

using namespace pchaos;

inline double sign_fn(const double* x) { return x[0] > 0 ? 1.0 : (x[0] < 0 ? -1.0 : 0.0); }

// Uniform probability on (-1, 1) with e(z) = sign(z), ||e|| = 1, mean zero.
inline Kernel sign_kernel(const MeasureSpace& s, double scale = 1.0) {
  auto e = make_factor(s, sign_fn);
  return Kernel::separable(s, 2, {Term{scale, {e, e}}});
}

// Random factor values on a grid space.
inline FactorPtr random_grid_factor(const MeasureSpace& s, std::mt19937_64& rng) {
  std::normal_distribution<double> nd(0.0, 1.0);
  std::vector<double> v(s.node_count());
  for (auto& x : v) x = nd(rng);
  return make_grid_factor(s, v);
}

// Random symmetric separable kernel of order q with `terms` random terms.
inline Kernel random_separable(const MeasureSpace& s, int q, int terms, std::mt19937_64& rng) {
  std::normal_distribution<double> nd(0.0, 1.0);
  std::vector<FactorPtr> pool;
  for (int k = 0; k < q + 1; ++k) pool.push_back(random_grid_factor(s, rng));
  std::uniform_int_distribution<int> pick(0, static_cast<int>(pool.size()) - 1);
  std::vector<Term> ts;
  for (int t = 0; t < terms; ++t) {
    Term term{nd(rng), {}};
    for (int j = 0; j < q; ++j) term.factors.push_back(pool[static_cast<std::size_t>(pick(rng))]);
    ts.push_back(term);
  }
  return Kernel::separable(s, q, ts);
}

inline MeasureSpace random_grid(int atoms, double intensity, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.1, 1.0);
  std::vector<Point> pts;
  std::vector<double> w;
  for (int k = 0; k < atoms; ++k) {
    pts.push_back({static_cast<double>(k)});
    w.push_back(u(rng) / atoms);
  }
  return make_grid_space(pts, w, intensity);
}

inline bool close_rel(double a, double b, double tol) {
  return std::abs(a - b) <= tol * std::max({1.0, std::abs(a), std::abs(b)});
}

}  // namespace testkit
