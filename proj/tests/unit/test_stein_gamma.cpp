#include <cmath>
#include <random>

#include <boost/math/quadrature/tanh_sinh.hpp>

#include "doctest.h"
#include "pchaos/stein_gamma.hpp"

using namespace pchaos;

namespace {

// Tanh-sinh on the raw density: endpoint singularities of g are handled by the
// rule itself, with no change of variables shared with the library.
double ts(const std::function<double(double)>& f, double a, double b) {
  boost::math::quadrature::tanh_sinh<double> rule;
  return rule.integrate(f, a, b, 1e-12);
}

// The printed density as a function of u = x + nu, so that abscissas near the
// endpoint keep full precision.
double g_shifted(double nu, double u) {
  return std::pow(2.0, -nu / 2) / std::tgamma(nu / 2) * std::pow(u, nu / 2 - 1) * std::exp(-u / 2);
}

double quad_moment(double nu, int k) {
  auto f = [&](double u) { return std::pow(u - nu, k) * g_shifted(nu, u); };
  return ts(f, 0.0, 2 * nu) + ts(f, 2 * nu, 2 * nu + 200.0);
}

}  // namespace

TEST_CASE("density examples") {
  for (double nu : {0.5, 1.0, 2.0, 5.0})
    for (double x : {-0.4, 0.0, 1.0, 7.5}) CHECK(density({nu}, x) == doctest::Approx(g_shifted(nu, x + nu)).epsilon(1e-13));
  CHECK(density({2.0}, 0.0) == doctest::Approx(0.5 * std::exp(-1.0)).epsilon(1e-14));
  for (double nu : {0.5, 1.0, 2.0, 5.0}) {
    CHECK(density({nu}, -nu - 1.0) == 0.0);
    CHECK(quad_moment(nu, 0) == doctest::Approx(1.0).epsilon(1e-8));
  }
}

TEST_CASE("moments match quadrature of the density") {
  CHECK(moment({1.0}, 1) == 0.0);
  CHECK(moment({1.0}, 2) == 2.0);
  CHECK(moment({1.0}, 3) == 8.0);
  CHECK(moment({1.0}, 4) == 60.0);
  CHECK_THROWS(moment({1.0}, 5));
  for (double nu : {0.5, 1.0, 2.0, 5.0}) {
    CHECK(std::abs(quad_moment(nu, 1)) < 1e-6 * nu);
    for (int k = 2; k <= 4; ++k) CHECK(quad_moment(nu, k) == doctest::Approx(moment({nu}, k)).epsilon(1e-6));
  }
}

TEST_CASE("cdf endpoints and Monte Carlo oracle") {
  CHECK(cdf({2.0}, -2.0) == 0.0);
  CHECK(cdf({2.0}, 1e6) == doctest::Approx(1.0));
  const double p = cdf({2.0}, 0.0);
  CHECK(p == doctest::Approx(1.0 - std::exp(-1.0)).epsilon(1e-14));
  std::mt19937_64 rng(11);
  std::gamma_distribution<double> g(1.0, 1.0);
  const int N = 1000000;
  int hits = 0;
  for (int i = 0; i < N; ++i) hits += (2 * g(rng) - 2 <= 0.0);
  const double phat = static_cast<double>(hits) / N;
  CHECK(std::abs(phat - p) <= 3 * std::sqrt(p * (1 - p) / N));
}

TEST_CASE("dictionary members lie in the C^3 unit ball") {
  for (const auto& h : h3_dictionary()) {
    CHECK(h.sup_d1 <= 1.0 + 1e-15);
    CHECK(h.sup_d2 <= 1.0 + 1e-15);
    CHECK(h.sup_d3 <= 1.0 + 1e-15);
    double m1 = 0, m2 = 0, m3 = 0;
    for (int i = -4000; i <= 4000; ++i) {
      const double x = i * 0.005;
      m1 = std::max(m1, std::abs(h.d1(x)));
      m2 = std::max(m2, std::abs(h.d2(x)));
      m3 = std::max(m3, std::abs(h.d3(x)));
    }
    CHECK(m1 <= h.sup_d1 * (1 + 1e-12));
    CHECK(m2 <= h.sup_d2 * (1 + 1e-12));
    CHECK(m3 <= h.sup_d3 * (1 + 1e-12));
    // The declared sup-norms are attained up to grid resolution.
    CHECK(m1 >= h.sup_d1 * (1 - 1e-3));
    CHECK(m2 >= h.sup_d2 * (1 - 1e-3));
    CHECK(m3 >= h.sup_d3 * (1 - 1e-3));
    // Derivatives agree with central differences of the value.
    const double e = 1e-4;
    for (double x : {-1.3, 0.2, 2.7}) {
      CHECK(h.d1(x) == doctest::Approx((h.value(x + e) - h.value(x - e)) / (2 * e)).epsilon(1e-6));
      CHECK(h.d2(x) == doctest::Approx((h.d1(x + e) - h.d1(x - e)) / (2 * e)).epsilon(1e-6));
      CHECK(h.d3(x) == doctest::Approx((h.d2(x + e) - h.d2(x - e)) / (2 * e)).epsilon(1e-6));
    }
  }
}

TEST_CASE("Stein solution of a constant vanishes") {
  SteinSolution u({1.0}, constant_test_function(3.0));
  for (double x : {-3.0, -1.0, -0.5, 0.0, 4.0}) {
    CHECK(std::abs(u.value(x)) < 1e-12);
    CHECK(std::abs(u.derivative(x)) < 1e-12);
  }
}

TEST_CASE("Stein equation residual on a 200-point grid") {
  for (double nu : {1.0, 2.0}) {
    GammaTarget t{nu};
    for (const auto& h : h3_dictionary()) {
      SteinSolution u(t, h);
      double worst = 0;
      for (int i = 0; i < 200; ++i) {
        const double x = -nu + 0.01 + (2 * nu + 10 - 0.01) * i / 199.0;
        const double lhs = h.value(x) - u.mean_h();
        const double rhs = 2 * (x + nu) * u.derivative(x) - x * u.value(x);
        worst = std::max(worst, std::abs(lhs - rhs));
      }
      INFO(h.id << " nu=" << nu);
      CHECK(worst <= 1e-6);
    }
  }
}

TEST_CASE("Stein solution agrees with the explicit integral quotient") {
  GammaTarget t{1.5};
  const auto h = find_test_function("sin_1");
  SteinSolution u(t, h);
  const double Eh = expect_gamma(t, h.value);
  for (double x : {-1.0, 0.0, 1.0, 3.0}) {
    const double s = x + t.nu;
    const double acc = ts([&](double u) { return (h.value(u - t.nu) - Eh) * g_shifted(t.nu, u); }, 0.0, s);
    const double oracle = acc / (2 * s * density(t, x));
    CHECK(u.value(x) == doctest::Approx(oracle).epsilon(1e-7));
  }
}

TEST_CASE("Stein solution bounds and continuity at the support endpoint") {
  for (double nu : {0.5, 1.0, 2.0, 5.0}) {
    GammaTarget t{nu};
    const auto c = smoothness_constants(t);
    for (const auto& h : h3_dictionary()) {
      SteinSolution u(t, h);
      for (int i = 0; i <= 60; ++i) {
        const double x = -nu - 3 + 0.25 * i;
        CHECK(std::abs(u.value(x)) <= c.c0);
        CHECK(std::abs(u.derivative(x)) <= c.c1);
      }
      double prev = 1e300;
      for (double e : {1e-3, 1e-4, 1e-5}) {
        const double gap = std::abs(u.value(-nu + e) - u.value(-nu - e));
        CHECK(gap < prev);
        prev = gap;
      }
      CHECK(prev < 1e-4);
    }
  }
}

TEST_CASE("smoothness constants") {
  auto c = smoothness_constants({1.0});
  CHECK(c.c0 == 2.0);
  CHECK(c.c1 == 3.0);
  CHECK(c.c2 == doctest::Approx(5.0 / 3.0));
  c = smoothness_constants({2.0});
  CHECK(c.c0 == 2.0);
  CHECK(c.c1 == 1.0);
  CHECK(c.c2 == doctest::Approx(2.0 / 3.0));
  c = smoothness_constants({1e9});
  CHECK(c.c0 == 2.0);
  CHECK(c.c1 == doctest::Approx(1.0));
  CHECK(c.c2 == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("d3 dictionary lower bound") {
  GammaTarget t{1.0};
  std::vector<double> pt{-1.0};
  const auto s = find_test_function("sin_1");
  CHECK(d3_lower_bound(pt, t, {s}) == doctest::Approx(std::abs(std::sin(-1.0) - expect_gamma(t, s.value))));
  CHECK_THROWS(d3_lower_bound(pt, t, {}));
  CHECK_THROWS(d3_lower_bound({}, t, h3_dictionary()));

  std::mt19937_64 rng(5);
  std::gamma_distribution<double> g(0.5, 1.0);
  std::vector<double> xs(1000000);
  for (auto& x : xs) x = 2 * g(rng) - 1;
  // Each dictionary value has variance at most 1 (|h| <= 2, derivatives <= 1 keep spread moderate),
  // so 3 standard errors are at most 3/sqrt(N).
  CHECK(d3_lower_bound(xs, t, h3_dictionary()) <= 3.0 * 2.0 / std::sqrt(1e6));
}

TEST_CASE("normal and Poisson plumbing") {
  CHECK(normal_cdf(0.0) == 0.5);
  CHECK(normal_cdf(1.96) == doctest::Approx(0.9750021048517795).epsilon(1e-12));
  CHECK(poisson_pmf(0, 2.0) == doctest::Approx(std::exp(-2.0)));
  CHECK(poisson_pmf(3, 2.0) == doctest::Approx(8.0 / 6.0 * std::exp(-2.0)));
  CHECK(poisson_cdf(1, 2.0) == doctest::Approx(3.0 * std::exp(-2.0)));
  CHECK(expect_normal([](double x) { return x * x; }) == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(expect_poisson(3.0, [](double k) { return k * k; }) == doctest::Approx(12.0).epsilon(1e-12));
  CHECK(expect_gamma({3.0}, [](double x) { return x * x; }) == doctest::Approx(6.0).epsilon(1e-9));
}
