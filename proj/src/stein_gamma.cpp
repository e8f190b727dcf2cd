#include "pchaos/stein_gamma.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/gamma.hpp>

namespace pchaos {

namespace {

constexpr double kQuadTol = 1e-9;

void require_nu(const GammaTarget& t) {
  if (!(t.nu > 0.0) || !std::isfinite(t.nu)) throw std::invalid_argument("GammaTarget: nu must be positive");
}

template <class F>
double integrate_unit(F f) {
  thread_local boost::math::quadrature::tanh_sinh<double> ts;
  double err = 0.0, l1 = 0.0;
  const double v = ts.integrate(f, 0.0, 1.0, 1e-12, &err, &l1);
  if (!(err <= kQuadTol * std::max(1.0, l1))) throw std::runtime_error("quadrature on [0,1] did not converge");
  return v;
}

template <class F>
double integrate_half_line(F f) {
  thread_local boost::math::quadrature::exp_sinh<double> es;
  double err = 0.0, l1 = 0.0;
  const double v = es.integrate(f, 1e-12, &err, &l1);
  if (!(err <= kQuadTol * std::max(1.0, l1))) throw std::runtime_error("quadrature on [0,inf) did not converge");
  return v;
}

TestFunction scaled(std::string id, std::function<double(double)> v, std::function<double(double)> d1,
                    std::function<double(double)> d2, std::function<double(double)> d3, double m1, double m2,
                    double m3) {
  const double s = std::max({m1, m2, m3});
  TestFunction h;
  h.id = std::move(id);
  h.value = [v, s](double x) { return v(x) / s; };
  h.d1 = [d1, s](double x) { return d1(x) / s; };
  h.d2 = [d2, s](double x) { return d2(x) / s; };
  h.d3 = [d3, s](double x) { return d3(x) / s; };
  h.sup_d1 = m1 / s;
  h.sup_d2 = m2 / s;
  h.sup_d3 = m3 / s;
  return h;
}

// (1 + w/s)^p e^(-w/2), in log form so that large w gives 0 rather than inf * 0.
double tail_weight(double p, double w, double s) { return std::exp(p * std::log1p(w / s) - w / 2.0); }

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

std::vector<TestFunction> build_dictionary() {
  std::vector<TestFunction> out;
  // Sup-norms of the first three derivatives of the logistic function.
  const double L1 = 0.25, L2 = std::sqrt(3.0) / 18.0, L3 = 0.125;
  for (double t : {0.5, 1.0, 2.0}) {
    const std::string tag = t == 0.5 ? "0.5" : (t == 1.0 ? "1" : "2");
    out.push_back(scaled(
        "sin_" + tag, [t](double x) { return std::sin(t * x); }, [t](double x) { return t * std::cos(t * x); },
        [t](double x) { return -t * t * std::sin(t * x); }, [t](double x) { return -t * t * t * std::cos(t * x); },
        t, t * t, t * t * t));
    out.push_back(scaled(
        "cos_" + tag, [t](double x) { return std::cos(t * x) - 1.0; },
        [t](double x) { return -t * std::sin(t * x); }, [t](double x) { return -t * t * std::cos(t * x); },
        [t](double x) { return t * t * t * std::sin(t * x); }, t, t * t, t * t * t));
    out.push_back(scaled(
        "sigmoid_" + tag, [t](double x) { return logistic(t * x); },
        [t](double x) {
          const double s = logistic(t * x);
          return t * s * (1 - s);
        },
        [t](double x) {
          const double s = logistic(t * x);
          return t * t * s * (1 - s) * (1 - 2 * s);
        },
        [t](double x) {
          const double s = logistic(t * x);
          return t * t * t * s * (1 - s) * (1 - 6 * s + 6 * s * s);
        },
        t * L1, t * t * L2, t * t * t * L3));
  }
  return out;
}

}  // namespace

double density(const GammaTarget& t, double x) {
  require_nu(t);
  const double s = x + t.nu;
  if (s <= 0.0) return 0.0;
  const double a = t.nu / 2.0;
  return std::exp((a - 1.0) * std::log(s) - s / 2.0 - a * std::log(2.0) - std::lgamma(a));
}

double cdf(const GammaTarget& t, double x) {
  require_nu(t);
  const double s = x + t.nu;
  if (s <= 0.0) return 0.0;
  if (std::isinf(s)) return 1.0;
  return boost::math::gamma_p(t.nu / 2.0, s / 2.0);
}

double moment(const GammaTarget& t, int k) {
  require_nu(t);
  switch (k) {
    case 1: return 0.0;
    case 2: return 2.0 * t.nu;
    case 3: return 8.0 * t.nu;
    case 4: return 12.0 * t.nu * t.nu + 48.0 * t.nu;
    default: throw std::invalid_argument("moment: k must be in 1..4");
  }
}

const std::vector<TestFunction>& h3_dictionary() {
  static const std::vector<TestFunction> dict = build_dictionary();
  return dict;
}

TestFunction find_test_function(const std::string& id) {
  for (const auto& h : h3_dictionary())
    if (h.id == id) return h;
  throw std::invalid_argument("unknown test function: " + id);
}

TestFunction constant_test_function(double c) {
  TestFunction h;
  h.id = "const";
  h.value = [c](double) { return c; };
  h.d1 = h.d2 = h.d3 = [](double) { return 0.0; };
  return h;
}

double expect_gamma(const GammaTarget& t, const std::function<double(double)>& h) {
  require_nu(t);
  // W = y^(1/a) turns w^(a-1) e^(-w) dw / Gamma(a) into e^(-y^(1/a)) dy / Gamma(a+1).
  const double a = t.nu / 2.0;
  auto f = [&](double y) {
    const double w = std::pow(y, 1.0 / a);
    const double e = std::exp(-w);
    return e == 0.0 ? 0.0 : h(2.0 * w - t.nu) * e;
  };
  return (integrate_unit(f) + integrate_half_line([&](double u) { return f(1.0 + u); })) / std::tgamma(a + 1.0);
}

double expect_normal(const std::function<double(double)>& h) {
  const double c = 1.0 / std::sqrt(2.0 * M_PI);
  auto f = [&](double u) { return (h(u) + h(-u)) * c * std::exp(-0.5 * u * u); };
  return integrate_unit(f) + integrate_half_line([&](double u) { return f(1.0 + u); });
}

double expect_poisson(double lambda, const std::function<double(double)>& h) {
  if (!(lambda >= 0.0)) throw std::invalid_argument("expect_poisson: lambda must be >= 0");
  double acc = 0.0, mass = 0.0;
  const long kmax = static_cast<long>(lambda + 40.0 * std::sqrt(lambda + 1.0) + 40.0);
  for (long k = 0; k <= kmax; ++k) {
    const double p = poisson_pmf(k, lambda);
    acc += p * h(static_cast<double>(k));
    mass += p;
    if (mass > 1.0 - 1e-17 && static_cast<double>(k) > lambda) break;
  }
  return acc;
}

SteinSolution::SteinSolution(GammaTarget t, TestFunction h) : t_(t), h_(std::move(h)) {
  require_nu(t_);
  mean_h_ = expect_gamma(t_, h_.value);
}

// With s = x + nu and a = nu/2:
//   s <= nu: U = e^(s/2)/nu * int_0^1 phi(s v^(1/a) - nu) e^(-s v^(1/a)/2) dv
//   s >  nu: U = -1/(2s) int_0^inf phi(s + w - nu) (1 + w/s)^(a-1) e^(-w/2) dw
// Both forms are free of the 0/0 at s = 0, so no separate limit is needed.
double SteinSolution::value(double x) const {
  const double nu = t_.nu, a = nu / 2.0, s = x + nu;
  if (s <= 0.0) return -phi(x) / x;
  if (s <= nu) {
    auto f = [&](double v) {
      const double u = s * std::pow(v, 1.0 / a);
      return phi(u - nu) * std::exp(-u / 2.0);
    };
    return std::exp(s / 2.0) / nu * integrate_unit(f);
  }
  auto f = [&](double w) {
    const double k = tail_weight(a - 1.0, w, s);
    return k == 0.0 ? 0.0 : phi(s + w - nu) * k;
  };
  return -integrate_half_line(f) / (2.0 * s);
}

double SteinSolution::derivative(double x) const {
  const double nu = t_.nu, a = nu / 2.0, s = x + nu;
  if (s <= 0.0) return -h_.d1(x) / x + phi(x) / (x * x);
  if (s <= nu) {
    auto f = [&](double v) {
      const double r = std::pow(v, 1.0 / a);
      const double u = s * r;
      const double y = u - nu;
      return (phi(y) * 0.5 + r * (h_.d1(y) - 0.5 * phi(y))) * std::exp(-u / 2.0);
    };
    return std::exp(s / 2.0) / nu * integrate_unit(f);
  }
  auto j = [&](double w) {
    const double k = tail_weight(a - 1.0, w, s);
    return k == 0.0 ? 0.0 : phi(s + w - nu) * k;
  };
  auto dj = [&](double w) {
    const double k1 = tail_weight(a - 1.0, w, s), k2 = tail_weight(a - 2.0, w, s);
    if (k1 == 0.0 && k2 == 0.0) return 0.0;
    const double y = s + w - nu;
    return h_.d1(y) * k1 - phi(y) * (a - 1.0) * k2 * w / (s * s);
  };
  return integrate_half_line(j) / (2.0 * s * s) - integrate_half_line(dj) / (2.0 * s);
}

double stein_solution(const GammaTarget& t, const TestFunction& h, double x) { return SteinSolution(t, h).value(x); }

double stein_solution_derivative(const GammaTarget& t, const TestFunction& h, double x) {
  return SteinSolution(t, h).derivative(x);
}

SmoothnessConstants smoothness_constants(const GammaTarget& t) {
  require_nu(t);
  const double v = t.nu;
  return {std::max(2.0, 2.0 / v), std::max(1.0, 1.0 / v + 2.0 / (v * v)),
          std::max(2.0 / 3.0, 2.0 / (3.0 * v) - 3.0 / (v * v) + 4.0 / (v * v * v))};
}

double d3_lower_bound(const std::vector<double>& samples, const GammaTarget& t,
                      const std::vector<TestFunction>& dict) {
  if (samples.empty()) throw std::invalid_argument("d3_lower_bound: no samples");
  if (dict.empty()) throw std::invalid_argument("d3_lower_bound: empty dictionary");
  double best = 0.0;
  for (const auto& h : dict) {
    double m = 0.0;
    for (double x : samples) m += h.value(x);
    m /= static_cast<double>(samples.size());
    best = std::max(best, std::abs(m - expect_gamma(t, h.value)));
  }
  return best;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double poisson_pmf(long k, double lambda) {
  if (k < 0) return 0.0;
  if (lambda == 0.0) return k == 0 ? 1.0 : 0.0;
  return std::exp(static_cast<double>(k) * std::log(lambda) - lambda - std::lgamma(static_cast<double>(k) + 1.0));
}

double poisson_cdf(long k, double lambda) {
  if (k < 0) return 0.0;
  if (lambda == 0.0) return 1.0;
  return boost::math::gamma_q(static_cast<double>(k) + 1.0, lambda);
}

}  // namespace pchaos
