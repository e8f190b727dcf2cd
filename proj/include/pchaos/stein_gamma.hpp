#pragma once

#include <functional>
#include <string>
#include <vector>

namespace pchaos {

// Centred Gamma law: the law of 2 W - nu with W ~ Gamma(nu/2, 1).
struct GammaTarget {
  double nu = 1.0;
};

double density(const GammaTarget& t, double x);
double cdf(const GammaTarget& t, double x);
// k in 1..4: 0, 2 nu, 8 nu, 12 nu^2 + 48 nu.
double moment(const GammaTarget& t, int k);

// A test function with its first three derivatives and their declared sup-norms.
struct TestFunction {
  std::string id;
  std::function<double(double)> value, d1, d2, d3;
  double sup_d1 = 0.0, sup_d2 = 0.0, sup_d3 = 0.0;
};

// Finite stand-in for the class of C^3 functions with derivatives bounded by 1:
// scaled sines, cosines and logistic sigmoids at frequencies 1/2, 1, 2.
const std::vector<TestFunction>& h3_dictionary();
TestFunction find_test_function(const std::string& id);
TestFunction constant_test_function(double c);

// E h(G) under the target, by quadrature.
double expect_gamma(const GammaTarget& t, const std::function<double(double)>& h);
double expect_normal(const std::function<double(double)>& h);
double expect_poisson(double lambda, const std::function<double(double)>& h);

// First-order Stein solution U_h for the operator 2(x+nu)_+ f'(x) - x f(x),
// bound to one test function so that E h(G) is computed once.
class SteinSolution {
 public:
  SteinSolution(GammaTarget t, TestFunction h);
  double value(double x) const;
  double derivative(double x) const;
  double mean_h() const { return mean_h_; }
  const GammaTarget& target() const { return t_; }

 private:
  double phi(double y) const { return h_.value(y) - mean_h_; }
  GammaTarget t_;
  TestFunction h_;
  double mean_h_ = 0.0;
};

double stein_solution(const GammaTarget& t, const TestFunction& h, double x);
double stein_solution_derivative(const GammaTarget& t, const TestFunction& h, double x);

struct SmoothnessConstants {
  double c0 = 0.0, c1 = 0.0, c2 = 0.0;
};
SmoothnessConstants smoothness_constants(const GammaTarget& t);

// max over the dictionary of |mean h(samples) - E h(G)|. A lower bound on d3.
double d3_lower_bound(const std::vector<double>& samples, const GammaTarget& t,
                      const std::vector<TestFunction>& dict);

double normal_cdf(double x);
double poisson_pmf(long k, double lambda);
double poisson_cdf(long k, double lambda);

}  // namespace pchaos
