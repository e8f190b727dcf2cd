#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "pchaos/space.hpp"

namespace pchaos {

struct BoundReport {
  double nu = 0.0;
  int q = 0;
  double n = 0.0;
  double variance = 0.0;  // q! ||f||^2 under mu_n
  double variance_gap = 0.0;  // q! ||f||^2 - 2 nu (signed)
  std::optional<double> sigma2;
  std::map<std::pair<int, int>, double> contraction_norms;
  double middle_defect = 0.0;
  std::optional<double> a1_exact;
  std::optional<double> a3_bound;
  double a4_bound = 0.0;
  double a5 = 0.0;
  std::optional<double> Bn, Cn;
  std::optional<double> Bn_depoissonized, Cn_depoissonized;
  double final_bound = 0.0;
  // Entries of the max-form rate diagnostic, in order, and their maximum.
  std::vector<std::pair<std::string, double>> diagnostics;
  double max_form = 0.0;
  // Explicit constant with final_bound <= K * max_form (q = 2, max_form <= 1 only).
  std::optional<double> k_assembled;
  std::map<std::string, std::string> method_tags;

  // Flat key/value view used by the CSV and JSON writers.
  std::vector<std::pair<std::string, double>> flat() const;
};

// Expansion of q^{-1} ||D I_q(f)||^2: constant q! ||f||^2 and, for p = 1..2q-2,
//   k_p = q * sum over (t, s) != (q, q), 2q - t - s = p, of
//         (t-1)! C(q-1, t-1)^2 C(t-1, s-1) * (f ~*_t^s f).
ChaosExpansion carre_expansion(const Kernel& f, int max_order = 6);

// sqrt(E[(2(F + nu) - q^{-1} ||DF||^2)^2]) for F = I_q(f), by chaos orthogonality.
double a1_exact(const Kernel& f, double nu);
// Upper bound on (int E|D_z F|^4 mu_n(dz))^{1/2} from contraction norms.
double a4_bound(const Kernel& f);
// sqrt((q-1)! ||f||^2).
double a5(const Kernel& f);
// Upper bound on A_3; zero when the law of F is known to live on [-nu, inf).
double a3_bound(const Kernel& f, bool half_line_support = false);

struct GammaBoundOptions {
  bool half_line_support = false;
};
BoundReport gamma_bound_report(const Kernel& f, double nu, const GammaBoundOptions& opts = {});

// Exact third moment of I_q(f) (q even) and fourth moment of I_2(f).
double third_moment(const Kernel& f);
double third_moment_I2(const Kernel& f);
double fourth_moment_I2(const Kernel& f);
// The five summands of the fourth-moment expansion, in display order.
std::vector<double> fourth_moment_I2_terms(const Kernel& f);
// |E I_2^4 - 12 E I_2^3 - (12 nu^2 - 48 nu)|.
double three_moment_criterion(const Kernel& f, double nu);

struct DeJongOptions {
  double degeneracy_tol = 1e-10;
  bool allow_zero = false;
};
// h is a degenerate order-2 kernel; all norms are taken under mu_n with n the
// intensity of h's space. nu is optional: C_n is only computed when present.
BoundReport dejong_report(const Kernel& h, std::optional<double> nu, const DeJongOptions& opts = {});

// Monte Carlo estimate of sqrt(E[(2(F + nu)_+ - q^{-1} ||DF||^2)^2]) with its standard error.
std::pair<double, double> a1_plus_monte_carlo(const Kernel& f, double nu, long reps, std::uint64_t seed,
                                              int workers = 1);

}  // namespace pchaos
