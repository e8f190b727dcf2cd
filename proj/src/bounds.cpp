#include "pchaos/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "pchaos/chaos_sim.hpp"
#include "pchaos/combinatorics.hpp"
#include "pchaos/contract.hpp"
#include "pchaos/stein_gamma.hpp"

namespace pchaos {

namespace {

std::string pair_name(const char* base, int r, int l) {
  return std::string(base) + "_" + std::to_string(r) + "_" + std::to_string(l);
}

}  // namespace

std::vector<std::pair<std::string, double>> BoundReport::flat() const {
  std::vector<std::pair<std::string, double>> out;
  const double nan = std::nan("");
  out.emplace_back("nu", nu);
  out.emplace_back("q", q);
  out.emplace_back("n", n);
  out.emplace_back("variance", variance);
  out.emplace_back("variance_gap", variance_gap);
  out.emplace_back("sigma2", sigma2.value_or(nan));
  for (const auto& [rl, v] : contraction_norms) out.emplace_back(pair_name("contraction", rl.first, rl.second), v);
  out.emplace_back("middle_defect", middle_defect);
  out.emplace_back("a1_exact", a1_exact.value_or(nan));
  out.emplace_back("a3_bound", a3_bound.value_or(nan));
  out.emplace_back("a4_bound", a4_bound);
  out.emplace_back("a5", a5);
  out.emplace_back("Bn", Bn.value_or(nan));
  out.emplace_back("Cn", Cn.value_or(nan));
  out.emplace_back("Bn_depoissonized", Bn_depoissonized.value_or(nan));
  out.emplace_back("Cn_depoissonized", Cn_depoissonized.value_or(nan));
  out.emplace_back("final_bound", final_bound);
  out.emplace_back("max_form", max_form);
  out.emplace_back("k_assembled", k_assembled.value_or(nan));
  return out;
}

ChaosExpansion carre_expansion(const Kernel& f, int max_order) {
  const int q = f.order();
  if (q < 1) throw std::invalid_argument("carre_expansion: order must be positive");
  if (q > max_order) throw std::invalid_argument("carre_expansion: order above cap");
  const Kernel fs = symmetrize(f);
  ChaosExpansion out;
  out.constant = factorial(q) * norm2(fs);
  std::map<int, std::vector<std::pair<double, Kernel>>> parts;
  for (int t = 1; t <= q; ++t)
    for (int s = 1; s <= t; ++s) {
      if (t == q && s == q) continue;
      const int p = 2 * q - t - s;
      const double c = q * factorial(t - 1) * binom(q - 1, t - 1) * binom(q - 1, t - 1) * binom(t - 1, s - 1);
      parts[p].emplace_back(c, symmetrize(contract(fs, fs, t, s)));
    }
  for (auto& [p, list] : parts) out.components[p] = symmetrize(linear_combination(list));
  return out;
}

double a1_exact(const Kernel& f, double nu) {
  const int q = f.order();
  const ChaosExpansion c = carre_expansion(f);
  const double gap = 2.0 * nu - c.constant;
  double total = gap * gap;
  bool saw_q = false;
  for (const auto& [p, k] : c.components) {
    if (p == q) {
      total += factorial(q) * norm2(linear_combination({{2.0, symmetrize(f)}, {-1.0, k}}));
      saw_q = true;
    } else {
      total += factorial(p) * norm2(k);
    }
  }
  if (!saw_q) total += factorial(q) * 4.0 * norm2(symmetrize(f));
  return std::sqrt(std::max(0.0, total));
}

double a4_bound(const Kernel& f) {
  const int q = f.order();
  if (q < 1) throw std::invalid_argument("a4_bound: order must be positive");
  const Kernel fs = symmetrize(f);
  double total = 0.0;
  for (int r = 1; r <= q; ++r)
    for (int l = 0; l <= r - 1; ++l) {
      if (r + l < 1 || r + l > 2 * q - 1) continue;
      const double c = std::sqrt(factorial(r + l - 1)) * factorial(q - l - 1) * binom(q - 1, q - 1 - l) *
                       binom(q - 1, q - 1 - l) * binom(q - 1 - l, q - r);
      if (c == 0.0) continue;
      total += c * norm(contract(fs, fs, r, l));
    }
  return q * q * total;
}

double a5(const Kernel& f) {
  const int q = f.order();
  if (q < 1) throw std::invalid_argument("a5: order must be positive");
  return std::sqrt(factorial(q - 1) * norm2(f));
}

double a3_bound(const Kernel& f, bool half_line_support) {
  const int q = f.order();
  if (q < 2) throw std::invalid_argument("a3_bound: order must be >= 2");
  if (half_line_support) return 0.0;
  const Kernel fs = symmetrize(f);
  // D_{z2} D_{z1} F = q(q-1) I_{q-2}(f(z1, z2, .)); its fourth moment and the
  // mixed term are expanded with the product formula at order q - 2.
  const double qq = static_cast<double>(q) * q * (q - 1) * (q - 1);
  double t3 = 0.0, ch = 0.0;
  for (int r = 0; r <= q - 2; ++r)
    for (int l = 0; l <= r; ++l) {
      const double c = factorial(r) * binom(q - 2, r) * binom(q - 2, r) * binom(r, l) *
                       std::sqrt(factorial(2 * (q - 2) - r - l));
      t3 += c * norm(contract(fs, fs, r + 2, l));
      ch += c * norm(contract(fs, fs, r + 2, l + 1));
    }
  t3 *= qq;
  ch *= qq;
  const double t1 = a4_bound(fs);
  const double t2 = std::sqrt(t1 * ch);
  return 2.0 * std::sqrt(2.0) / q * (t1 + t2 + t3);
}

BoundReport gamma_bound_report(const Kernel& f, double nu, const GammaBoundOptions& opts) {
  const int q = f.order();
  if (q < 2 || q % 2 != 0) throw std::invalid_argument("gamma_bound_report: q must be even and >= 2");
  if (!(nu > 0.0)) throw std::invalid_argument("gamma_bound_report: nu must be positive");
  const Kernel fs = symmetrize(f);
  BoundReport rep;
  rep.nu = nu;
  rep.q = q;
  rep.n = fs.space().intensity();
  rep.variance = factorial(q) * norm2(fs);
  rep.variance_gap = rep.variance - 2.0 * nu;
  for (int r = 1; r <= q; ++r)
    for (int l = 0; l <= r; ++l) {
      if (r == q && l == q) continue;
      rep.contraction_norms[{r, l}] = norm(contract(fs, fs, r, l));
    }
  rep.middle_defect = middle_contraction_defect(fs);
  rep.a1_exact = a1_exact(fs, nu);
  rep.a4_bound = a4_bound(fs);
  rep.a5 = a5(fs);
  rep.a3_bound = a3_bound(fs, opts.half_line_support);
  const auto c = smoothness_constants(GammaTarget{nu});
  rep.final_bound = c.c1 * *rep.a1_exact + c.c2 * rep.a4_bound * rep.a5 + 2.0 * c.c1 * *rep.a3_bound;

  rep.diagnostics.emplace_back("variance_gap", std::abs(rep.variance_gap));
  // ||f *_p^p f|| = ||f *_{q-p}^{q-p} f||, so p < q/2 covers p != q/2.
  for (int p = 1; p < q / 2; ++p) rep.diagnostics.emplace_back(pair_name("contraction", p, p), rep.contraction_norms.at({p, p}));
  rep.diagnostics.emplace_back(pair_name("sqrt_contraction", q, 0), std::sqrt(rep.contraction_norms.at({q, 0})));
  for (int r = 1; r <= q; ++r)
    for (int l = 1; l <= std::min(r, q - 1); ++l) {
      if (r == l) continue;
      rep.diagnostics.emplace_back(pair_name("sqrt_contraction", r, l), std::sqrt(rep.contraction_norms.at({r, l})));
    }
  rep.diagnostics.emplace_back("middle_defect", rep.middle_defect);
  for (const auto& [k, v] : rep.diagnostics) rep.max_form = std::max(rep.max_form, v);

  rep.method_tags["a1_exact"] = "exact: chaos orthogonality of 2(F+nu) - q^-1 ||DF||^2";
  rep.method_tags["a4_bound"] = "bound: contraction-norm sum";
  rep.method_tags["a5"] = "exact: sqrt((q-1)! ||f||^2)";
  rep.method_tags["a3_bound"] =
      opts.half_line_support ? "zero: law supported on [-nu, inf)" : "bound: a4_bound plus Cauchy-Schwarz on second derivatives";
  rep.method_tags["final_bound"] = "c1 a1 + c2 a4 a5 + 2 c1 a3";
  if (q == 2) {
    // With D = max_form <= 1: a1 <= sqrt(13) D, a4 <= 4(2 + sqrt2) D, a5 <= sqrt(nu + 1/2),
    // a3 <= sqrt2 (4(2 + sqrt2) + 4 sqrt(2 + sqrt2) + 4) D.
    if (rep.max_form <= 1.0) {
      const double s2 = std::sqrt(2.0);
      const double a3k = opts.half_line_support ? 0.0 : s2 * (4.0 * (2.0 + s2) + 4.0 * std::sqrt(2.0 + s2) + 4.0);
      rep.k_assembled = c.c1 * std::sqrt(13.0) + c.c2 * 4.0 * (2.0 + s2) * std::sqrt(nu + 0.5) + 2.0 * c.c1 * a3k;
      rep.method_tags["k_assembled"] = "explicit q=2 constant, valid while max_form <= 1";
    } else {
      rep.method_tags["k_assembled"] = "absent: max_form > 1";
    }
  } else {
    rep.method_tags["k_assembled"] = "absent: no explicit constant for q > 2; final_bound is the rigorous quantity";
  }
  return rep;
}

double third_moment(const Kernel& f) {
  const int q = f.order();
  if (q < 2 || q % 2 != 0) throw std::invalid_argument("third_moment: q must be even and >= 2");
  const Kernel fs = symmetrize(f);
  double total = 0.0;
  for (int p = q / 2; p <= q; ++p) {
    const double c = factorial(p) * binom(q, p) * binom(q, p) * binom(p, q - p) * factorial(q);
    total += c * inner(symmetrize(contract(fs, fs, p, q - p)), fs);
  }
  return total;
}

double third_moment_I2(const Kernel& f) {
  if (f.order() != 2) throw std::invalid_argument("third_moment_I2: order-2 kernel expected");
  return third_moment(f);
}

std::vector<double> fourth_moment_I2_terms(const Kernel& f) {
  if (f.order() != 2) throw std::invalid_argument("fourth_moment_I2: order-2 kernel expected");
  const Kernel fs = symmetrize(f);
  const Kernel c11 = contract(fs, fs, 1, 1);
  const Kernel sq = contract(fs, fs, 2, 0);
  const double nf = norm2(fs);
  return {16.0 * 6.0 * norm2(symmetrize(contract(fs, fs, 1, 0))), 16.0 * norm2(contract(fs, fs, 2, 1)),
          16.0 * norm2(c11), 2.0 * norm2(linear_combination({{4.0, c11}, {2.0, sq}})), 3.0 * (2.0 * nf) * (2.0 * nf)};
}

double fourth_moment_I2(const Kernel& f) {
  double s = 0.0;
  for (double v : fourth_moment_I2_terms(f)) s += v;
  return s;
}

double three_moment_criterion(const Kernel& f, double nu) {
  return std::abs(fourth_moment_I2(f) - 12.0 * third_moment_I2(f) - (12.0 * nu * nu - 48.0 * nu));
}

BoundReport dejong_report(const Kernel& h, std::optional<double> nu, const DeJongOptions& opts) {
  if (h.order() != 2) throw std::invalid_argument("dejong_report: order-2 kernel expected");
  const Kernel hs = symmetrize(h);
  const double defect = degeneracy_defect(hs);
  if (defect > opts.degeneracy_tol) throw std::invalid_argument("dejong_report: kernel is not degenerate");
  BoundReport rep;
  rep.q = 2;
  rep.nu = nu.value_or(0.0);
  rep.n = hs.space().intensity();
  const double n2 = norm2(hs);
  rep.variance = 2.0 * n2;
  rep.sigma2 = rep.variance;
  rep.variance_gap = nu ? rep.variance - 2.0 * *nu : 0.0;
  for (int r = 1; r <= 2; ++r)
    for (int l = 0; l <= r; ++l) {
      if (r == 2 && l == 2) continue;
      rep.contraction_norms[{r, l}] = norm(contract(hs, hs, r, l));
    }
  const double fourth_root = std::sqrt(rep.contraction_norms.at({2, 0}));  // (int h^4)^{1/4}
  const double h11 = rep.contraction_norms.at({1, 1}), h21 = rep.contraction_norms.at({2, 1});
  rep.middle_defect = middle_contraction_defect(hs);
  rep.a4_bound = a4_bound(hs);
  rep.a5 = a5(hs);
  const double pen = std::pow(rep.n, -0.25);
  if (rep.variance == 0.0) {
    if (!opts.allow_zero) throw std::invalid_argument("dejong_report: zero kernel");
    rep.Bn = 0.0;
  } else {
    rep.Bn = std::max({fourth_root * fourth_root, h11, h21}) / rep.variance;
  }
  rep.Bn_depoissonized = *rep.Bn + pen;
  rep.method_tags["Bn"] = "exact: sigma^-2 max{(int h^4)^1/2, ||h *_1^1 h||, ||h *_2^1 h||}";
  rep.method_tags["depoissonized"] = "reporting convention: penalty n^-1/4 with coefficient 1";
  rep.method_tags["equivalence_B"] = "Bn -> 0 iff the fourth-moment condition holds";
  if (nu) {
    rep.diagnostics = {{"variance_gap", std::abs(rep.variance_gap)},
                       {"fourth_root_h4", fourth_root},
                       {"sqrt_contraction_2_1", std::sqrt(h21)},
                       {"middle_defect", rep.middle_defect}};
    for (const auto& [k, v] : rep.diagnostics) rep.max_form = std::max(rep.max_form, v);
    rep.Cn = rep.max_form;
    rep.Cn_depoissonized = *rep.Cn + pen;
    rep.method_tags["Cn"] = "exact: max{|2||h||^2 - 2nu|, (int h^4)^1/4, ||h *_2^1 h||^1/2, ||h ~*_1^1 h - h||}";
    rep.method_tags["equivalence_C"] = "Cn -> 0 iff the Gamma contraction conditions hold";
  }
  return rep;
}

std::pair<double, double> a1_plus_monte_carlo(const Kernel& f, double nu, long reps, std::uint64_t seed,
                                              int workers) {
  if (reps < 2) throw std::invalid_argument("a1_plus_monte_carlo: need at least 2 replications");
  const ChaosExpansion c = carre_expansion(f);
  std::vector<double> v(static_cast<std::size_t>(reps));
  parallel_replications(reps, workers, seed, "a1_plus", [&](long r, Rng& rng) {
    const PoissonSample s = sample(f.space(), rng);
    const double F = multiple_integral_eval(f, s);
    const double d = 2.0 * std::max(F + nu, 0.0) - evaluate_expansion(c, s);
    v[static_cast<std::size_t>(r)] = d * d;
  });
  MomentAccumulator acc;
  for (double x : v) acc.add(x);
  const double m = acc.raw(1);
  const double se_m = acc.raw_se(1);
  const double root = std::sqrt(std::max(m, 0.0));
  return {root, root > 0 ? se_m / (2.0 * root) : 0.0};
}

}  // namespace pchaos
