#include "pchaos/identities.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "pchaos/bounds.hpp"
#include "pchaos/chaos_sim.hpp"
#include "pchaos/combinatorics.hpp"
#include "pchaos/contract.hpp"
#include "pchaos/stein_gamma.hpp"

namespace pchaos {

namespace {

double rel(double a, double b, double floor = 1.0) {
  return std::abs(a - b) / std::max({floor, std::abs(a), std::abs(b)});
}

MeasureSpace random_grid(int atoms, double intensity, Rng& rng) {
  std::uniform_real_distribution<double> u(0.1, 1.0);
  std::vector<Point> pts;
  std::vector<double> w;
  for (int k = 0; k < atoms; ++k) {
    pts.push_back({static_cast<double>(k)});
    w.push_back(u(rng) / atoms);
  }
  return make_grid_space(pts, w, intensity);
}

Kernel random_kernel(const MeasureSpace& s, int q, int terms, Rng& rng) {
  std::normal_distribution<double> nd(0.0, 1.0);
  std::vector<FactorPtr> pool;
  for (int k = 0; k <= q; ++k) {
    std::vector<double> v(s.node_count());
    for (auto& x : v) x = nd(rng);
    pool.push_back(make_grid_factor(s, std::move(v)));
  }
  std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
  std::vector<Term> ts;
  for (int t = 0; t < terms; ++t) {
    Term term{nd(rng), {}};
    for (int j = 0; j < q; ++j) term.factors.push_back(pool[pick(rng)]);
    ts.push_back(std::move(term));
  }
  return Kernel::separable(s, q, std::move(ts));
}

struct Worst {
  IdentityCheck c;
  Worst(std::string name, double tol) {
    c.name = std::move(name);
    c.tolerance = tol;
  }
  void add(double err) {
    ++c.trials;
    c.max_error = std::max(c.max_error, std::isnan(err) ? INFINITY : err);
  }
  IdentityCheck done() {
    c.passed = c.max_error <= c.tolerance;
    return c;
  }
};

// k-th moment of the centred Gamma law by quadrature of its density, written
// out here in the shifted variable u = x + nu.
double quadrature_moment(double nu, int k) {
  const double a = 0.5 * nu;
  const double lc = -a * std::log(2.0) - std::lgamma(a);
  auto g = [&](double u) {
    const double d = u - nu;
    if (u <= 0.0 || d == 0.0) return 0.0;
    // Log form, so that far in the tail the result underflows to 0 instead of inf * 0.
    const double m = std::exp(k * std::log(std::abs(d)) + lc + (a - 1.0) * std::log(u) - 0.5 * u);
    return d < 0.0 && k % 2 == 1 ? -m : m;
  };
  boost::math::quadrature::tanh_sinh<double> ts;
  boost::math::quadrature::exp_sinh<double> es;
  return ts.integrate(g, 0.0, 1.0) + es.integrate(g, 1.0, std::numeric_limits<double>::infinity());
}

}  // namespace

std::vector<IdentityCheck> algebra_identities(std::uint64_t seed, long trials) {
  std::vector<IdentityCheck> out;
  Rng rng = derive_stream(seed, "identity/algebra", 0);

  Worst us("full product norm 4!|f~*0^0 f|^2 = 2(2|f|^2)^2 + 16|f*1^1 f|^2", 1e-10);
  for (long t = 0; t < trials; ++t) {
    const MeasureSpace s = random_grid(5, 0.5 + static_cast<double>(t % 7), rng);
    const Kernel f = random_kernel(s, 2, 3, rng);
    const double nf = norm2(f);
    us.add(rel(24.0 * norm2(symmetrize(contract(f, f, 0, 0))), 8.0 * nf * nf + 16.0 * norm2(contract(f, f, 1, 1)), 0.0));
  }
  out.push_back(us.done());

  Worst cq("c_q constants: c_2 = 1, c_4 = 1/18", 0.0);
  cq.add(std::abs(c_q_constant(2) - 1.0));
  cq.add(std::abs(c_q_constant(4) - 1.0 / 18.0));
  out.push_back(cq.done());

  Worst sym("|f*a^0 f| = |f*q^(q-a) f| for q in {2, 4}", 1e-10);
  for (long t = 0; t < std::max(1L, trials / 10); ++t) {
    const MeasureSpace s = random_grid(3, 1.3, rng);
    for (int q : {2, 4}) {
      const Kernel f = random_kernel(s, q, 2, rng);
      for (int a = 2; a <= q; ++a) sym.add(rel(norm(contract(f, f, a, 0)), norm(contract(f, f, q, q - a)), 0.0));
    }
  }
  out.push_back(sym.done());

  Worst mom("centred Gamma moments against quadrature of the density", 1e-6);
  for (double nu : {0.5, 1.0, 2.0, 5.0})
    for (int k = 1; k <= 4; ++k) mom.add(rel(moment(GammaTarget{nu}, k), quadrature_moment(nu, k)));
  out.push_back(mom.done());

  Worst st("Stein equation residual on a 200-point grid", 1e-6);
  for (double nu : {1.0, 2.0}) {
    const GammaTarget t{nu};
    for (const auto& h : h3_dictionary()) {
      const SteinSolution u(t, h);
      for (int i = 0; i < 200; ++i) {
        const double x = -nu + 0.01 + (2 * nu + 10 - 0.01) * i / 199.0;
        st.add(std::abs(h.value(x) - u.mean_h() - (2 * (x + nu) * u.derivative(x) - x * u.value(x))));
      }
    }
  }
  out.push_back(st.done());
  return out;
}

std::vector<IdentityCheck> pathwise_identities(std::uint64_t seed, long reps) {
  std::vector<IdentityCheck> out;
  Rng rng = derive_stream(seed, "identity/pathwise", 0);

  {
    Worst w("product formula I_2(f)^2 = sum_p I_p(G_p f)", 1e-7);
    const MeasureSpace g = random_grid(4, 3.0, rng);
    const Kernel f = random_kernel(g, 2, 3, rng);
    std::vector<Kernel> G;
    for (int p = 0; p <= 4; ++p) G.push_back(product_kernel(f, p));
    for (long r = 0; r < reps; ++r) {
      const PoissonSample s = sample(g, rng);
      const double i2 = multiple_integral_eval(f, s);
      double rhs = 0.0;
      for (const auto& k : G) rhs += multiple_integral_eval(k, s);
      w.add(std::abs(i2 * i2 - rhs) / (1.0 + i2 * i2));
    }
    out.push_back(w.done());
  }
  {
    Worst w("add-one cost D_z F = F(eta + delta_z) - F(eta)", 1e-8);
    const MeasureSpace g = random_grid(4, 2.0, rng);
    const Kernel f = random_kernel(g, 2, 3, rng);
    std::uniform_int_distribution<std::size_t> pick(0, g.node_count() - 1);
    for (long r = 0; r < reps; ++r) {
      const PoissonSample s = sample(g, rng);
      const double* z = g.node(pick(rng));
      const double cost = multiple_integral_eval(f, add_point(s, z)) - multiple_integral_eval(f, s);
      w.add(rel(derivative_eval(f, s, z), cost));
    }
    out.push_back(w.done());
  }
  {
    Worst w("U-statistic chaos decomposition U = E U + I_1(n h_1) + I_2(h_2)", 1e-7);
    const MeasureSpace g = random_grid(4, 5.0, rng);
    const Kernel h = random_kernel(g, 2, 3, rng);
    const double EU = integrate_last(h, 2, true).scalar_value();
    const Kernel h1 = hoeffding_projection(h, 1).scaled(g.intensity());
    const Kernel h2 = hoeffding_projection(h, 2);
    for (long r = 0; r < reps; ++r) {
      const PoissonSample s = sample(g, rng);
      const double u = ustat_eval(h, s);
      w.add(rel(u, EU + multiple_integral_eval(h1, s) + multiple_integral_eval(h2, s)));
    }
    out.push_back(w.done());
  }
  {
    Worst w("carre expansion q^-1 |DF|^2 evaluated pathwise", 1e-8);
    const MeasureSpace g = random_grid(4, 2.5, rng);
    const Kernel f = random_kernel(g, 2, 3, rng);
    const ChaosExpansion ex = carre_expansion(f);
    for (long r = 0; r < reps; ++r) {
      const PoissonSample s = sample(g, rng);
      double v = 0.0;
      for (std::size_t a = 0; a < g.node_count(); ++a) {
        const double d = derivative_eval(f, s, g.node(a));
        v += g.intensity() * g.weights()[a] * d * d;
      }
      v /= f.order();
      const double e = evaluate_expansion(ex, s);
      w.add(std::abs(v - e) / (1.0 + std::abs(v)));
    }
    out.push_back(w.done());
  }
  return out;
}

}  // namespace pchaos
