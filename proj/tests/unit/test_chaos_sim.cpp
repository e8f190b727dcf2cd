#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>

#include "doctest.h"
#include "helpers.hpp"
#include "pchaos/chaos_sim.hpp"
#include "pchaos/combinatorics.hpp"
#include "pchaos/contract.hpp"

using namespace pchaos;
using namespace testkit;

namespace {

// Direct sum over ordered distinct tuples of the expanded point list.
double direct_ustat(const Kernel& h, const PoissonSample& s) {
  const auto pts = s.points();
  const int k = h.order();
  if (k == 0) return h.scalar_value();
  std::vector<std::size_t> idx;
  std::vector<char> used(pts.size(), 0);
  double total = 0;
  auto rec = [&](auto&& self) -> void {
    if (static_cast<int>(idx.size()) == k) {
      std::vector<Point> args;
      for (auto i : idx) args.push_back(pts[i]);
      total += eval_kernel(h, args);
      return;
    }
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (used[i]) continue;
      used[i] = 1;
      idx.push_back(i);
      self(self);
      idx.pop_back();
      used[i] = 0;
    }
  };
  rec(rec);
  return total;
}

// I_q by inclusion-exclusion over direct U-statistics of partial integrals.
double direct_multiple_integral(const Kernel& f, const PoissonSample& s) {
  const int q = f.order();
  double total = 0;
  for (int i = 0; i <= q; ++i) {
    const Kernel part = integrate_last(f, q - i, true);
    total += ((q - i) % 2 ? -1.0 : 1.0) * binom(q, i) * direct_ustat(part, s);
  }
  return total;
}

double sq(double x) { return x * x; }

}  // namespace

TEST_CASE("sample counts are Poisson with mean n mu(Z)") {
  auto s = make_uniform_interval(-1, 1, 7.0);
  std::mt19937_64 rng(1);
  const int R = 100000;
  double m = 0, v = 0;
  for (int r = 0; r < R; ++r) {
    const double c = static_cast<double>(sample(s, rng).count);
    m += c;
    v += c * c;
  }
  m /= R;
  v = v / R - m * m;
  CHECK(std::abs(m - 7.0) <= 3 * std::sqrt(7.0 / R));
  CHECK(v == doctest::Approx(7.0).epsilon(0.03));

  auto g = make_grid_space({{0.0}, {1.0}}, {1.0, 1.0}, 3.0);
  m = 0;
  for (int r = 0; r < R; ++r) m += static_cast<double>(sample(g, rng).count);
  CHECK(std::abs(m / R - 6.0) <= 3 * std::sqrt(6.0 / R));

  std::mt19937_64 a(42), b(42);
  auto s1 = sample(s, a), s2 = sample(s, b);
  CHECK(s1.coords == s2.coords);
  CHECK(s1.duplicate_points == 0);
  CHECK(make_sample(s, {{0.5}, {0.5}}).duplicate_points == 1);
}

TEST_CASE("U-statistic examples") {
  auto g = make_grid_space({{0.0}, {1.0}}, {1.0, 1.0}, 1.0);
  auto one = make_grid_factor(g, {1, 1});
  auto h = Kernel::separable(g, 2, {Term{1.0, {one, one}}});
  CHECK(ustat_eval(h, make_sample(g, {{0.0}, {1.0}, {1.0}})) == 6.0);
  CHECK(ustat_eval(h, make_sample(g, {{1.0}})) == 0.0);
  CHECK(ustat_eval(to_dense(h), make_sample(g, {{0.0}, {1.0}, {1.0}})) == 6.0);
  auto other = make_grid_space({{0.0}, {1.0}}, {1.0, 1.0}, 1.0);
  CHECK_THROWS(ustat_eval(h, make_sample(other, {{0.0}})));
}

TEST_CASE("U-statistics agree with the direct pairwise sum") {
  std::mt19937_64 rng(2);
  auto c = make_uniform_interval(-1, 1, 20.0);
  auto e1 = make_factor(c, [](const double* x) { return x[0] > 0 ? 1.0 : -1.0; });
  auto e2 = make_factor(c, [](const double* x) { return std::sqrt(3.0) * x[0]; });
  auto h = Kernel::separable(c, 2, {Term{1.0, {e1, e1}}, Term{0.5, {e2, e2}}, Term{0.3, {e1, e2}}});
  std::uniform_int_distribution<int> nd(0, 50);
  for (int r = 0; r < 1000; ++r) {
    auto s = sample_fixed(c, nd(rng), rng);
    const double a = ustat_eval(h, s), b = direct_ustat(h, s);
    CHECK(std::abs(a - b) <= 1e-9 * std::max(1.0, std::abs(b)));
  }
  auto g = random_grid(4, 3.0, rng);
  auto f3 = random_separable(g, 3, 3, rng);
  for (int r = 0; r < 50; ++r) {
    auto s = sample(g, rng);
    CHECK(close_rel(ustat_eval(f3, s), direct_ustat(f3, s), 1e-9));
    CHECK(close_rel(ustat_eval(to_dense(f3), s), direct_ustat(f3, s), 1e-9));
  }
}

TEST_CASE("Hoeffding projections and degeneracy") {
  auto g = make_grid_space({{0.0}, {1.0}}, {0.5, 0.5}, 4.0);
  auto a = make_grid_factor(g, {1, -1});
  auto h = Kernel::separable(g, 2, {Term{1.0, {a, a}}});
  CHECK(degeneracy_defect(h) < 1e-15);
  CHECK(hoeffding_rank(h) == 2);
  CHECK(norm2(linear_combination({{1.0, hoeffding_projection(h, 2)}, {-1.0, h}})) < 1e-30);

  // g = (2, 0): c = int g dmu = 1, h_1(z) = 2 g(z) c, ||h_1||^2 = 4 * (0.5 * 4) = 8.
  auto b = make_grid_factor(g, {2, 0});
  auto hb = Kernel::separable(g, 2, {Term{1.0, {b, b}}});
  const auto h1 = hoeffding_projection(hb, 1);
  CHECK(eval_kernel_nodes(h1, {0}) == doctest::Approx(4.0));
  CHECK(eval_kernel_nodes(h1, {1}) == doctest::Approx(0.0));
  CHECK(degeneracy_defect(hb) == doctest::Approx(std::sqrt(8.0)));
  CHECK(hoeffding_rank(hb) == 1);
  auto one = make_grid_factor(g, {1, 1});
  CHECK(hoeffding_rank(Kernel::separable(g, 2, {Term{3.0, {one, one}}})) == 1);
  CHECK_THROWS(hoeffding_projection(hb, 3));
}

TEST_CASE("multiple integrals: base cases and oracle agreement") {
  std::mt19937_64 rng(3);
  auto g = random_grid(3, 2.5, rng);
  auto f1 = random_separable(g, 1, 1, rng);
  for (int r = 0; r < 20; ++r) {
    auto s = sample(g, rng);
    const auto& v = f1.terms()[0].factors[0]->values;
    double sum = 0;
    for (std::size_t a = 0; a < 3; ++a) sum += s.counts[a] * v[a];
    CHECK(close_rel(multiple_integral_eval(f1, s), f1.terms()[0].coef * (sum - integrate_factor(*f1.terms()[0].factors[0], g)), 1e-12));
  }
  for (int q = 2; q <= 4; ++q) {
    auto f = random_separable(g, q, 3, rng);
    auto fd = to_dense(f);
    for (int r = 0; r < 10; ++r) {
      auto s = sample(g, rng);
      const double oracle = direct_multiple_integral(f, s);
      CHECK(close_rel(multiple_integral_eval(f, s), oracle, 1e-9));
      CHECK(close_rel(multiple_integral_eval(fd, s), oracle, 1e-9));
    }
  }
  // Degenerate order 2: I_2 is the pure pairwise sum.
  auto c = make_uniform_interval(-1, 1, 30.0);
  auto k = sign_kernel(c);
  for (int r = 0; r < 20; ++r) {
    auto s = sample(c, rng);
    CHECK(close_rel(multiple_integral_eval(k, s), ustat_eval(k, s), 1e-12));
  }
}

TEST_CASE("isometry for built-in kernels") {
  std::mt19937_64 rng(4);
  auto c = make_uniform_interval(-1, 1, 10.0);
  auto e = make_factor(c, sign_fn);
  auto x = make_factor(c, [](const double* z) { return z[0]; });
  std::vector<Kernel> ks = {sign_kernel(c, 0.1), Kernel::separable(c, 1, {Term{1.0, {x}}}),
                            Kernel::separable(c, 3, {Term{0.05, {e, x, x}}})};
  const int R = 100000;
  for (const auto& f : ks) {
    MomentAccumulator acc;
    for (int r = 0; r < R; ++r) acc.add(multiple_integral_eval(f, sample(c, rng)));
    const double target = factorial(f.order()) * norm2(f);
    INFO("order " << f.order());
    CHECK(std::abs(acc.raw(1)) <= 3 * acc.raw_se(1));
    CHECK(std::abs(acc.raw(2) - target) <= 3 * acc.raw_se(2));
  }
}

TEST_CASE("pathwise product formula for q = 2") {
  std::mt19937_64 rng(5);
  auto g = random_grid(4, 3.0, rng);
  auto f = random_separable(g, 2, 3, rng);
  for (int r = 0; r < 1000; ++r) {
    auto s = sample(g, rng);
    const double i2 = multiple_integral_eval(f, s);
    double rhs = 0;
    for (int p = 0; p <= 4; ++p) rhs += multiple_integral_eval(product_kernel(f, p), s);
    CHECK(std::abs(i2 * i2 - rhs) <= 1e-7 * (1 + i2 * i2));
  }
}

TEST_CASE("derivative equals the add-one cost") {
  std::mt19937_64 rng(6);
  auto g = random_grid(4, 2.0, rng);
  auto f = random_separable(g, 2, 3, rng);
  std::uniform_int_distribution<std::size_t> pick(0, 3);
  for (int r = 0; r < 1000; ++r) {
    auto s = sample(g, rng);
    const double* z = g.node(pick(rng));
    const double d = derivative_eval(f, s, z);
    const double cost = multiple_integral_eval(f, add_point(s, z)) - multiple_integral_eval(f, s);
    CHECK(std::abs(d - cost) <= 1e-8 * std::max(1.0, std::abs(cost)));
  }
  auto c = make_uniform_interval(-1, 1, 5.0);
  auto x = make_factor(c, [](const double* z) { return z[0] * z[0]; });
  auto f1 = Kernel::separable(c, 1, {Term{1.0, {x}}});
  double z = 0.7;
  CHECK(derivative_eval(f1, sample(c, rng), &z) == doctest::Approx(0.49));
  // Empty configuration: D_z I_2(f) = -2 int f(z, y) mu_n(dy).
  auto k = Kernel::separable(c, 2, {Term{1.0, {x, x}}});
  PoissonSample empty = make_sample(c, {});
  CHECK(derivative_eval(k, empty, &z) == doctest::Approx(-2 * 0.49 * 5.0 / 3.0).epsilon(1e-10));
}

TEST_CASE("U-statistic chaos decomposition, k = 2") {
  std::mt19937_64 rng(7);
  auto g = random_grid(4, 5.0, rng);
  auto h = random_separable(g, 2, 3, rng);
  const double n = g.intensity();
  const double EU = integrate_last(h, 2, true).scalar_value();
  const Kernel h1 = hoeffding_projection(h, 1).scaled(n);
  const Kernel h2 = hoeffding_projection(h, 2);
  for (int r = 0; r < 1000; ++r) {
    auto s = sample(g, rng);
    const double u = ustat_eval(h, s);
    const double rhs = EU + multiple_integral_eval(h1, s) + multiple_integral_eval(h2, s);
    CHECK(std::abs(u - rhs) <= 1e-7 * std::max(1.0, std::abs(u)));
  }
}

TEST_CASE("disk graph counts") {
  auto c = make_uniform_interval(0, 10, 1.0);
  const double r = 1.0;
  auto s = make_sample(c, {{0.0}, {0.5}, {1.0}});
  CHECK(disk_graph_stat(s, r, Pattern::Edge) == 2);
  CHECK(disk_graph_stat(s, r, Pattern::Triangle) == 0);
  CHECK(disk_graph_stat(s, r, Pattern::Path, 3) == 1);
  CHECK(disk_graph_stat(make_sample(c, {}), r, Pattern::Edge) == 0);
  auto t = make_sample(c, {{0.0}, {0.3}, {0.6}, {5.0}, {5.0}});
  CHECK(disk_graph_stat(t, r, Pattern::Triangle) == 1);
  CHECK(disk_graph_stat(t, r, Pattern::Path, 3) == 0);
  CHECK(disk_graph_stat(t, r, Pattern::Edge) == 3);

  // Planar points: compare against brute force.
  auto sq2 = make_continuum_space(
      2, [](Rng& g, double* out) { std::uniform_real_distribution<double> u(0, 1); out[0] = u(g); out[1] = u(g); },
      {{0.5, 0.5}}, {1.0}, 60.0);
  std::mt19937_64 rng(8);
  for (int rep = 0; rep < 20; ++rep) {
    auto p = sample(sq2, rng);
    const auto pts = p.points();
    auto adj = [&](std::size_t i, std::size_t j) {
      const double d = std::hypot(pts[i][0] - pts[j][0], pts[i][1] - pts[j][1]);
      return d > 0 && d < 0.15;
    };
    long e = 0, tri = 0, path = 0;
    for (std::size_t i = 0; i < pts.size(); ++i)
      for (std::size_t j = i + 1; j < pts.size(); ++j) {
        e += adj(i, j);
        for (std::size_t k = j + 1; k < pts.size(); ++k) {
          const int m = adj(i, j) + adj(j, k) + adj(i, k);
          tri += m == 3;
          path += m == 2;
        }
      }
    CHECK(disk_graph_stat(p, 0.15, Pattern::Edge) == e);
    CHECK(disk_graph_stat(p, 0.15, Pattern::Triangle) == tri);
    CHECK(disk_graph_stat(p, 0.15, Pattern::Path, 3) == path);
  }
}

TEST_CASE("edge count mean is stable in the Poisson regime") {
  // n points on (0,1) and r = 1/n^2: E[edges] = n^2/2 (2r - r^2) ~ 1.
  std::mt19937_64 rng(9);
  for (double n : {50.0, 200.0, 800.0}) {
    auto c = make_uniform_interval(0, 1, n);
    const double r = 1 / (n * n);
    const double lam = n * n / 2 * (2 * r - r * r);
    MomentAccumulator acc;
    for (int rep = 0; rep < 10000; ++rep) acc.add(static_cast<double>(disk_graph_stat(sample(c, rng), r, Pattern::Edge)));
    CHECK(std::abs(acc.raw(1) - lam) <= 3 * acc.raw_se(1));
  }
}

TEST_CASE("empirical distances") {
  Target gam{Target::Kind::Gamma, 1.0, 0.0};
  std::mt19937_64 rng(10);
  std::gamma_distribution<double> gd(0.5, 1.0);
  std::vector<double> xs(1000000);
  for (auto& x : xs) x = 2 * gd(rng) - 1;
  CHECK(kolmogorov_distance(xs, gam) <= 0.005);

  Target nor{Target::Kind::Normal, 0.0, 0.0};
  CHECK(kolmogorov_distance({0.0}, nor) == doctest::Approx(0.5));
  CHECK_THROWS(empirical_distances({}, nor));

  Target poi{Target::Kind::Poisson, 0.0, 1.0};
  // Half the mass at 0, half at 1: gaps at 0.5 and 1.5 are |0.5 - 1/e| and 1 - 2/e.
  const double e1 = std::exp(-1.0);
  CHECK(kolmogorov_distance({0.0, 1.0}, poi) == doctest::Approx(std::max(std::abs(0.5 - e1), 1 - 2 * e1)).epsilon(1e-12));
  const auto rec = empirical_distances({1.0, 2.0, 3.0}, nor);
  CHECK(rec.mean == doctest::Approx(2.0));
  CHECK(rec.variance == doctest::Approx(1.0));
  CHECK(rec.fourth == doctest::Approx((1 + 16 + 81) / 3.0));
}

TEST_CASE("moment accumulators merge by addition") {
  MomentAccumulator a, b, all;
  for (int i = 0; i < 10; ++i) {
    (i < 4 ? a : b).add(i * 0.5);
    all.add(i * 0.5);
  }
  a.merge(b);
  CHECK(a.n == all.n);
  for (int k = 1; k <= 4; ++k) CHECK(a.raw(k) == doctest::Approx(all.raw(k)));
}

TEST_CASE("independence diagnostics") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> nd;
  std::vector<double> a(20000), b(20000), c(20000);
  for (std::size_t i = 0; i < a.size(); ++i) {
    a[i] = nd(rng);
    b[i] = nd(rng);
    c[i] = a[i] + 0.1 * nd(rng);
  }
  const auto r = correlation(a, b);
  CHECK(std::abs(r.value) <= 4 * r.se);
  CHECK(correlation(a, c).value > 0.9);
  CHECK(product_gap(a, b) < 0.02);
  CHECK(product_gap(a, c) > 0.1);
}

TEST_CASE("parallel replications are deterministic for fixed workers") {
  auto run = [](int workers) {
    std::vector<double> out(1000);
    parallel_replications(1000, workers, 77, "t", [&](long r, Rng& g) {
      out[static_cast<std::size_t>(r)] = std::uniform_real_distribution<double>(0, 1)(g);
    });
    return out;
  };
  CHECK(run(3) == run(3));
  CHECK(run(1) == run(1));
  CHECK(run(1) != run(2));
  CHECK_THROWS(parallel_replications(10, 2, 1, "t", [](long r, Rng&) {
    if (r == 7) throw std::runtime_error("boom");
  }));
}

TEST_CASE("PCHS round trip") {
  const std::string path = "pchs_roundtrip.bin";
  write_pchs(path, {"a", "bb"}, {{1.0, 2.5}, {-3.0, 1e-300}});
  std::vector<std::string> names;
  const auto cols = read_pchs(path, &names);
  CHECK(names == std::vector<std::string>{"a", "bb"});
  CHECK(cols[1][1] == 1e-300);
  std::remove(path.c_str());
  CHECK_THROWS(write_pchs(path, {"a"}, {{1.0}, {2.0}}));
}

TEST_CASE("compiled kernel agrees with the generic evaluators") {
  std::mt19937_64 rng(41);
  // Narrow-support terms on a cell grid, plus a dense-support random kernel.
  const int m = 6;
  auto g = make_cell_grid(-1, 1, 2 * m, 30.0);
  std::vector<Term> terms;
  for (int i = 0; i < m; ++i) {
    std::vector<double> v(2 * m, 0.0);
    v[2 * i] = 1.5;
    v[2 * i + 1] = -1.5;
    auto e = make_grid_factor(g, v);
    terms.push_back(Term{0.3 + i, {e, e, e}});
  }
  auto f3 = Kernel::separable(g, 3, terms);
  auto r2 = random_separable(g, 2, 3, rng);
  for (const auto& f : {f3, r2}) {
    const CompiledKernel ck(f);
    for (int r = 0; r < 300; ++r) {
      auto s = sample(g, rng);
      const double a = multiple_integral_eval(f, s), b = ck.integral(s);
      CHECK(std::abs(a - b) <= 1e-9 * (1 + std::abs(a)));
      const double u = ustat_eval(f, s), v = ck.ustat(s);
      CHECK(std::abs(u - v) <= 1e-9 * (1 + std::abs(u)));
    }
  }
  CHECK_THROWS(CompiledKernel(sign_kernel(make_uniform_interval(-1, 1, 2.0))));
  CHECK_THROWS(CompiledKernel(f3).integral(sample(g.with_intensity(3.0), rng)));
}

TEST_CASE("sorted interval sampler") {
  auto c = make_uniform_interval(-1, 1, 40.0);
  std::mt19937_64 rng(42);
  MomentAccumulator cnt, left;
  for (int r = 0; r < 100000; ++r) {
    auto s = sample_sorted_interval(c, -1, 1, rng);
    CHECK(std::is_sorted(s.coords.begin(), s.coords.end()));
    CHECK(s.count == static_cast<long>(s.coords.size()));
    if (r < 100)
      for (double x : s.coords) CHECK((x > -1 && x < 1));
    cnt.add(static_cast<double>(s.count));
    left.add(static_cast<double>(std::count_if(s.coords.begin(), s.coords.end(), [](double x) { return x < -0.5; })));
  }
  CHECK(std::abs(cnt.raw(1) - 40.0) <= 3 * cnt.raw_se(1));
  CHECK(std::abs(cnt.variance() - 40.0) <= 0.03 * 40.0);
  CHECK(std::abs(left.raw(1) - 10.0) <= 3 * left.raw_se(1));
  CHECK_THROWS(sample_sorted_interval(make_cell_grid(-1, 1, 4, 1.0), -1, 1, rng));
}
