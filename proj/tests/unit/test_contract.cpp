#include <cmath>
#include <functional>
#include <random>

#include "doctest.h"
#include "helpers.hpp"
#include "pchaos/combinatorics.hpp"
#include "pchaos/contract.hpp"

using namespace pchaos;
using namespace testkit;

namespace {

// Brute-force oracle: ||f *_r^l f||^2 by direct summation over atoms, with the
// kernel given only through point evaluation at atom tuples.
double oracle_contraction_norm2(const std::function<double(const std::vector<std::size_t>&)>& f,
                                const std::vector<double>& w, double n, int q, int r, int l) {
  const std::size_t A = w.size();
  auto tuples = [A](int k) {
    std::vector<std::vector<std::size_t>> out{{}};
    for (int j = 0; j < k; ++j) {
      std::vector<std::vector<std::size_t>> next;
      for (auto& t : out)
        for (std::size_t a = 0; a < A; ++a) {
          auto u = t;
          u.push_back(a);
          next.push_back(u);
        }
      out.swap(next);
    }
    return out;
  };
  auto weight = [&](const std::vector<std::size_t>& t) {
    double p = 1;
    for (auto a : t) p *= n * w[a];
    return p;
  };
  const auto Z = tuples(l), G = tuples(r - l), T = tuples(q - r);
  double total = 0;
  for (const auto& g : G)
    for (const auto& t : T)
      for (const auto& s : T) {
        double c = 0;
        for (const auto& z : Z) {
          std::vector<std::size_t> a = z, b = z;
          a.insert(a.end(), g.begin(), g.end());
          b.insert(b.end(), g.begin(), g.end());
          a.insert(a.end(), t.begin(), t.end());
          b.insert(b.end(), s.begin(), s.end());
          c += weight(z) * f(a) * f(b);
        }
        total += weight(g) * weight(t) * weight(s) * c * c;
      }
  return total;
}

}  // namespace

TEST_CASE("full contraction is the squared norm") {
  std::mt19937_64 rng(1);
  auto s = random_grid(4, 2.0, rng);
  auto f = random_separable(s, 2, 3, rng);
  auto c = contract(f, f, 2, 2);
  CHECK(c.order() == 0);
  CHECK(close_rel(c.scalar_value(), norm2(f), 1e-13));
}

TEST_CASE("two-atom contractions by hand") {
  auto s = make_grid_space({{0.0}, {1.0}}, {1.0, 1.0}, 1.0);
  auto e = make_grid_factor(s, {1.0, 0.0});
  auto f = Kernel::separable(s, 2, {Term{1.0, {e, e}}});
  // f *_1^1 f (x, y) = sum_z f(z, x) f(z, y) = e(x) e(y): only z = atom 0 contributes.
  auto c11 = to_dense(contract(f, f, 1, 1));
  CHECK(c11.dense_values() == std::vector<double>{1, 0, 0, 0});
  // f *_2^1 f (z) = e(z)^2 ||e||^2 = e(z).
  auto c21 = to_dense(contract(f, f, 2, 1));
  CHECK(c21.dense_values() == std::vector<double>{1, 0});
  // f *_0^0 f = f (x) f, order 4.
  auto c00 = contract(f, f, 0, 0);
  CHECK(c00.order() == 4);
  CHECK(eval_kernel_nodes(c00, {0, 0, 0, 0}) == 1.0);
  CHECK(eval_kernel_nodes(c00, {0, 0, 1, 0}) == 0.0);
  CHECK_THROWS(contract(f, f, 1, 2));
  CHECK_THROWS(contract(f, f, 3, 0));
}

TEST_CASE("symmetrize examples") {
  auto s = make_grid_space({{0.0}, {1.0}, {2.0}}, {1.0, 1.0, 1.0}, 1.0);
  auto a = make_grid_factor(s, {1, 2, 3});
  auto b = make_grid_factor(s, {0, 1, -1});
  auto c = make_grid_factor(s, {5, 0, 1});
  auto raw = Kernel::separable(s, 2, {Term{1.0, {a, b}}}, false);
  CHECK_FALSE(raw.symmetric());
  auto sym = symmetrize(raw);
  CHECK(eval_kernel_nodes(sym, {0, 1}) == doctest::Approx((1 * 1 + 2 * 0) / 2.0));
  auto twice = symmetrize(sym);
  CHECK(std::abs(norm2(linear_combination({{1.0, twice}, {-1.0, sym}}))) < 1e-24);

  auto raw3 = Kernel::separable(s, 3, {Term{1.0, {a, b, c}}}, false);
  auto sym3 = symmetrize(raw3);
  double expect = 0;
  const std::vector<std::size_t> args{0, 1, 2};
  for (const auto& p : permutations(3))
    expect += a->values[args[static_cast<std::size_t>(p[0])]] * b->values[args[static_cast<std::size_t>(p[1])]] *
              c->values[args[static_cast<std::size_t>(p[2])]];
  CHECK(eval_kernel_nodes(sym3, args) == doctest::Approx(expect / 6));
  auto dense3 = symmetrize(to_dense(raw3));
  CHECK(eval_kernel_nodes(dense3, args) == doctest::Approx(expect / 6));
}

TEST_CASE("norms of rank kernels") {
  auto s = make_uniform_interval(-1.0, 1.0, 1.0);
  CHECK(norm2(sign_kernel(s)) == doctest::Approx(1.0).epsilon(1e-14));
  // Orthonormal mean-zero system on a 4-cell grid: Haar-type functions.
  auto g = make_cell_grid(-1.0, 1.0, 4, 1.0);
  auto e1 = make_grid_factor(g, {1, -1, 1, -1});
  auto e2 = make_grid_factor(g, {1, 1, -1, -1});
  auto e3 = make_grid_factor(g, {1, -1, -1, 1});
  auto h = Kernel::separable(g, 2, {Term{1, {e1, e1}}, Term{1, {e2, e2}}, Term{1, {e3, e3}}});
  CHECK(norm2(h) == doctest::Approx(3.0).epsilon(1e-14));
  CHECK(inner(h, Kernel::zero(g, 2)) == 0.0);
}

TEST_CASE("product kernels for q = 2") {
  std::mt19937_64 rng(3);
  auto s = random_grid(4, 1.5, rng);
  auto f = random_separable(s, 2, 2, rng);
  auto g4 = product_kernel(f, 4);
  auto expect4 = symmetrize(contract(f, f, 0, 0));
  CHECK(norm(linear_combination({{1.0, g4}, {-1.0, expect4}})) < 1e-12 * norm(expect4));
  auto g2 = product_kernel(f, 2);
  auto expect2 = symmetrize(linear_combination({{4.0, contract(f, f, 1, 1)}, {2.0, contract(f, f, 2, 0)}}));
  CHECK(norm(linear_combination({{1.0, g2}, {-1.0, expect2}})) < 1e-12 * norm(expect2));
  CHECK(close_rel(product_kernel(f, 0).scalar_value(), 2 * norm2(f), 1e-14));
  CHECK_THROWS(product_kernel(f, 5));
}

TEST_CASE("c_q constants") {
  CHECK(c_q_constant(2) == 1.0);
  CHECK(c_q_constant(4) == doctest::Approx(1.0 / 18).epsilon(1e-15));
  CHECK(c_q_constant(6) == doctest::Approx(1.0 / 600).epsilon(1e-15));
  CHECK_THROWS(c_q_constant(3));
}

TEST_CASE("middle contraction defect examples") {
  auto s = make_uniform_interval(-1.0, 1.0, 1.0);
  CHECK(middle_contraction_defect(sign_kernel(s)) < 1e-14);
  CHECK(middle_contraction_defect(sign_kernel(s, 2.0)) == doctest::Approx(2.0).epsilon(1e-13));
  CHECK(middle_contraction_defect(Kernel::zero(s, 2)) == 0.0);
  CHECK_THROWS(middle_contraction_defect(Kernel::zero(s, 3)));
}

TEST_CASE("contraction norms agree with the brute-force oracle and the dense path") {
  std::mt19937_64 rng(7);
  auto s = random_grid(3, 1.7, rng);
  for (int q = 2; q <= 3; ++q) {
    auto f = random_separable(s, q, 3, rng);
    auto fd = to_dense(f);
    auto fn = [&](const std::vector<std::size_t>& idx) { return eval_kernel_nodes(f, idx); };
    for (int r = 0; r <= q; ++r)
      for (int l = 0; l <= r; ++l) {
        const double sep = norm2(contract(f, f, r, l));
        const double den = norm2(contract(fd, fd, r, l));
        const double ora = oracle_contraction_norm2(fn, s.weights(), s.intensity(), q, r, l);
        CHECK(close_rel(sep, den, 1e-8));
        CHECK(close_rel(sep, ora, 1e-10));
      }
  }
}

TEST_CASE("identity 4! |f ~*_0^0 f|^2 = 2 (2|f|^2)^2 + 16 |f *_1^1 f|^2") {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 10; ++trial) {
    auto s = random_grid(5, 1.0 + trial, rng);
    auto f = random_separable(s, 2, 3, rng);
    const double lhs = 24.0 * norm2(symmetrize(contract(f, f, 0, 0)));
    const double nf = norm2(f);
    const double rhs = 2.0 * (2 * nf) * (2 * nf) + 16.0 * norm2(contract(f, f, 1, 1));
    CHECK(close_rel(lhs, rhs, 1e-10));
  }
}

TEST_CASE("|f *_a^0 f| = |f *_q^{q-a} f| and Cauchy-Schwarz for symmetrization") {
  std::mt19937_64 rng(13);
  auto s = random_grid(3, 1.3, rng);
  for (int q : {2, 4}) {
    auto f = random_separable(s, q, 2, rng);
    for (int a = 2; a <= q; ++a) {
      CHECK(close_rel(norm(contract(f, f, a, 0)), norm(contract(f, f, q, q - a)), 1e-10));
    }
    for (int r = 0; r <= q; ++r)
      for (int l = 0; l <= r; ++l) {
        auto c = contract(f, f, r, l);
        if (c.order() > 6) c = to_dense(c);
        CHECK(norm(symmetrize(c)) <= norm(c) * (1 + 1e-12) + 1e-300);
      }
  }
}
