#include "pchaos/contract.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <stdexcept>
#include <unordered_map>

#include "pchaos/combinatorics.hpp"

namespace pchaos {

namespace {

void require_same_measure(const Kernel& a, const Kernel& b, const char* what) {
  if (!a.space().same_measure(b.space()))
    throw std::invalid_argument(std::string(what) + ": kernels live on different measures");
}

std::size_t ipow(std::size_t a, int k) {
  std::size_t r = 1;
  for (int j = 0; j < k; ++j) r *= a;
  return r;
}

// Weights of mu (or mu_n) over all flat multi-indices of length k.
std::vector<double> tuple_weights(const MeasureSpace& s, int k, bool include_intensity) {
  const std::size_t A = s.node_count();
  const double n = include_intensity ? s.intensity() : 1.0;
  std::vector<double> w(1, 1.0);
  for (int j = 0; j < k; ++j) {
    std::vector<double> next(w.size() * A);
    for (std::size_t a = 0; a < w.size(); ++a)
      for (std::size_t b = 0; b < A; ++b) next[a * A + b] = w[a] * n * s.weights()[b];
    w.swap(next);
  }
  return w;
}

double weighted_dot(const Factor& a, const Factor& b, const MeasureSpace& s) {
  const auto& w = s.weights();
  double acc = 0.0;
  for (std::size_t k = 0; k < w.size(); ++k) acc += w[k] * a.values[k] * b.values[k];
  return s.intensity() * acc;
}

class ProductCache {
 public:
  explicit ProductCache(const MeasureSpace& s) : space_(s) {}

  using Key = std::pair<const Factor*, const Factor*>;
  static Key make_key(const FactorPtr& a, const FactorPtr& b) {
    const Factor* x = a.get();
    const Factor* y = b.get();
    return x < y ? Key{x, y} : Key{y, x};
  }

  FactorPtr product(const FactorPtr& a, const FactorPtr& b) {
    const Key key = make_key(a, b);
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
    auto g = std::make_shared<Factor>();
    g->values.resize(a->values.size());
    for (std::size_t k = 0; k < g->values.size(); ++k) g->values[k] = a->values[k] * b->values[k];
    if (a->fn && b->fn) {
      FactorPtr fa = a, fb = b;
      g->fn = [fa, fb](const double* x) { return fa->fn(x) * fb->fn(x); };
    }
    FactorPtr out = g;
    cache_.emplace(key, out);
    if (space_.mode() == Mode::Grid &&
        std::all_of(g->values.begin(), g->values.end(), [](double v) { return v == 0.0; }))
      zeros_.insert(out.get());
    return out;
  }

  // Grid mode only: a product that vanishes at every atom (disjoint supports).
  bool is_zero(const FactorPtr& a) const { return zeros_.count(a.get()) > 0; }

  double gram(const FactorPtr& a, const FactorPtr& b) {
    const Key key = make_key(a, b);
    auto it = grams_.find(key);
    if (it != grams_.end()) return it->second;
    const double v = weighted_dot(*a, *b, space_);
    grams_.emplace(key, v);
    return v;
  }

 private:
  const MeasureSpace& space_;
  std::map<std::pair<const Factor*, const Factor*>, FactorPtr> cache_;
  std::map<std::pair<const Factor*, const Factor*>, double> grams_;
  std::set<const Factor*> zeros_;
};

Kernel contract_separable(const Kernel& f, const Kernel& g, int r, int l) {
  const int q = f.order();
  const int m = 2 * q - r - l;
  ProductCache cache(f.space());
  std::vector<Term> out;
  out.reserve(f.terms().size() * g.terms().size());
  for (const auto& a : f.terms()) {
    for (const auto& b : g.terms()) {
      Term t;
      t.coef = a.coef * b.coef;
      for (int j = 0; j < l; ++j) t.coef *= cache.gram(a.factors[static_cast<std::size_t>(j)], b.factors[static_cast<std::size_t>(j)]);
      if (t.coef == 0.0) continue;
      t.factors.reserve(static_cast<std::size_t>(m));
      bool vanishes = false;
      for (int j = l; j < r; ++j) {
        t.factors.push_back(cache.product(a.factors[static_cast<std::size_t>(j)], b.factors[static_cast<std::size_t>(j)]));
        vanishes = vanishes || cache.is_zero(t.factors.back());
      }
      if (vanishes) continue;
      for (int j = r; j < q; ++j) t.factors.push_back(a.factors[static_cast<std::size_t>(j)]);
      for (int j = r; j < q; ++j) t.factors.push_back(b.factors[static_cast<std::size_t>(j)]);
      out.push_back(std::move(t));
    }
  }
  const bool sym = m <= 1 || (r == q && l == 0);
  return KernelBuilder::separable_raw(f.space(), m, detail::merge_and_prune(std::move(out)), sym);
}

Kernel contract_dense(const Kernel& f, const Kernel& g, int r, int l) {
  const int q = f.order();
  const int m = 2 * q - r - l;
  const auto& s = f.space();
  const std::size_t A = s.node_count();
  const std::size_t nG = ipow(A, r - l), nT = ipow(A, q - r), nZ = ipow(A, l);
  const auto wz = tuple_weights(s, l, true);
  const auto& fv = f.dense_values();
  const auto& gv = g.dense_values();
  std::vector<double> out(ipow(A, m), 0.0);
  for (std::size_t G = 0; G < nG; ++G) {
    for (std::size_t T = 0; T < nT; ++T) {
      for (std::size_t S = 0; S < nT; ++S) {
        double acc = 0.0;
        for (std::size_t Z = 0; Z < nZ; ++Z) {
          const std::size_t base = (Z * nG + G) * nT;
          acc += wz[Z] * fv[base + T] * gv[base + S];
        }
        out[(G * nT + T) * nT + S] = acc;
      }
    }
  }
  const bool sym = m <= 1 || (r == q && l == 0);
  return KernelBuilder::dense_raw(s, m, std::move(out), sym);
}

std::vector<int> digits(std::size_t idx, std::size_t A, int k) {
  std::vector<int> d(static_cast<std::size_t>(k));
  for (int j = k - 1; j >= 0; --j) {
    d[static_cast<std::size_t>(j)] = static_cast<int>(idx % A);
    idx /= A;
  }
  return d;
}

}  // namespace

Kernel to_dense(const Kernel& f) {
  if (f.repr() == Repr::DenseGrid) return f;
  if (f.space().mode() != Mode::Grid) throw std::invalid_argument("to_dense: needs a Grid-mode space");
  const std::size_t A = f.space().node_count();
  const int q = f.order();
  std::vector<double> v(ipow(A, q), 0.0);
  for (const auto& t : f.terms()) {
    std::vector<double> cur(1, t.coef);
    for (int j = 0; j < q; ++j) {
      std::vector<double> next(cur.size() * A);
      const auto& gv = t.factors[static_cast<std::size_t>(j)]->values;
      for (std::size_t a = 0; a < cur.size(); ++a)
        for (std::size_t b = 0; b < A; ++b) next[a * A + b] = cur[a] * gv[b];
      cur.swap(next);
    }
    for (std::size_t k = 0; k < v.size(); ++k) v[k] += cur[k];
  }
  return KernelBuilder::dense_raw(f.space(), q, std::move(v), f.symmetric());
}

Kernel contract(const Kernel& f, const Kernel& g, int r, int l) {
  if (f.order() != g.order()) throw std::invalid_argument("contract: order mismatch");
  const int q = f.order();
  if (l < 0 || r < l || r > q) throw std::invalid_argument("contract: need 0 <= l <= r <= q");
  require_same_measure(f, g, "contract");
  if (!f.symmetric() || !g.symmetric())
    throw std::invalid_argument("contract: inputs must be symmetric (symmetrize first)");
  if (f.repr() == Repr::Separable && g.repr() == Repr::Separable) return contract_separable(f, g, r, l);
  return contract_dense(to_dense(f), to_dense(g), r, l);
}

Kernel symmetrize(const Kernel& f) {
  if (f.symmetric()) return f;
  const int q = f.order();
  if (f.repr() == Repr::Separable)
    return KernelBuilder::separable_raw(f.space(), q, detail::symmetrize_terms(f.terms(), q), true);
  const std::size_t A = f.space().node_count();
  const auto& perms = permutations(q);
  const auto& in = f.dense_values();
  std::vector<double> out(in.size(), 0.0);
  std::vector<std::size_t> pow(static_cast<std::size_t>(q));
  for (int j = 0; j < q; ++j) pow[static_cast<std::size_t>(j)] = ipow(A, q - 1 - j);
  for (std::size_t idx = 0; idx < in.size(); ++idx) {
    const auto d = digits(idx, A, q);
    double acc = 0.0;
    for (const auto& p : perms) {
      std::size_t k = 0;
      for (int j = 0; j < q; ++j) k += static_cast<std::size_t>(d[static_cast<std::size_t>(p[static_cast<std::size_t>(j)])]) * pow[static_cast<std::size_t>(j)];
      acc += in[k];
    }
    out[idx] = acc / static_cast<double>(perms.size());
  }
  return KernelBuilder::dense_raw(f.space(), q, std::move(out), true);
}

double inner(const Kernel& f, const Kernel& g) {
  if (f.order() != g.order()) throw std::invalid_argument("inner: order mismatch");
  require_same_measure(f, g, "inner");
  if (f.repr() == Repr::Separable && g.repr() == Repr::Separable) {
    std::unordered_map<const Factor*, std::size_t> fi, gi;
    std::vector<const Factor*> fl, gl;
    auto index = [](std::unordered_map<const Factor*, std::size_t>& m, std::vector<const Factor*>& l,
                    const Factor* p) {
      auto [it, fresh] = m.emplace(p, l.size());
      if (fresh) l.push_back(p);
      return it->second;
    };
    std::vector<std::vector<std::size_t>> ft, gt;
    for (const auto& t : f.terms()) {
      std::vector<std::size_t> ids;
      for (const auto& p : t.factors) ids.push_back(index(fi, fl, p.get()));
      ft.push_back(std::move(ids));
    }
    for (const auto& t : g.terms()) {
      std::vector<std::size_t> ids;
      for (const auto& p : t.factors) ids.push_back(index(gi, gl, p.get()));
      gt.push_back(std::move(ids));
    }
    std::vector<double> gram(fl.size() * gl.size());
    for (std::size_t a = 0; a < fl.size(); ++a)
      for (std::size_t b = 0; b < gl.size(); ++b) gram[a * gl.size() + b] = weighted_dot(*fl[a], *gl[b], f.space());
    double acc = 0.0;
    for (std::size_t s = 0; s < ft.size(); ++s) {
      double row = 0.0;
      for (std::size_t t = 0; t < gt.size(); ++t) {
        double v = g.terms()[t].coef;
        for (std::size_t j = 0; j < ft[s].size(); ++j) v *= gram[ft[s][j] * gl.size() + gt[t][j]];
        row += v;
      }
      acc += f.terms()[s].coef * row;
    }
    return acc;
  }
  const Kernel fd = to_dense(f), gd = to_dense(g);
  const auto w = tuple_weights(f.space(), f.order(), true);
  double acc = 0.0;
  for (std::size_t k = 0; k < w.size(); ++k) acc += w[k] * fd.dense_values()[k] * gd.dense_values()[k];
  return acc;
}

double norm2(const Kernel& f) { return std::max(0.0, inner(f, f)); }
double norm(const Kernel& f) { return std::sqrt(norm2(f)); }

Kernel add(const Kernel& a, const Kernel& b) { return linear_combination({{1.0, a}, {1.0, b}}); }

Kernel linear_combination(const std::vector<std::pair<double, Kernel>>& parts) {
  if (parts.empty()) throw std::invalid_argument("linear_combination: empty");
  const Kernel& first = parts.front().second;
  bool any_dense = false, all_sym = true;
  for (const auto& [c, k] : parts) {
    if (k.order() != first.order()) throw std::invalid_argument("linear_combination: order mismatch");
    require_same_measure(first, k, "linear_combination");
    any_dense = any_dense || k.repr() == Repr::DenseGrid;
    all_sym = all_sym && k.symmetric();
  }
  if (!any_dense) {
    std::vector<Term> terms;
    for (const auto& [c, k] : parts)
      for (const auto& t : k.terms()) terms.push_back(Term{c * t.coef, t.factors});
    return KernelBuilder::separable_raw(first.space(), first.order(), detail::merge_and_prune(std::move(terms)), all_sym);
  }
  std::vector<double> v;
  for (const auto& [c, k] : parts) {
    const Kernel d = to_dense(k);
    if (v.empty()) v.assign(d.dense_values().size(), 0.0);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] += c * d.dense_values()[i];
  }
  return KernelBuilder::dense_raw(first.space(), first.order(), std::move(v), all_sym);
}

Kernel product_kernel(const Kernel& f, int p) {
  const int q = f.order();
  if (p < 0 || p > 2 * q) throw std::invalid_argument("product_kernel: p out of range");
  if (p == 0) return Kernel::scalar(f.space(), factorial(q) * norm2(f));
  std::vector<std::pair<double, Kernel>> parts;
  for (int r = 0; r <= q; ++r) {
    for (int l = 0; l <= r; ++l) {
      if (2 * q - r - l != p) continue;
      const double c = factorial(r) * binom(q, r) * binom(q, r) * binom(r, l);
      parts.emplace_back(c, symmetrize(contract(f, f, r, l)));
    }
  }
  Kernel out = linear_combination(parts);
  return symmetrize(out);
}

double c_q_constant(int q) {
  if (q < 2 || q % 2 != 0) throw std::invalid_argument("c_q_constant: q must be even and >= 2");
  const double b = binom(q, q / 2);
  return 4.0 / (factorial(q / 2) * b * b);
}

double middle_contraction_defect(const Kernel& f) {
  const int q = f.order();
  const double cq = c_q_constant(q);
  const Kernel mid = symmetrize(contract(f, f, q / 2, q / 2));
  return norm(linear_combination({{1.0, mid}, {-cq, f}}));
}

Kernel integrate_last(const Kernel& f, int count, bool include_intensity) {
  const int q = f.order();
  if (count < 0 || count > q) throw std::invalid_argument("integrate_last: count out of range");
  if (count == 0) return f;
  const auto& s = f.space();
  const double n = include_intensity ? s.intensity() : 1.0;
  if (f.repr() == Repr::Separable) {
    std::map<const Factor*, double> cache;
    std::vector<Term> out;
    for (const auto& t : f.terms()) {
      Term u;
      u.coef = t.coef;
      for (int j = q - count; j < q; ++j) {
        const Factor* g = t.factors[static_cast<std::size_t>(j)].get();
        auto it = cache.find(g);
        if (it == cache.end()) it = cache.emplace(g, n * integrate_factor(*g, s) / s.intensity()).first;
        u.coef *= it->second;
      }
      u.factors.assign(t.factors.begin(), t.factors.begin() + (q - count));
      out.push_back(std::move(u));
    }
    return KernelBuilder::separable_raw(s, q - count, detail::merge_and_prune(std::move(out)), f.symmetric());
  }
  const std::size_t A = s.node_count();
  const std::size_t nS = ipow(A, count), nP = ipow(A, q - count);
  const auto w = tuple_weights(s, count, include_intensity);
  std::vector<double> out(nP, 0.0);
  for (std::size_t P = 0; P < nP; ++P) {
    double acc = 0.0;
    for (std::size_t S = 0; S < nS; ++S) acc += w[S] * f.dense_values()[P * nS + S];
    out[P] = acc;
  }
  return KernelBuilder::dense_raw(s, q - count, std::move(out), f.symmetric());
}

Kernel section_at_node(const Kernel& f, std::size_t node) {
  const int q = f.order();
  if (q < 1) throw std::invalid_argument("section: order must be positive");
  if (!f.symmetric()) throw std::invalid_argument("section: kernel must be symmetric");
  const auto& s = f.space();
  if (f.repr() == Repr::Separable) {
    std::vector<Term> out;
    for (const auto& t : f.terms()) {
      Term u{t.coef * t.factors[0]->values[node], {t.factors.begin() + 1, t.factors.end()}};
      out.push_back(std::move(u));
    }
    return KernelBuilder::separable_raw(s, q - 1, detail::merge_and_prune(std::move(out)), true);
  }
  const std::size_t nR = ipow(s.node_count(), q - 1);
  std::vector<double> out(f.dense_values().begin() + static_cast<std::ptrdiff_t>(node * nR),
                          f.dense_values().begin() + static_cast<std::ptrdiff_t>((node + 1) * nR));
  return KernelBuilder::dense_raw(s, q - 1, std::move(out), true);
}

Kernel section(const Kernel& f, const double* z) {
  const int q = f.order();
  if (q < 1) throw std::invalid_argument("section: order must be positive");
  if (!f.symmetric()) throw std::invalid_argument("section: kernel must be symmetric");
  const auto& s = f.space();
  if (f.repr() == Repr::Separable) {
    std::map<const Factor*, double> cache;
    std::vector<Term> out;
    for (const auto& t : f.terms()) {
      const Factor* g = t.factors[0].get();
      auto it = cache.find(g);
      if (it == cache.end()) it = cache.emplace(g, eval_factor(*g, s, z)).first;
      out.push_back(Term{t.coef * it->second, {t.factors.begin() + 1, t.factors.end()}});
    }
    return KernelBuilder::separable_raw(s, q - 1, detail::merge_and_prune(std::move(out)), true);
  }
  auto k = s.find_atom(z);
  if (!k) throw std::invalid_argument("section: DenseGrid kernel at a non-atom point");
  return section_at_node(f, *k);
}

double chaos_norm2(const ChaosExpansion& F) {
  double s = F.constant * F.constant;
  for (const auto& [q, k] : F.components) s += factorial(q) * norm2(k);
  return s;
}

}  // namespace pchaos
