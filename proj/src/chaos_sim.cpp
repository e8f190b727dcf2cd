#include "pchaos/chaos_sim.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <stdexcept>
#include <thread>
#include <unordered_map>

#include "pchaos/combinatorics.hpp"
#include "pchaos/contract.hpp"

namespace pchaos {

std::vector<Point> PoissonSample::points() const {
  std::vector<Point> out;
  out.reserve(static_cast<std::size_t>(count));
  const auto d = static_cast<std::size_t>(space.dim());
  if (space.mode() == Mode::Grid) {
    for (std::size_t a = 0; a < counts.size(); ++a)
      for (long c = 0; c < counts[a]; ++c) out.emplace_back(space.node(a), space.node(a) + d);
  } else {
    for (long i = 0; i < count; ++i)
      out.emplace_back(coords.begin() + static_cast<std::ptrdiff_t>(static_cast<std::size_t>(i) * d),
                       coords.begin() + static_cast<std::ptrdiff_t>(static_cast<std::size_t>(i + 1) * d));
  }
  return out;
}

namespace {

long count_duplicates(const std::vector<double>& coords, int dim) {
  const std::size_t d = static_cast<std::size_t>(dim);
  const std::size_t n = d == 0 ? 0 : coords.size() / d;
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  auto less = [&](std::size_t a, std::size_t b) {
    return std::lexicographical_compare(coords.begin() + static_cast<std::ptrdiff_t>(a * d),
                                        coords.begin() + static_cast<std::ptrdiff_t>((a + 1) * d),
                                        coords.begin() + static_cast<std::ptrdiff_t>(b * d),
                                        coords.begin() + static_cast<std::ptrdiff_t>((b + 1) * d));
  };
  std::sort(idx.begin(), idx.end(), less);
  long dup = 0;
  for (std::size_t i = 1; i < n; ++i)
    if (!less(idx[i - 1], idx[i])) ++dup;
  return dup;
}

PoissonSample continuum_from(const MeasureSpace& space, long count, Rng& rng) {
  PoissonSample s;
  s.space = space;
  s.count = count;
  const std::size_t d = static_cast<std::size_t>(space.dim());
  s.coords.resize(static_cast<std::size_t>(count) * d);
  for (long i = 0; i < count; ++i) space.draw(rng, s.coords.data() + static_cast<std::size_t>(i) * d);
  s.duplicate_points = count_duplicates(s.coords, space.dim());
  return s;
}

}  // namespace

PoissonSample sample(const MeasureSpace& space, Rng& rng) {
  if (!space.valid()) throw std::invalid_argument("sample: invalid space");
  if (space.mode() == Mode::Grid) {
    PoissonSample s;
    s.space = space;
    s.counts.assign(space.node_count(), 0);
    for (std::size_t a = 0; a < space.node_count(); ++a) {
      const double mean = space.intensity() * space.weights()[a];
      if (mean <= 0.0) continue;
      std::poisson_distribution<long> pd(mean);
      s.counts[a] = pd(rng);
      s.count += s.counts[a];
    }
    return s;
  }
  std::poisson_distribution<long> pd(space.intensity() * space.base_mass());
  return continuum_from(space, pd(rng), rng);
}

PoissonSample sample_sorted_interval(const MeasureSpace& space, double a, double b, Rng& rng) {
  if (space.mode() != Mode::Continuum || space.dim() != 1 || !(b > a))
    throw std::invalid_argument("sample_sorted_interval: one-dimensional continuum space on (a, b) expected");
  PoissonSample s;
  s.space = space;
  const double rate = space.intensity() * space.base_mass() / (b - a);
  if (rate <= 0.0) return s;
  std::exponential_distribution<double> gap(rate);
  s.coords.reserve(static_cast<std::size_t>(rate * (b - a) * 1.1 + 16));
  for (double x = a + gap(rng); x < b; x += gap(rng)) s.coords.push_back(x);
  s.count = static_cast<long>(s.coords.size());
  for (std::size_t i = 1; i < s.coords.size(); ++i)
    if (s.coords[i] == s.coords[i - 1]) ++s.duplicate_points;
  return s;
}

PoissonSample sample_fixed(const MeasureSpace& space, long count, Rng& rng) {
  if (count < 0) throw std::invalid_argument("sample_fixed: negative count");
  if (space.mode() == Mode::Grid) {
    PoissonSample s;
    s.space = space;
    s.counts.assign(space.node_count(), 0);
    for (long i = 0; i < count; ++i) ++s.counts[space.draw_atom(rng)];
    s.count = count;
    return s;
  }
  return continuum_from(space, count, rng);
}

PoissonSample make_sample(const MeasureSpace& space, const std::vector<Point>& points) {
  PoissonSample s;
  s.space = space;
  for (const auto& p : points)
    if (static_cast<int>(p.size()) != space.dim()) throw std::invalid_argument("make_sample: wrong point dimension");
  if (space.mode() == Mode::Grid) {
    s.counts.assign(space.node_count(), 0);
    for (const auto& p : points) {
      auto k = space.find_atom(p.data());
      if (!k) throw std::invalid_argument("make_sample: point is not an atom of the grid");
      ++s.counts[*k];
    }
  } else {
    for (const auto& p : points) s.coords.insert(s.coords.end(), p.begin(), p.end());
    s.duplicate_points = count_duplicates(s.coords, space.dim());
  }
  s.count = static_cast<long>(points.size());
  return s;
}

PoissonSample add_point(const PoissonSample& s, const double* z) {
  PoissonSample out = s;
  if (s.space.mode() == Mode::Grid) {
    auto k = s.space.find_atom(z);
    if (!k) throw std::invalid_argument("add_point: point is not an atom of the grid");
    ++out.counts[*k];
  } else {
    out.coords.insert(out.coords.end(), z, z + s.space.dim());
    out.duplicate_points = count_duplicates(out.coords, s.space.dim());
  }
  ++out.count;
  return out;
}

namespace {

// Terms regrouped by factor multiset: sums over ordered tuples and multiple
// integrals do not see the order of the factors.
std::vector<Term> canonical_terms(const Kernel& f) {
  std::map<std::vector<const Factor*>, std::size_t> index;
  std::vector<Term> out;
  for (const auto& t : f.terms()) {
    Term u = t;
    std::sort(u.factors.begin(), u.factors.end(),
              factor_before);
    std::vector<const Factor*> key;
    for (const auto& g : u.factors) key.push_back(g.get());
    auto [it, fresh] = index.emplace(key, out.size());
    if (fresh)
      out.push_back(std::move(u));
    else
      out[it->second].coef += u.coef;
  }
  return out;
}

// P[mask] = sum over points (with multiplicity) of prod_{j in mask} g_j(x).
std::vector<double> block_sums(const std::vector<FactorPtr>& g, const PoissonSample& s) {
  const std::size_t q = g.size();
  const std::size_t M = std::size_t{1} << q;
  std::vector<double> P(M, 0.0), prod(M, 1.0), v(q);
  auto accumulate = [&](double mult) {
    for (std::size_t mask = 1; mask < M; ++mask) {
      const std::size_t low = static_cast<std::size_t>(__builtin_ctzll(mask));
      prod[mask] = prod[mask & (mask - 1)] * v[low];
      P[mask] += mult * prod[mask];
    }
  };
  const auto& space = s.space;
  if (space.mode() == Mode::Grid) {
    for (std::size_t a = 0; a < s.counts.size(); ++a) {
      if (s.counts[a] == 0) continue;
      for (std::size_t j = 0; j < q; ++j) v[j] = g[j]->values[a];
      accumulate(static_cast<double>(s.counts[a]));
    }
  } else {
    const std::size_t d = static_cast<std::size_t>(space.dim());
    for (long i = 0; i < s.count; ++i) {
      const double* x = s.coords.data() + static_cast<std::size_t>(i) * d;
      for (std::size_t j = 0; j < q; ++j) {
        if (!g[j]->fn) throw std::invalid_argument("Continuum sample needs closed-form factors");
        v[j] = g[j]->fn(x);
      }
      accumulate(1.0);
    }
  }
  return P;
}

// Sum over set partitions of prod over blocks. Blocks of size b >= 2 carry the
// Moebius weight (-1)^(b-1) (b-1)!; singletons are compensated by `mean`
// (zero for a U-statistic).
double combine_blocks(const std::vector<double>& P, const std::vector<double>& mean, int q) {
  double total = 0.0;
  for (const auto& part : set_partitions(q)) {
    double v = 1.0;
    for (const auto& block : part) {
      std::size_t mask = 0;
      for (int j : block) mask |= std::size_t{1} << j;
      const int b = static_cast<int>(block.size());
      if (b == 1)
        v *= P[mask] - mean[static_cast<std::size_t>(block[0])];
      else
        v *= ((b - 1) % 2 ? -1.0 : 1.0) * factorial(b - 1) * P[mask];
      if (v == 0.0) break;
    }
    total += v;
  }
  return total;
}

double partition_sum(const std::vector<FactorPtr>& g, const PoissonSample& s, bool compensate) {
  const int q = static_cast<int>(g.size());
  if (q == 0) return 1.0;
  const auto P = block_sums(g, s);
  std::vector<double> mean(g.size(), 0.0);
  if (compensate)
    for (std::size_t j = 0; j < g.size(); ++j) mean[j] = integrate_factor(*g[j], s.space);
  return combine_blocks(P, mean, q);
}

// Sum of a dense kernel over ordered distinct tuples: each atom tuple is weighted
// by the falling factorials of the atom counts it uses.
double dense_ustat(const Kernel& f, const PoissonSample& s) {
  const int k = f.order();
  if (k == 0) return f.scalar_value();
  const std::size_t A = s.space.node_count();
  std::vector<long> used(A, 0);
  const auto& vals = f.dense_values();
  double total = 0.0;
  std::vector<std::size_t> active;
  for (std::size_t a = 0; a < A; ++a)
    if (s.counts[a] > 0) active.push_back(a);
  auto rec = [&](auto&& self, int depth, std::size_t idx, double weight) -> void {
    if (depth == k) {
      total += weight * vals[idx];
      return;
    }
    for (std::size_t a : active) {
      const long avail = s.counts[a] - used[a];
      if (avail <= 0) continue;
      ++used[a];
      self(self, depth + 1, idx * A + a, weight * static_cast<double>(avail));
      --used[a];
    }
  };
  rec(rec, 0, 0, 1.0);
  return total;
}

void require_same_nodes(const Kernel& f, const PoissonSample& s, const char* what) {
  if (!f.space().same_nodes(s.space)) throw std::invalid_argument(std::string(what) + ": kernel and sample spaces differ");
}

}  // namespace

double ustat_eval(const Kernel& h, const PoissonSample& s) {
  require_same_nodes(h, s, "ustat_eval");
  if (h.order() > s.count) return 0.0;
  if (h.repr() == Repr::DenseGrid) return dense_ustat(h, s);
  double total = 0.0;
  for (const auto& t : canonical_terms(h)) total += t.coef * partition_sum(t.factors, s, false);
  return total;
}

Kernel hoeffding_projection(const Kernel& h, int i) {
  const int k = h.order();
  if (i < 1 || i > k) throw std::invalid_argument("hoeffding_projection: need 1 <= i <= k");
  return integrate_last(symmetrize(h), k - i, false).scaled(binom(k, i));
}

double degeneracy_defect(const Kernel& h) {
  if (h.order() != 2) throw std::invalid_argument("degeneracy_defect: order-2 kernel expected");
  const Kernel h1 = hoeffding_projection(h, 1);
  return norm(h1.on(h.space().with_intensity(1.0)));
}

int hoeffding_rank(const Kernel& h, double tol) {
  const int k = h.order();
  if (k < 1) throw std::invalid_argument("hoeffding_rank: order must be positive");
  const MeasureSpace base = h.space().with_intensity(1.0);
  for (int i = 1; i < k; ++i)
    if (norm(hoeffding_projection(h, i).on(base)) > tol) return i;
  return k;
}

double multiple_integral_eval(const Kernel& f, const PoissonSample& s) {
  require_same_nodes(f, s, "multiple_integral_eval");
  const int q = f.order();
  if (q > kMaxOrder) throw std::invalid_argument("multiple_integral_eval: order above cap");
  if (q == 0) return f.scalar_value();
  if (f.repr() == Repr::DenseGrid) {
    // I_q(f) = sum_i (-1)^(q-i) C(q,i) U_i(f integrated over q-i arguments against mu_n).
    const Kernel fs = symmetrize(f).on(s.space);
    double total = 0.0;
    for (int i = 0; i <= q; ++i) {
      const Kernel part = integrate_last(fs, q - i, true);
      const double u = i > s.count ? 0.0 : (i == 0 ? part.scalar_value() : dense_ustat(part, s));
      total += ((q - i) % 2 ? -1.0 : 1.0) * binom(q, i) * u;
    }
    return total;
  }
  const Kernel fs = f.on(s.space);
  double total = 0.0;
  for (const auto& t : canonical_terms(fs)) total += t.coef * partition_sum(t.factors, s, true);
  return total;
}

CompiledKernel::CompiledKernel(const Kernel& f) : q_(f.order()), space_(f.space()) {
  if (f.repr() != Repr::Separable || f.space().mode() != Mode::Grid)
    throw std::invalid_argument("CompiledKernel: separable Grid-mode kernel expected");
  if (q_ > kMaxOrder) throw std::invalid_argument("CompiledKernel: order above cap");
  for (const auto& t : canonical_terms(f)) {
    if (t.coef == 0.0) continue;
    Compiled c;
    c.coef = t.coef;
    c.factors = t.factors;
    for (std::size_t a = 0; a < space_.node_count(); ++a)
      for (const auto& g : t.factors)
        if (g->values[a] != 0.0) {
          c.support.push_back(a);
          break;
        }
    for (const auto& g : t.factors) c.means.push_back(integrate_factor(*g, space_));
    terms_.push_back(std::move(c));
  }
}

double CompiledKernel::eval(const PoissonSample& s, bool compensate) const {
  if (!space_.same_measure(s.space) && compensate)
    throw std::invalid_argument("CompiledKernel: sample drawn under a different measure");
  if (!space_.same_nodes(s.space)) throw std::invalid_argument("CompiledKernel: sample space differs");
  if (q_ == 0) return 0.0;
  const std::size_t q = static_cast<std::size_t>(q_);
  const std::size_t M = std::size_t{1} << q;
  std::vector<double> P(M), prod(M, 1.0), zero(q, 0.0);
  double total = 0.0;
  for (const auto& t : terms_) {
    std::fill(P.begin(), P.end(), 0.0);
    for (std::size_t a : t.support) {
      const long c = s.counts[a];
      if (c == 0) continue;
      for (std::size_t mask = 1; mask < M; ++mask) {
        const std::size_t low = static_cast<std::size_t>(__builtin_ctzll(mask));
        prod[mask] = prod[mask & (mask - 1)] * t.factors[low]->values[a];
        P[mask] += static_cast<double>(c) * prod[mask];
      }
    }
    total += t.coef * combine_blocks(P, compensate ? t.means : zero, q_);
  }
  return total;
}

double CompiledKernel::integral(const PoissonSample& s) const { return eval(s, true); }

double CompiledKernel::ustat(const PoissonSample& s) const {
  if (q_ > s.count) return 0.0;
  return eval(s, false);
}

double evaluate_expansion(const ChaosExpansion& F, const PoissonSample& s) {
  double v = F.constant;
  for (const auto& [q, k] : F.components) v += multiple_integral_eval(k, s);
  return v;
}

double derivative_eval(const Kernel& f, const PoissonSample& s, const double* z) {
  const int q = f.order();
  if (q == 0) return 0.0;
  return q * multiple_integral_eval(section(symmetrize(f), z), s);
}

long edge_count_1d(std::vector<double> xs, double radius) {
  std::sort(xs.begin(), xs.end());
  long total = 0;
  std::size_t lo = 0, hi = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    // Pairs (i, j), j > i, with 0 < x_j - x_i < radius.
    if (lo < i + 1) lo = i + 1;
    while (lo < xs.size() && xs[lo] - xs[i] <= 0.0) ++lo;
    if (hi < lo) hi = lo;
    while (hi < xs.size() && xs[hi] - xs[i] < radius) ++hi;
    total += static_cast<long>(hi - lo);
  }
  return total;
}

namespace {

std::vector<std::vector<std::size_t>> disk_adjacency(const std::vector<Point>& pts, double r) {
  const std::size_t n = pts.size();
  std::vector<std::vector<std::size_t>> adj(n);
  if (n == 0) return adj;
  const std::size_t d = pts[0].size();
  std::map<std::vector<long>, std::vector<std::size_t>> cells;
  auto cell_of = [&](const Point& p) {
    std::vector<long> c(d);
    for (std::size_t j = 0; j < d; ++j) c[j] = static_cast<long>(std::floor(p[j] / r));
    return c;
  };
  for (std::size_t i = 0; i < n; ++i) cells[cell_of(pts[i])].push_back(i);
  auto dist2 = [&](std::size_t a, std::size_t b) {
    double s = 0;
    for (std::size_t j = 0; j < d; ++j) s += (pts[a][j] - pts[b][j]) * (pts[a][j] - pts[b][j]);
    return s;
  };
  for (std::size_t i = 0; i < n; ++i) {
    const auto c = cell_of(pts[i]);
    std::vector<long> off(d, -1);
    while (true) {
      std::vector<long> nb(d);
      for (std::size_t j = 0; j < d; ++j) nb[j] = c[j] + off[j];
      auto it = cells.find(nb);
      if (it != cells.end())
        for (std::size_t k : it->second) {
          if (k == i) continue;
          const double d2 = dist2(i, k);
          if (d2 > 0.0 && std::sqrt(d2) < r) adj[i].push_back(k);
        }
      std::size_t j = 0;
      while (j < d && off[j] == 1) off[j++] = -1;
      if (j == d) break;
      ++off[j];
    }
    std::sort(adj[i].begin(), adj[i].end());
  }
  return adj;
}

bool adjacent(const std::vector<std::vector<std::size_t>>& adj, std::size_t a, std::size_t b) {
  return std::binary_search(adj[a].begin(), adj[a].end(), b);
}

}  // namespace

long disk_graph_stat(const PoissonSample& s, double radius, Pattern pattern, int path_vertices) {
  if (!(radius > 0.0)) throw std::invalid_argument("disk_graph_stat: radius must be positive");
  const auto pts = s.points();
  if (pattern == Pattern::Edge && s.space.dim() == 1) {
    std::vector<double> xs;
    xs.reserve(pts.size());
    for (const auto& p : pts) xs.push_back(p[0]);
    return edge_count_1d(std::move(xs), radius);
  }
  const auto adj = disk_adjacency(pts, radius);
  const std::size_t n = pts.size();
  long total = 0;
  switch (pattern) {
    case Pattern::Edge:
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k : adj[i]) total += k > i;
      return total;
    case Pattern::Triangle:
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j : adj[i]) {
          if (j <= i) continue;
          for (std::size_t k : adj[j])
            if (k > j && adjacent(adj, i, k)) ++total;
        }
      return total;
    case Pattern::Path: {
      if (path_vertices < 2) throw std::invalid_argument("disk_graph_stat: path needs >= 2 vertices");
      std::vector<std::size_t> path;
      std::vector<char> on(n, 0);
      auto rec = [&](auto&& self) -> void {
        if (static_cast<int>(path.size()) == path_vertices) {
          ++total;
          return;
        }
        const std::size_t last = path.back();
        for (std::size_t k : adj[last]) {
          if (on[k]) continue;
          bool chord = false;
          for (std::size_t t = 0; t + 1 < path.size() && !chord; ++t) chord = adjacent(adj, path[t], k);
          if (chord) continue;
          path.push_back(k);
          on[k] = 1;
          self(self);
          on[k] = 0;
          path.pop_back();
        }
      };
      for (std::size_t i = 0; i < n; ++i) {
        path.assign(1, i);
        on[i] = 1;
        rec(rec);
        on[i] = 0;
      }
      return total / 2;  // each path is found from both ends
    }
  }
  return total;
}

double Target::cdf(double x) const {
  switch (kind) {
    case Kind::Gamma: return pchaos::cdf(GammaTarget{nu}, x);
    case Kind::Normal: return normal_cdf(x);
    case Kind::Poisson: return poisson_cdf(static_cast<long>(std::floor(x)), lambda);
  }
  return 0.0;
}

double Target::expect(const std::function<double(double)>& h) const {
  switch (kind) {
    case Kind::Gamma: return expect_gamma(GammaTarget{nu}, h);
    case Kind::Normal: return expect_normal(h);
    case Kind::Poisson: return expect_poisson(lambda, h);
  }
  return 0.0;
}

std::string Target::label() const {
  switch (kind) {
    case Kind::Gamma: return "gamma";
    case Kind::Normal: return "normal";
    case Kind::Poisson: return "poisson";
  }
  return "";
}

double kolmogorov_distance(std::vector<double> x, const Target& target) {
  if (x.empty()) throw std::invalid_argument("kolmogorov_distance: no samples");
  std::sort(x.begin(), x.end());
  const double N = static_cast<double>(x.size());
  double best = 0.0;
  if (target.kind == Target::Kind::Poisson) {
    // Both laws are right-continuous step functions; compare at half-integers.
    const long lo = std::min(0L, static_cast<long>(std::floor(x.front()))) - 1;
    const long hi = std::max(static_cast<long>(std::ceil(x.back())),
                             static_cast<long>(target.lambda + 40.0 * std::sqrt(target.lambda + 1.0) + 40.0));
    for (long k = lo; k <= hi; ++k) {
      const double t = static_cast<double>(k) + 0.5;
      const double emp = static_cast<double>(std::upper_bound(x.begin(), x.end(), t) - x.begin()) / N;
      best = std::max(best, std::abs(emp - target.cdf(t)));
    }
    return best;
  }
  std::size_t i = 0;
  while (i < x.size()) {
    std::size_t j = i;
    while (j < x.size() && x[j] == x[i]) ++j;
    const double F = target.cdf(x[i]);
    best = std::max({best, std::abs(F - static_cast<double>(i) / N), std::abs(static_cast<double>(j) / N - F)});
    i = j;
  }
  return best;
}

DistanceRecord empirical_distances(const std::vector<double>& samples, const Target& target) {
  if (samples.empty()) throw std::invalid_argument("empirical_distances: no samples");
  DistanceRecord r;
  r.kolmogorov = kolmogorov_distance(samples, target);
  for (const auto& h : h3_dictionary()) {
    double m = 0.0;
    for (double x : samples) m += h.value(x);
    m /= static_cast<double>(samples.size());
    r.d3_lower = std::max(r.d3_lower, std::abs(m - target.expect(h.value)));
  }
  MomentAccumulator acc;
  for (double x : samples) acc.add(x);
  r.mean = acc.raw(1);
  r.variance = acc.variance();
  r.third = acc.raw(3);
  r.fourth = acc.raw(4);
  return r;
}

void MomentAccumulator::add(double x) {
  ++n;
  double p = 1.0;
  for (int k = 1; k <= 8; ++k) {
    p *= x;
    s[k] += p;
  }
}

void MomentAccumulator::merge(const MomentAccumulator& o) {
  n += o.n;
  for (int k = 1; k <= 8; ++k) s[k] += o.s[k];
}

double MomentAccumulator::raw(int k) const {
  if (k < 0 || k > 8) throw std::invalid_argument("MomentAccumulator: order out of range");
  if (k == 0) return 1.0;
  return n > 0 ? s[k] / static_cast<double>(n) : 0.0;
}

double MomentAccumulator::raw_se(int k) const {
  if (k < 1 || k > 4) throw std::invalid_argument("MomentAccumulator: standard errors for orders 1..4");
  if (n < 2) return 0.0;
  const double v = raw(2 * k) - raw(k) * raw(k);
  return std::sqrt(std::max(0.0, v) / static_cast<double>(n));
}

double MomentAccumulator::variance() const {
  if (n < 2) return 0.0;
  const double N = static_cast<double>(n);
  return std::max(0.0, (s[2] - s[1] * s[1] / N) / (N - 1.0));
}

double product_gap(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.empty()) throw std::invalid_argument("product_gap: need equal nonempty columns");
  const std::size_t N = a.size();
  auto quantiles = [N](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    std::vector<double> q;
    for (int k = 1; k <= 5; ++k) q.push_back(v[std::min(N - 1, static_cast<std::size_t>(k * N / 6))]);
    return q;
  };
  const auto qa = quantiles(a), qb = quantiles(b);
  double best = 0.0;
  for (double ta : qa)
    for (double tb : qb) {
      std::size_t ca = 0, cb = 0, cj = 0;
      for (std::size_t i = 0; i < N; ++i) {
        const bool x = a[i] <= ta, y = b[i] <= tb;
        ca += x;
        cb += y;
        cj += x && y;
      }
      const double n = static_cast<double>(N);
      best = std::max(best, std::abs(cj / n - (ca / n) * (cb / n)));
    }
  return best;
}

Correlation correlation(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.size() < 3) throw std::invalid_argument("correlation: need equal columns of length >= 3");
  const double N = static_cast<double>(a.size());
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= N;
  mb /= N;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  Correlation c;
  c.value = (saa > 0 && sbb > 0) ? sab / std::sqrt(saa * sbb) : 0.0;
  c.se = 1.0 / std::sqrt(N);
  return c;
}

void parallel_replications(long reps, int workers, std::uint64_t seed, const std::string& tag,
                           const std::function<void(long, Rng&)>& fn) {
  if (reps < 0) throw std::invalid_argument("parallel_replications: negative count");
  if (workers < 1) throw std::invalid_argument("parallel_replications: need at least one worker");
  auto block = [&](int w) {
    Rng rng = derive_stream(seed, tag, static_cast<std::uint64_t>(w));
    const long lo = reps * w / workers, hi = reps * (w + 1) / workers;
    for (long r = lo; r < hi; ++r) fn(r, rng);
  };
  if (workers == 1) {
    block(0);
    return;
  }
  std::vector<std::thread> pool;
  std::exception_ptr err;
  std::mutex m;
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&, w] {
      try {
        block(w);
      } catch (...) {
        std::lock_guard<std::mutex> lock(m);
        if (!err) err = std::current_exception();
      }
    });
  for (auto& t : pool) t.join();
  if (err) std::rethrow_exception(err);
}

namespace {

static_assert(std::endian::native == std::endian::little, "PCHS files are written in host byte order");

template <class T>
void put(std::ofstream& out, T v) {
  static_assert(std::is_trivially_copyable_v<T>);
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::ifstream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw std::runtime_error("read_pchs: truncated file");
  return v;
}

}  // namespace

void write_pchs(const std::string& path, const std::vector<std::string>& names,
                const std::vector<std::vector<double>>& columns) {
  if (names.size() != columns.size()) throw std::invalid_argument("write_pchs: names/columns mismatch");
  const std::uint64_t rows = columns.empty() ? 0 : columns[0].size();
  for (const auto& c : columns)
    if (c.size() != rows) throw std::invalid_argument("write_pchs: ragged columns");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_pchs: cannot open " + path);
  out.write("PCHS", 4);
  put<std::uint32_t>(out, 1);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(names.size()));
  put<std::uint64_t>(out, rows);
  for (const auto& n : names) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(n.size()));
    out.write(n.data(), static_cast<std::streamsize>(n.size()));
  }
  for (const auto& c : columns) out.write(reinterpret_cast<const char*>(c.data()), static_cast<std::streamsize>(rows * 8));
  if (!out) throw std::runtime_error("write_pchs: write failed for " + path);
}

std::vector<std::vector<double>> read_pchs(const std::string& path, std::vector<std::string>* names) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("read_pchs: cannot open " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "PCHS", 4) != 0) throw std::runtime_error("read_pchs: bad magic");
  if (get<std::uint32_t>(in) != 1) throw std::runtime_error("read_pchs: unsupported version");
  const auto ncol = get<std::uint32_t>(in);
  const auto rows = get<std::uint64_t>(in);
  std::vector<std::string> nm;
  for (std::uint32_t c = 0; c < ncol; ++c) {
    const auto len = get<std::uint32_t>(in);
    std::string s(len, '\0');
    in.read(s.data(), len);
    nm.push_back(s);
  }
  std::vector<std::vector<double>> cols(ncol, std::vector<double>(rows));
  for (auto& c : cols) {
    in.read(reinterpret_cast<char*>(c.data()), static_cast<std::streamsize>(rows * 8));
    if (!in) throw std::runtime_error("read_pchs: truncated file");
  }
  if (names) *names = nm;
  return cols;
}

}  // namespace pchaos
