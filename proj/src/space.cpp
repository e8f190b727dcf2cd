#include "pchaos/space.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <stdexcept>

#include "pchaos/combinatorics.hpp"

namespace pchaos {

MeasureSpace MeasureSpace::with_intensity(double n) const {
  if (!(n > 0.0) || !std::isfinite(n)) throw std::invalid_argument("intensity must be positive");
  MeasureSpace s = *this;
  s.intensity_ = n;
  return s;
}

std::optional<std::size_t> MeasureSpace::find_atom(const double* x) const {
  if (data_->mode != Mode::Grid) return std::nullopt;
  std::vector<double> key(x, x + data_->dim);
  auto it = data_->atom_index.find(key);
  if (it == data_->atom_index.end()) return std::nullopt;
  return it->second;
}

std::size_t MeasureSpace::draw_atom(Rng& rng) const {
  std::uniform_real_distribution<double> u(0.0, data_->mass);
  const double t = u(rng);
  auto it = std::upper_bound(data_->cumulative.begin(), data_->cumulative.end(), t);
  std::size_t k = static_cast<std::size_t>(it - data_->cumulative.begin());
  return std::min(k, data_->weights.size() - 1);
}

void MeasureSpace::draw(Rng& rng, double* out) const {
  if (data_->sampler) {
    data_->sampler(rng, out);
    return;
  }
  if (data_->mode != Mode::Grid) throw std::logic_error("continuum space without sampler");
  const std::size_t k = draw_atom(rng);
  std::copy(node(k), node(k) + data_->dim, out);
}

MeasureSpace make_grid_space(const std::vector<Point>& points, const std::vector<double>& weights,
                             double intensity) {
  if (points.empty()) throw std::invalid_argument("make_grid_space: empty atom list");
  if (points.size() != weights.size()) throw std::invalid_argument("make_grid_space: points/weights length mismatch");
  if (!(intensity > 0.0) || !std::isfinite(intensity))
    throw std::invalid_argument("make_grid_space: intensity must be positive");
  auto d = std::make_shared<MeasureSpace::Data>();
  d->mode = Mode::Grid;
  d->dim = static_cast<int>(points.front().size());
  if (d->dim < 1) throw std::invalid_argument("make_grid_space: zero-dimensional points");
  double total = 0.0;
  bool any_positive = false;
  for (std::size_t k = 0; k < points.size(); ++k) {
    if (static_cast<int>(points[k].size()) != d->dim)
      throw std::invalid_argument("make_grid_space: inconsistent point dimension");
    if (!(weights[k] >= 0.0) || !std::isfinite(weights[k]))
      throw std::invalid_argument("make_grid_space: negative weight");
    if (weights[k] > 0.0) any_positive = true;
    d->coords.insert(d->coords.end(), points[k].begin(), points[k].end());
    if (!d->atom_index.emplace(points[k], k).second)
      throw std::invalid_argument("make_grid_space: duplicate atom");
    total += weights[k];
    d->cumulative.push_back(total);
  }
  if (!any_positive) throw std::invalid_argument("make_grid_space: all weights are zero");
  d->weights = weights;
  d->mass = total;
  MeasureSpace s;
  s.data_ = std::move(d);
  s.intensity_ = intensity;
  return s;
}

MeasureSpace make_continuum_space(int dim, PointSampler sampler, const std::vector<Point>& quad_nodes,
                                  const std::vector<double>& quad_weights, double intensity) {
  if (dim < 1) throw std::invalid_argument("make_continuum_space: dimension must be positive");
  if (!sampler) throw std::invalid_argument("make_continuum_space: sampler required");
  if (quad_nodes.empty() || quad_nodes.size() != quad_weights.size())
    throw std::invalid_argument("make_continuum_space: bad quadrature rule");
  if (!(intensity > 0.0) || !std::isfinite(intensity))
    throw std::invalid_argument("make_continuum_space: intensity must be positive");
  auto d = std::make_shared<MeasureSpace::Data>();
  d->mode = Mode::Continuum;
  d->dim = dim;
  d->sampler = std::move(sampler);
  double total = 0.0;
  for (std::size_t k = 0; k < quad_nodes.size(); ++k) {
    if (static_cast<int>(quad_nodes[k].size()) != dim)
      throw std::invalid_argument("make_continuum_space: inconsistent node dimension");
    if (!(quad_weights[k] >= 0.0)) throw std::invalid_argument("make_continuum_space: negative weight");
    d->coords.insert(d->coords.end(), quad_nodes[k].begin(), quad_nodes[k].end());
    total += quad_weights[k];
    d->cumulative.push_back(total);
  }
  if (!(total > 0.0)) throw std::invalid_argument("make_continuum_space: zero mass");
  d->weights = quad_weights;
  d->mass = total;
  MeasureSpace s;
  s.data_ = std::move(d);
  s.intensity_ = intensity;
  return s;
}

MeasureSpace make_uniform_interval(double a, double b, double intensity, int panels) {
  if (!(b > a)) throw std::invalid_argument("make_uniform_interval: need a < b");
  if (panels < 1) throw std::invalid_argument("make_uniform_interval: panels must be positive");
  // 8-point Gauss-Legendre on [-1, 1].
  static const double x8[4] = {0.1834346424956498, 0.5255324099163290, 0.7966664774136267,
                               0.9602898564975363};
  static const double w8[4] = {0.3626837833783620, 0.3137066458778873, 0.2223810344533745,
                               0.1012285362903763};
  const double h = (b - a) / panels;
  const double density = 1.0 / (b - a);
  std::vector<Point> nodes;
  std::vector<double> weights;
  for (int p = 0; p < panels; ++p) {
    const double mid = a + (p + 0.5) * h;
    for (int k = 3; k >= 0; --k) {
      nodes.push_back({mid - 0.5 * h * x8[k]});
      weights.push_back(0.5 * h * w8[k] * density);
    }
    for (int k = 0; k < 4; ++k) {
      nodes.push_back({mid + 0.5 * h * x8[k]});
      weights.push_back(0.5 * h * w8[k] * density);
    }
  }
  auto sampler = [a, b](Rng& rng, double* out) {
    std::uniform_real_distribution<double> u(a, b);
    out[0] = u(rng);
  };
  return make_continuum_space(1, sampler, nodes, weights, intensity);
}

MeasureSpace make_cell_grid(double a, double b, int cells, double intensity) {
  if (!(b > a) || cells < 1) throw std::invalid_argument("make_cell_grid: bad cell layout");
  std::vector<Point> pts;
  std::vector<double> w;
  const double h = (b - a) / cells;
  for (int k = 0; k < cells; ++k) {
    pts.push_back({a + (k + 0.5) * h});
    w.push_back(1.0 / cells);
  }
  return make_grid_space(pts, w, intensity);
}

std::uint64_t next_factor_serial() {
  static std::atomic<std::uint64_t> counter{0};
  return counter.fetch_add(1, std::memory_order_relaxed);
}

FactorPtr make_factor(const MeasureSpace& space, PointFn fn) {
  if (!fn) throw std::invalid_argument("make_factor: empty function");
  auto g = std::make_shared<Factor>();
  g->values.resize(space.node_count());
  for (std::size_t k = 0; k < space.node_count(); ++k) g->values[k] = fn(space.node(k));
  g->fn = std::move(fn);
  return g;
}

FactorPtr make_grid_factor(const MeasureSpace& space, std::vector<double> values) {
  if (space.mode() != Mode::Grid) throw std::invalid_argument("grid-vector factor needs a Grid-mode space");
  if (values.size() != space.node_count()) throw std::invalid_argument("grid-vector factor: wrong length");
  auto g = std::make_shared<Factor>();
  g->values = std::move(values);
  return g;
}

double eval_factor(const Factor& g, const MeasureSpace& space, const double* x) {
  if (g.fn) return g.fn(x);
  auto k = space.find_atom(x);
  if (!k) throw std::invalid_argument("grid-vector factor evaluated at a non-atom point");
  return g.values[*k];
}

double integrate_factor(const Factor& g, const MeasureSpace& space) {
  const auto& w = space.weights();
  double s = 0.0;
  for (std::size_t k = 0; k < w.size(); ++k) s += w[k] * g.values[k];
  return space.intensity() * s;
}

namespace detail {

std::vector<Term> merge_and_prune(std::vector<Term> terms, double rel_tol) {
  std::map<std::vector<const Factor*>, std::size_t> index;
  std::vector<Term> merged;
  for (auto& t : terms) {
    std::vector<const Factor*> key;
    key.reserve(t.factors.size());
    for (const auto& g : t.factors) key.push_back(g.get());
    auto [it, fresh] = index.emplace(std::move(key), merged.size());
    if (fresh)
      merged.push_back(std::move(t));
    else
      merged[it->second].coef += t.coef;
  }
  double cmax = 0.0;
  for (const auto& t : merged) cmax = std::max(cmax, std::abs(t.coef));
  std::vector<Term> out;
  for (auto& t : merged)
    if (t.coef != 0.0 && std::abs(t.coef) >= rel_tol * cmax) out.push_back(std::move(t));
  return out;
}

std::vector<Term> symmetrize_terms(const std::vector<Term>& terms, int order) {
  if (order <= 1) return merge_and_prune(terms);
  // The symmetrization of a product only depends on the multiset of its factors,
  // so merge terms by sorted factor sequence first, then expand each multiset
  // over its distinct orderings.
  std::vector<Term> canon;
  canon.reserve(terms.size());
  for (const auto& t : terms) {
    Term u = t;
    std::sort(u.factors.begin(), u.factors.end(),
              factor_before);
    canon.push_back(std::move(u));
  }
  canon = merge_and_prune(std::move(canon), 0.0);
  std::vector<Term> out;
  for (const auto& t : canon) {
    std::vector<FactorPtr> seq = t.factors;
    std::vector<std::vector<FactorPtr>> orderings;
    do {
      orderings.push_back(seq);
    } while (std::next_permutation(seq.begin(), seq.end(),
                                   factor_before));
    // Each distinct ordering appears order! / #orderings times among all permutations.
    const double w = 1.0 / static_cast<double>(orderings.size());
    for (auto& o : orderings) out.push_back(Term{t.coef * w, std::move(o)});
  }
  return merge_and_prune(std::move(out));
}

}  // namespace detail

Kernel KernelBuilder::separable_raw(const MeasureSpace& space, int order, std::vector<Term> terms,
                                    bool symmetric) {
  Kernel k;
  k.order_ = order;
  k.repr_ = Repr::Separable;
  k.space_ = space;
  k.terms_ = std::move(terms);
  k.symmetric_ = symmetric || order <= 1;
  return k;
}

Kernel KernelBuilder::dense_raw(const MeasureSpace& space, int order, std::vector<double> values,
                                bool symmetric) {
  Kernel k;
  k.order_ = order;
  k.repr_ = Repr::DenseGrid;
  k.space_ = space;
  k.dense_ = std::move(values);
  k.symmetric_ = symmetric || order <= 1;
  return k;
}

Kernel Kernel::separable(const MeasureSpace& space, int order, std::vector<Term> terms, bool symmetrize_terms) {
  if (order < 0 || order > kMaxOrder) throw std::invalid_argument("kernel order out of range");
  for (const auto& t : terms) {
    if (static_cast<int>(t.factors.size()) != order)
      throw std::invalid_argument("separable term has wrong number of factors");
    for (const auto& g : t.factors) {
      if (!g || g->values.size() != space.node_count())
        throw std::invalid_argument("factor does not live on this space");
      if (space.mode() == Mode::Continuum && !g->fn)
        throw std::invalid_argument("Continuum-mode factors need a closed form");
    }
  }
  if (symmetrize_terms) return KernelBuilder::separable_raw(space, order, detail::symmetrize_terms(terms, order), true);
  return KernelBuilder::separable_raw(space, order, detail::merge_and_prune(std::move(terms)), order <= 1);
}

Kernel Kernel::dense(const MeasureSpace& space, int order, std::vector<double> values, bool symmetric) {
  if (space.mode() != Mode::Grid) throw std::invalid_argument("DenseGrid kernels need a Grid-mode space");
  if (order < 0 || order > kMaxOrder) throw std::invalid_argument("kernel order out of range");
  std::size_t n = 1;
  for (int j = 0; j < order; ++j) n *= space.node_count();
  if (values.size() != n) throw std::invalid_argument("DenseGrid kernel: wrong number of values");
  return KernelBuilder::dense_raw(space, order, std::move(values), symmetric);
}

Kernel Kernel::scalar(const MeasureSpace& space, double value) {
  std::vector<Term> t;
  if (value != 0.0) t.push_back(Term{value, {}});
  return KernelBuilder::separable_raw(space, 0, std::move(t), true);
}

Kernel Kernel::zero(const MeasureSpace& space, int order) {
  return KernelBuilder::separable_raw(space, order, {}, true);
}

double Kernel::scalar_value() const {
  if (order_ != 0) throw std::logic_error("scalar_value on a kernel of positive order");
  if (repr_ == Repr::DenseGrid) return dense_.empty() ? 0.0 : dense_[0];
  double s = 0.0;
  for (const auto& t : terms_) s += t.coef;
  return s;
}

Kernel Kernel::on(const MeasureSpace& space) const {
  if (!space.same_nodes(space_)) throw std::invalid_argument("Kernel::on: different node set");
  Kernel k = *this;
  k.space_ = space;
  return k;
}

Kernel Kernel::scaled(double c) const {
  Kernel k = *this;
  if (repr_ == Repr::Separable) {
    for (auto& t : k.terms_) t.coef *= c;
    k.terms_ = detail::merge_and_prune(std::move(k.terms_));
  } else {
    for (auto& v : k.dense_) v *= c;
  }
  return k;
}

std::size_t Kernel::dense_size() const {
  std::size_t n = 1;
  for (int j = 0; j < order_; ++j) n *= space_.node_count();
  return n;
}

namespace {

double eval_literal_points(const Kernel& f, const std::vector<const double*>& pts) {
  const auto& space = f.space();
  if (f.repr() == Repr::DenseGrid) {
    std::size_t idx = 0;
    for (const double* x : pts) {
      auto k = space.find_atom(x);
      if (!k) throw std::invalid_argument("DenseGrid kernel evaluated at a non-atom point");
      idx = idx * space.node_count() + *k;
    }
    return f.dense_values()[idx];
  }
  double s = 0.0;
  for (const auto& t : f.terms()) {
    double v = t.coef;
    for (std::size_t j = 0; j < pts.size(); ++j) v *= eval_factor(*t.factors[j], space, pts[j]);
    s += v;
  }
  return s;
}

}  // namespace

double eval_kernel(const Kernel& f, const std::vector<Point>& args) {
  if (static_cast<int>(args.size()) != f.order()) throw std::invalid_argument("eval_kernel: arity mismatch");
  for (const auto& a : args)
    if (static_cast<int>(a.size()) != f.space().dim()) throw std::invalid_argument("eval_kernel: wrong point dimension");
  if (f.order() == 0) return f.scalar_value();
  if (f.symmetric()) {
    std::vector<const double*> pts;
    for (const auto& a : args) pts.push_back(a.data());
    return eval_literal_points(f, pts);
  }
  const auto& perms = permutations(f.order());
  double s = 0.0;
  std::vector<const double*> pts(args.size());
  for (const auto& p : perms) {
    for (std::size_t j = 0; j < args.size(); ++j) pts[j] = args[static_cast<std::size_t>(p[j])].data();
    s += eval_literal_points(f, pts);
  }
  return s / static_cast<double>(perms.size());
}

double eval_kernel_nodes(const Kernel& f, const std::vector<std::size_t>& nodes) {
  if (static_cast<int>(nodes.size()) != f.order()) throw std::invalid_argument("eval_kernel_nodes: arity mismatch");
  if (f.repr() == Repr::DenseGrid) {
    std::size_t idx = 0;
    for (auto k : nodes) idx = idx * f.space().node_count() + k;
    return f.dense_values()[idx];
  }
  double s = 0.0;
  for (const auto& t : f.terms()) {
    double v = t.coef;
    for (std::size_t j = 0; j < nodes.size(); ++j) v *= t.factors[j]->values[nodes[j]];
    s += v;
  }
  return s;
}

}  // namespace pchaos
