#include "pchaos/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <sstream>
#include <stdexcept>

#include "pchaos/combinatorics.hpp"
#include "pchaos/contract.hpp"

namespace pchaos {

namespace {

std::string n_tag(double n) {
  std::ostringstream os;
  os.precision(17);
  os << n;
  return os.str();
}

void require_schedule(const StudyConfig& cfg, long min_reps) {
  if (cfg.n_values.empty()) throw std::invalid_argument(cfg.id + ": empty n schedule");
  for (std::size_t i = 0; i < cfg.n_values.size(); ++i) {
    if (!(cfg.n_values[i] > 0.0)) throw std::invalid_argument(cfg.id + ": n values must be positive");
    if (i > 0 && !(cfg.n_values[i] > cfg.n_values[i - 1]))
      throw std::invalid_argument(cfg.id + ": n schedule must be strictly increasing");
  }
  if (cfg.replications < min_reps)
    throw std::invalid_argument(cfg.id + ": at least " + std::to_string(min_reps) + " replications required");
  if (cfg.workers < 1) throw std::invalid_argument(cfg.id + ": workers must be positive");
}

int integer_nu(double nu) {
  const double r = std::round(nu);
  if (r < 1.0 || std::abs(nu - r) > 1e-12)
    throw std::invalid_argument("built-in Gamma kernel needs a positive integer nu; supply a kernel spec otherwise");
  return static_cast<int>(r);
}

KernelFamily gamma_family(const StudyConfig& cfg) {
  if (cfg.kernel) return cfg.kernel;
  const int nu = integer_nu(cfg.nu);
  return [nu](double n) { return gamma_block_kernel(n, nu); };
}

// Pathwise I_q, compiled when the kernel allows it.
std::function<double(const PoissonSample&)> integral_evaluator(const Kernel& f) {
  if (f.repr() == Repr::Separable && f.space().mode() == Mode::Grid) {
    auto ck = std::make_shared<CompiledKernel>(f);
    return [ck](const PoissonSample& s) { return ck->integral(s); };
  }
  return [f](const PoissonSample& s) { return multiple_integral_eval(f, s); };
}

std::function<double(const PoissonSample&)> ustat_evaluator(const Kernel& f) {
  if (f.repr() == Repr::Separable && f.space().mode() == Mode::Grid) {
    auto ck = std::make_shared<CompiledKernel>(f);
    return [ck](const PoissonSample& s) { return ck->ustat(s); };
  }
  return [f](const PoissonSample& s) { return ustat_eval(f, s); };
}

// One column per output of `fn`, filled replication by replication.
std::vector<std::vector<double>> replicate(const StudyConfig& cfg, long reps, const std::string& tag, int columns,
                                           const std::function<void(Rng&, double*)>& fn) {
  std::vector<std::vector<double>> out(static_cast<std::size_t>(columns), std::vector<double>(static_cast<std::size_t>(reps)));
  parallel_replications(reps, cfg.workers, cfg.seed, tag, [&](long r, Rng& rng) {
    std::vector<double> v(static_cast<std::size_t>(columns));
    fn(rng, v.data());
    for (std::size_t c = 0; c < v.size(); ++c) out[c][static_cast<std::size_t>(r)] = v[c];
  });
  return out;
}

void keep(ExperimentResult& res, const StudyConfig& cfg, const std::string& name, const std::vector<double>& x) {
  if (!cfg.keep_samples) return;
  res.sample_names.push_back(name);
  res.samples.push_back(x);
}

void fit(ExperimentResult& res, const std::string& leg, const std::string& column) {
  std::vector<std::pair<double, double>> pts;
  for (const StudyRow* r : res.leg(leg)) {
    double v = std::nan("");
    if (column == "kolmogorov" && r->distances)
      v = r->distances->kolmogorov;
    else if (r->values.count(column))
      v = r->values.at(column);
    else if (r->report) {
      for (const auto& [k, x] : r->report->flat())
        if (k == column) v = x;
    }
    if (!std::isnan(v)) pts.emplace_back(r->n, v);
  }
  try {
    res.rates.push_back({leg, column, fit_rate(pts)});
  } catch (const std::invalid_argument&) {
    // Fewer than three usable points, or a zero value: no rate for this column.
  }
}

void finish(ExperimentResult& res) {
  std::stable_sort(res.rows.begin(), res.rows.end(), [](const StudyRow& a, const StudyRow& b) {
    return a.n != b.n ? a.n < b.n : a.leg < b.leg;
  });
}

ExperimentResult start(const StudyConfig& cfg, const std::string& claim) {
  ExperimentResult res;
  res.id = cfg.id;
  res.claim = claim;
  res.seed = cfg.seed;
  res.workers = cfg.workers;
  return res;
}

// Poissonized and fixed-size samples sharing their first min(N, n) points.
std::pair<PoissonSample, PoissonSample> coupled_samples(const MeasureSpace& space, long fixed, Rng& rng) {
  std::poisson_distribution<long> pd(space.intensity() * space.base_mass());
  const long N = pd(rng);
  const long K = std::max(N, fixed);
  PoissonSample a, b;
  a.space = b.space = space;
  a.count = N;
  b.count = fixed;
  if (space.mode() == Mode::Grid) {
    a.counts.assign(space.node_count(), 0);
    b.counts.assign(space.node_count(), 0);
    for (long i = 0; i < K; ++i) {
      const std::size_t at = space.draw_atom(rng);
      if (i < N) ++a.counts[at];
      if (i < fixed) ++b.counts[at];
    }
  } else {
    const std::size_t d = static_cast<std::size_t>(space.dim());
    std::vector<double> x(d);
    for (long i = 0; i < K; ++i) {
      space.draw(rng, x.data());
      if (i < N) a.coords.insert(a.coords.end(), x.begin(), x.end());
      if (i < fixed) b.coords.insert(b.coords.end(), x.begin(), x.end());
    }
  }
  return {std::move(a), std::move(b)};
}

double normal_contraction_max(const Kernel& f) {
  const int q = f.order();
  double m = 0.0;
  for (int r = 1; r <= q; ++r)
    for (int l = 1; l <= std::min(r, q - 1); ++l) m = std::max(m, norm(contract(f, f, r, l)));
  return m;
}

// Pairs at distance in (0, r) among sorted coordinates.
long sorted_edge_count(const std::vector<double>& x, double r) {
  long edges = 0;
  std::size_t lo = 0;
  for (std::size_t j = 0; j < x.size(); ++j) {
    while (x[j] - x[lo] >= r) ++lo;
    for (std::size_t i = lo; i < j; ++i)
      if (x[j] - x[i] > 0.0) ++edges;
  }
  return edges;
}

// int_{(a,b)} c(z)^2 dz, with c(z) the number of points within distance r of z,
// for sorted coordinates: the sum over ordered pairs of |B(x_i, r) ^ B(x_j, r) ^ (a, b)|.
double neighbour_energy(const std::vector<double>& x, double r, double a, double b) {
  auto overlap = [&](double u, double v) {
    const double lo = std::max({u - r, v - r, a}), hi = std::min({u + r, v + r, b});
    return hi > lo ? hi - lo : 0.0;
  };
  double total = 0.0;
  std::size_t lo = 0;
  for (std::size_t j = 0; j < x.size(); ++j) {
    total += overlap(x[j], x[j]);
    while (x[j] - x[lo] >= 2 * r) ++lo;
    for (std::size_t i = lo; i < j; ++i) total += 2 * overlap(x[i], x[j]);
  }
  return total;
}

// Second leg rotated by half the replications: an independent pairing with the
// same marginals, so its product gap is the resolution floor of the statistic.
double null_product_gap(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> c(b.size());
  const std::size_t h = b.size() / 2;
  for (std::size_t i = 0; i < b.size(); ++i) c[i] = b[(i + h) % b.size()];
  return product_gap(a, c);
}

}  // namespace

std::vector<const StudyRow*> ExperimentResult::leg(const std::string& name) const {
  std::vector<const StudyRow*> out;
  for (const auto& r : rows)
    if (r.leg == name) out.push_back(&r);
  return out;
}

const StudyRow& ExperimentResult::row(const std::string& name, double n) const {
  for (const auto& r : rows)
    if (r.leg == name && r.n == n) return r;
  throw std::out_of_range("ExperimentResult: no row for leg " + name + " at n = " + n_tag(n));
}

std::optional<RateFit> ExperimentResult::rate(const std::string& name, const std::string& column) const {
  for (const auto& r : rates)
    if (r.leg == name && r.column == column) return r.fit;
  return std::nullopt;
}

const std::vector<std::string>& study_value_columns() {
  static const std::vector<std::string> cols = {
      "blocks",      "order",          "residual",       "third_exact",     "fourth_exact", "depoisson_var",
      "correlation", "correlation_se", "product_gap",    "product_gap_null",    "lambda",          "radius",       "derivative_energy",
      "normal_contraction_max", "max_error", "tolerance", "passed"};
  return cols;
}

const std::vector<std::string>& study_ids() {
  static const std::vector<std::string> ids = {"identity-suite", "gamma-ustat", "three-moment",
                                               "dejong-normal",  "hybrid-gn",   "hybrid-gp"};
  return ids;
}

MeasureSpace block_space(int m, double n) {
  if (m < 1) throw std::invalid_argument("block_space: need at least one block");
  return make_cell_grid(-1.0, 1.0, 2 * m, n);
}

std::vector<FactorPtr> block_factors(const MeasureSpace& cells, int m) {
  if (cells.node_count() != static_cast<std::size_t>(2 * m))
    throw std::invalid_argument("block_factors: space must have 2m cells");
  std::vector<FactorPtr> out;
  const double h = std::sqrt(static_cast<double>(m));
  for (int k = 0; k < m; ++k) {
    std::vector<double> v(static_cast<std::size_t>(2 * m), 0.0);
    v[static_cast<std::size_t>(2 * k)] = h;
    v[static_cast<std::size_t>(2 * k + 1)] = -h;
    out.push_back(make_grid_factor(cells, std::move(v)));
  }
  return out;
}

Kernel block_kernel(const MeasureSpace& cells, int m, int q, double coef) {
  std::vector<Term> terms;
  for (const auto& e : block_factors(cells, m)) terms.push_back(Term{coef, std::vector<FactorPtr>(static_cast<std::size_t>(q), e)});
  return Kernel::separable(cells, q, std::move(terms));
}

Kernel gamma_block_kernel(double n, int nu) {
  if (nu < 1) throw std::invalid_argument("gamma_block_kernel: nu must be a positive integer");
  return block_kernel(block_space(nu, n), nu, 2, 1.0 / n);
}

Kernel contrast_kernel(double n) { return block_kernel(block_space(2, n), 2, 2, 1.0 / (n * std::sqrt(2.0))); }

int normal_sequence_blocks(double n, double cells_exponent) {
  return std::max(2, static_cast<int>(std::lround(std::pow(n, cells_exponent))));
}

Kernel normal_sequence_kernel(double n, double cells_exponent) {
  const int m = normal_sequence_blocks(n, cells_exponent);
  return block_kernel(block_space(m, n), m, 2, 1.0 / (n * std::sqrt(static_cast<double>(m))));
}

BoundReport gamma_leg_report(const Kernel& h, double nu) {
  BoundReport rep = dejong_report(h, nu);
  const BoundReport g = gamma_bound_report(h, nu);
  rep.a1_exact = g.a1_exact;
  rep.a3_bound = g.a3_bound;
  rep.final_bound = g.final_bound;
  rep.k_assembled = g.k_assembled;
  for (const auto& [k, v] : g.method_tags) rep.method_tags.emplace(k, v);
  return rep;
}

void check_hybrid_orders(int q1, int q2) {
  if (q1 < 1 || q2 < 1) throw std::invalid_argument("hybrid: orders must be positive");
  if (q1 == 2 * q2 || q2 == 2 * q1)
    throw std::invalid_argument("hybrid: orders " + std::to_string(q1) + " and " + std::to_string(q2) +
                                " violate the constraint that no order is twice another");
}

ExperimentResult gamma_ustat_study(const StudyConfig& cfg) {
  require_schedule(cfg, 100);
  const KernelFamily fam = gamma_family(cfg);
  ExperimentResult res = start(cfg, "degenerate order-2 U-statistic converges to the centred Gamma law at rate n^-1/4");
  const Target target{Target::Kind::Gamma, cfg.nu};
  for (double n : cfg.n_values) {
    const Kernel h = fam(n);
    StudyRow row;
    row.leg = "gamma";
    row.n = n;
    row.replications = cfg.replications;
    row.report = gamma_leg_report(h, cfg.nu);
    const auto eval = integral_evaluator(h);
    const auto x = replicate(cfg, cfg.replications, cfg.id + "/n=" + n_tag(n), 1,
                             [&](Rng& rng, double* out) { out[0] = eval(sample(h.space(), rng)); });
    row.distances = empirical_distances(x[0], target);
    keep(res, cfg, "gamma/n=" + n_tag(n), x[0]);
    if (cfg.depoisson_replications > 1) {
      const auto ustat = ustat_evaluator(h);
      const long fixed = std::lround(n);
      const auto d = replicate(cfg, cfg.depoisson_replications, cfg.id + "/depoisson/n=" + n_tag(n), 1,
                               [&](Rng& rng, double* out) {
                                 const auto [a, b] = coupled_samples(h.space(), fixed, rng);
                                 out[0] = ustat(a) - ustat(b);
                               });
      MomentAccumulator acc;
      for (double v : d[0]) acc.add(v);
      row.values["depoisson_var"] = acc.variance();
    }
    res.rows.push_back(std::move(row));
  }
  finish(res);
  fit(res, "gamma", "Cn");
  fit(res, "gamma", "kolmogorov");
  fit(res, "gamma", "depoisson_var");
  return res;
}

ExperimentResult three_moment_study(const StudyConfig& cfg) {
  require_schedule(cfg, 100);
  const KernelFamily fam = gamma_family(cfg);
  ExperimentResult res = start(cfg, "third and fourth moments characterise the centred Gamma limit of a double integral");
  const Target target{Target::Kind::Gamma, cfg.nu};
  for (double n : cfg.n_values) {
    for (const std::string leg : {"gamma", "contrast"}) {
      if (leg == "contrast" && cfg.nu != 1.0) continue;
      const Kernel h = leg == "gamma" ? fam(n) : contrast_kernel(n);
      StudyRow row;
      row.leg = leg;
      row.n = n;
      row.replications = cfg.replications;
      row.report = leg == "gamma" ? gamma_leg_report(h, cfg.nu) : dejong_report(h, cfg.nu);
      row.values["third_exact"] = third_moment_I2(h);
      row.values["fourth_exact"] = fourth_moment_I2(h);
      row.values["residual"] = three_moment_criterion(h, cfg.nu);
      const auto eval = integral_evaluator(h);
      const auto x = replicate(cfg, cfg.replications, cfg.id + "/" + leg + "/n=" + n_tag(n), 1,
                               [&](Rng& rng, double* out) { out[0] = eval(sample(h.space(), rng)); });
      row.distances = empirical_distances(x[0], target);
      keep(res, cfg, leg + "/n=" + n_tag(n), x[0]);
      res.rows.push_back(std::move(row));
    }
  }
  finish(res);
  fit(res, "gamma", "residual");
  fit(res, "contrast", "residual");
  return res;
}

ExperimentResult dejong_normal_study(const StudyConfig& cfg) {
  require_schedule(cfg, 100);
  ExperimentResult res = start(cfg, "vanishing fourth-moment ratio gives a Normal limit; the Gamma sequence keeps it bounded below");
  const Target normal{Target::Kind::Normal};
  for (double n : cfg.n_values) {
    const Kernel h = normal_sequence_kernel(n, cfg.cells_exponent);
    StudyRow row;
    row.leg = "normal";
    row.n = n;
    row.replications = cfg.replications;
    row.report = dejong_report(h, std::nullopt);
    row.values["blocks"] = normal_sequence_blocks(n, cfg.cells_exponent);
    const double sd = std::sqrt(row.report->variance);
    const CompiledKernel ck(h);
    const auto x = replicate(cfg, cfg.replications, cfg.id + "/normal/n=" + n_tag(n), 1,
                             [&](Rng& rng, double* out) { out[0] = ck.integral(sample(h.space(), rng)) / sd; });
    row.distances = empirical_distances(x[0], normal);
    keep(res, cfg, "normal/n=" + n_tag(n), x[0]);
    res.rows.push_back(std::move(row));

    StudyRow g;
    g.leg = "gamma";
    g.n = n;
    g.report = dejong_report(gamma_family(cfg)(n), cfg.nu);
    res.rows.push_back(std::move(g));
  }
  finish(res);
  fit(res, "normal", "Bn");
  fit(res, "normal", "kolmogorov");
  fit(res, "gamma", "Bn");
  return res;
}

ExperimentResult hybrid_gn_study(const StudyConfig& cfg) {
  require_schedule(cfg, 100);
  check_hybrid_orders(2, cfg.normal_order);
  if (cfg.nu != 1.0) throw std::invalid_argument("hybrid-gn: the built-in Gamma leg has nu = 1");
  ExperimentResult res = start(cfg, "a Gamma-limit double integral and a Normal-limit integral become asymptotically independent");
  const int q = cfg.normal_order;
  for (double n : cfg.n_values) {
    int m = normal_sequence_blocks(n, cfg.cells_exponent);
    m += m % 2;  // the sign function then never splits a block
    const MeasureSpace cells = block_space(m, n);
    std::vector<double> sg(static_cast<std::size_t>(2 * m));
    for (int a = 0; a < 2 * m; ++a) sg[static_cast<std::size_t>(a)] = a < m ? -1.0 : 1.0;
    const auto e = make_grid_factor(cells, sg);
    const Kernel g = Kernel::separable(cells, 2, {Term{1.0 / n, {e, e}}});
    const Kernel f = block_kernel(cells, m, q, 1.0 / (std::pow(n, 0.5 * q) * std::sqrt(factorial(q) * m)));
    const CompiledKernel cg(g), cf(f);
    const auto x = replicate(cfg, cfg.replications, cfg.id + "/n=" + n_tag(n), 2, [&](Rng& rng, double* out) {
      const PoissonSample s = sample(cells, rng);
      out[0] = cg.integral(s);
      out[1] = cf.integral(s);
    });
    StudyRow rg;
    rg.leg = "gamma";
    rg.n = n;
    rg.replications = cfg.replications;
    rg.report = gamma_leg_report(g, 1.0);
    rg.distances = empirical_distances(x[0], Target{Target::Kind::Gamma, 1.0});
    rg.values["order"] = 2;
    StudyRow rn;
    rn.leg = "normal";
    rn.n = n;
    rn.replications = cfg.replications;
    rn.distances = empirical_distances(x[1], Target{Target::Kind::Normal});
    rn.values["order"] = q;
    rn.values["blocks"] = m;
    rn.values["normal_contraction_max"] = normal_contraction_max(f);
    StudyRow rj;
    rj.leg = "joint";
    rj.n = n;
    rj.replications = cfg.replications;
    const Correlation c = correlation(x[0], x[1]);
    rj.values["correlation"] = c.value;
    rj.values["correlation_se"] = c.se;
    rj.values["product_gap"] = product_gap(x[0], x[1]);
    rj.values["product_gap_null"] = null_product_gap(x[0], x[1]);
    keep(res, cfg, "gamma/n=" + n_tag(n), x[0]);
    keep(res, cfg, "normal/n=" + n_tag(n), x[1]);
    res.rows.push_back(std::move(rg));
    res.rows.push_back(std::move(rn));
    res.rows.push_back(std::move(rj));
  }
  finish(res);
  fit(res, "gamma", "kolmogorov");
  fit(res, "normal", "kolmogorov");
  fit(res, "joint", "product_gap");
  return res;
}

ExperimentResult hybrid_gp_study(const StudyConfig& cfg) {
  require_schedule(cfg, 100);
  if (cfg.nu != 1.0) throw std::invalid_argument("hybrid-gp: the built-in Gamma leg has nu = 1");
  ExperimentResult res = start(cfg, "a Gamma-limit double integral and a disk-graph edge count become asymptotically independent");
  for (double n : cfg.n_values) {
    const MeasureSpace line = make_uniform_interval(-1.0, 1.0, n);
    const auto sgn = make_factor(line, [](const double* x) { return x[0] > 0 ? 1.0 : (x[0] < 0 ? -1.0 : 0.0); });
    const Kernel g = Kernel::separable(line, 2, {Term{1.0 / n, {sgn, sgn}}});
    const double r = std::pow(n, cfg.radius_exponent);
    const double lambda = 0.5 * n * n * (r - 0.25 * r * r);
    const auto x = replicate(cfg, cfg.replications, cfg.id + "/n=" + n_tag(n), 3, [&](Rng& rng, double* out) {
      const PoissonSample s = sample_sorted_interval(line, -1.0, 1.0, rng);
      out[0] = multiple_integral_eval(g, s);
      out[1] = static_cast<double>(sorted_edge_count(s.coords, r));
      // int (D_z L)^2 mu_n(dz) with mu_n(dz) = n dz / 2 on (-1, 1).
      out[2] = 0.5 * n * neighbour_energy(s.coords, r, -1.0, 1.0);
    });
    StudyRow rg;
    rg.leg = "gamma";
    rg.n = n;
    rg.replications = cfg.replications;
    rg.report = gamma_leg_report(g, 1.0);
    rg.distances = empirical_distances(x[0], Target{Target::Kind::Gamma, 1.0});
    rg.values["order"] = 2;
    StudyRow rp;
    rp.leg = "poisson";
    rp.n = n;
    rp.replications = cfg.replications;
    rp.distances = empirical_distances(x[1], Target{Target::Kind::Poisson, 1.0, lambda});
    rp.values["lambda"] = lambda;
    rp.values["radius"] = r;
    MomentAccumulator en;
    for (double v : x[2]) en.add(v);
    rp.values["derivative_energy"] = en.raw(1);
    StudyRow rj;
    rj.leg = "joint";
    rj.n = n;
    rj.replications = cfg.replications;
    const Correlation c = correlation(x[0], x[1]);
    rj.values["correlation"] = c.value;
    rj.values["correlation_se"] = c.se;
    rj.values["product_gap"] = product_gap(x[0], x[1]);
    rj.values["product_gap_null"] = null_product_gap(x[0], x[1]);
    keep(res, cfg, "gamma/n=" + n_tag(n), x[0]);
    keep(res, cfg, "poisson/n=" + n_tag(n), x[1]);
    res.rows.push_back(std::move(rg));
    res.rows.push_back(std::move(rp));
    res.rows.push_back(std::move(rj));
  }
  finish(res);
  fit(res, "gamma", "kolmogorov");
  fit(res, "poisson", "kolmogorov");
  fit(res, "joint", "product_gap");
  return res;
}

namespace {

// Order-2 polynomial kernel on (-1, 1) at intensity 6, evaluated by quadrature.
Kernel interval_polynomial_kernel() {
  const MeasureSpace line = make_uniform_interval(-1.0, 1.0, 6.0);
  const auto x1 = make_factor(line, [](const double* x) { return x[0]; });
  const auto x2 = make_factor(line, [](const double* x) { return 1.5 * x[0] * x[0] - 0.5; });
  return Kernel::separable(line, 2, {Term{0.3, {x1, x1}}, Term{0.2, {x1, x2}}, Term{-0.25, {x2, x2}}});
}

MomentAccumulator integral_moments(const Kernel& f, std::uint64_t seed, long reps, int workers, const std::string& tag) {
  const auto eval = integral_evaluator(f);
  StudyConfig cfg;
  cfg.seed = seed;
  cfg.workers = workers;
  const auto x = replicate(cfg, reps, tag, 1, [&](Rng& rng, double* o) { o[0] = eval(sample(f.space(), rng)); });
  MomentAccumulator acc;
  for (double v : x[0]) acc.add(v);
  return acc;
}

}  // namespace

std::vector<IdentityCheck> isometry_checks(std::uint64_t seed, long reps, int workers) {
  if (reps < 100) throw std::invalid_argument("isometry_checks: at least 100 replications required");
  const double n = 30.0;
  const int m = 4;
  const std::vector<std::pair<std::string, Kernel>> kernels = {
      {"gamma block", gamma_block_kernel(n, 1)},
      {"contrast", contrast_kernel(n)},
      {"normal sequence", normal_sequence_kernel(100.0, 0.6)},
      {"order-3 block", block_kernel(block_space(m, n), m, 3, 1.0 / (std::pow(n, 1.5) * std::sqrt(factorial(3) * m)))},
      {"interval polynomial", interval_polynomial_kernel()},
  };
  std::vector<IdentityCheck> out;
  for (const auto& [name, f] : kernels) {
    const MomentAccumulator acc = integral_moments(f, seed, reps, workers, "isometry/" + name);
    const std::string q = std::to_string(f.order());
    IdentityCheck mean{name + ": E I_" + q + " = 0", reps, std::abs(acc.raw(1)) / acc.raw_se(1), 3.0};
    IdentityCheck var{name + ": E I_" + q + "^2 = " + q + "! |f|^2", reps,
                      std::abs(acc.raw(2) - factorial(f.order()) * norm2(f)) / acc.raw_se(2), 3.0};
    mean.passed = mean.max_error <= mean.tolerance;
    var.passed = var.max_error <= var.tolerance;
    out.push_back(mean);
    out.push_back(var);
  }
  return out;
}

std::vector<IdentityCheck> moment_oracle_checks(std::uint64_t seed, long reps, int workers) {
  if (reps < 100) throw std::invalid_argument("moment_oracle_checks: at least 100 replications required");
  const std::vector<std::pair<std::string, Kernel>> kernels = {
      {"gamma block", gamma_block_kernel(30.0, 1)},
      {"contrast", contrast_kernel(30.0)},
      {"interval polynomial", interval_polynomial_kernel()},
  };
  std::vector<IdentityCheck> out;
  for (const auto& [name, f] : kernels) {
    const MomentAccumulator acc = integral_moments(f, seed, reps, workers, "moments/" + name);
    const double exact[3] = {2.0 * norm2(symmetrize(f)), third_moment_I2(f), fourth_moment_I2(f)};
    for (int k = 2; k <= 4; ++k) {
      IdentityCheck c{name + ": E I_2^" + std::to_string(k), reps,
                      std::abs(acc.raw(k) - exact[k - 2]) / acc.raw_se(k), 3.0};
      c.passed = c.max_error <= c.tolerance;
      out.push_back(c);
    }
  }
  return out;
}

ExperimentResult run_study(const StudyConfig& cfg) {
  if (cfg.id == "gamma-ustat") return gamma_ustat_study(cfg);
  if (cfg.id == "three-moment") return three_moment_study(cfg);
  if (cfg.id == "dejong-normal") return dejong_normal_study(cfg);
  if (cfg.id == "hybrid-gn") return hybrid_gn_study(cfg);
  if (cfg.id == "hybrid-gp") return hybrid_gp_study(cfg);
  throw std::invalid_argument("unknown study id: " + cfg.id);
}

}  // namespace pchaos
