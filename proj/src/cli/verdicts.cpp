#include <cmath>
#include <sstream>

#include "pchaos/cli.hpp"

namespace pchaos::cli {

namespace {

std::string num(double x) {
  std::ostringstream os;
  os.precision(4);
  os << x;
  return os.str();
}

double report_value(const StudyRow& r, const std::string& key) {
  if (!r.report) return std::nan("");
  for (const auto& [k, v] : r.report->flat())
    if (k == key) return v;
  return std::nan("");
}

std::vector<double> ks_series(const ExperimentResult& res, const std::string& leg) {
  std::vector<double> out;
  for (const StudyRow* r : res.leg(leg)) out.push_back(r->distances ? r->distances->kolmogorov : std::nan(""));
  return out;
}

std::string series(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + num(v[i]);
  return s;
}

Verdict strictly_decreasing(const std::string& name, const std::vector<double>& v) {
  bool ok = v.size() >= 2;
  for (std::size_t i = 1; i < v.size(); ++i) ok = ok && v[i] < v[i - 1];
  return {name, ok, series(v)};
}

Verdict at_most(const std::string& name, double x, double tol) {
  return {name, x <= tol, num(x) + " <= " + num(tol)};
}

Verdict slope_in(const std::string& name, const ExperimentResult& res, const std::string& leg, const std::string& col,
                 double lo, double hi) {
  const auto f = res.rate(leg, col);
  if (!f) return {name, false, "no fitted rate for " + leg + "/" + col};
  const bool ok = f->slope >= lo && f->slope <= hi;
  return {name, ok, "slope " + num(f->slope) + " +/- " + num(f->stderr_slope) + " in [" + num(lo) + ", " + num(hi) + "]"};
}

std::vector<Verdict> hybrid_verdicts(const ExperimentResult& res, const std::string& other,
                                     const std::map<std::string, double>& t) {
  std::vector<Verdict> out;
  const auto g = ks_series(res, "gamma");
  const auto o = ks_series(res, other);
  out.push_back(at_most("gamma marginal Kolmogorov at largest n", g.back(), t.at("ks_max")));
  out.push_back(at_most(other + " marginal Kolmogorov at largest n", o.back(), t.at("ks_max")));
  const StudyRow* last = res.leg("joint").back();
  const double z = std::abs(last->values.at("correlation")) / last->values.at("correlation_se");
  out.push_back({"cross-correlation within tolerance at largest n", z <= t.at("correlation_se_max"),
                 "|corr| = " + num(std::abs(last->values.at("correlation"))) + " = " + num(z) + " SE"});
  std::vector<double> gap;
  for (const StudyRow* r : res.leg("joint")) gap.push_back(r->values.at("product_gap"));
  out.push_back(strictly_decreasing("joint product gap decreasing", gap));
  return out;
}

}  // namespace

std::map<std::string, double> default_tolerances(const std::string& id) {
  if (id == "identity-suite") return {};
  if (id == "gamma-ustat")
    return {{"cn_slope_min", -0.26},       {"cn_slope_max", -0.24},       {"exact_gap_max", 1e-12},
            {"ks_max", 0.02},              {"depoisson_slope_min", -0.7}, {"depoisson_slope_max", -0.3}};
  if (id == "three-moment") return {{"residual_slope_max", -0.4}, {"contrast_floor", 1.0}};
  if (id == "dejong-normal") return {{"bn_slope_max", -0.1}, {"ks_max", 0.02}, {"gamma_bn_min", 0.3}};
  if (id == "hybrid-gn" || id == "hybrid-gp") return {{"ks_max", 0.03}, {"correlation_se_max", 3.0}};
  throw std::invalid_argument("unknown study id '" + id + "'");
}

std::vector<Verdict> study_verdicts(const ExperimentResult& res, const std::map<std::string, double>& overrides) {
  auto t = default_tolerances(res.id);
  for (const auto& [k, v] : overrides) {
    if (!t.count(k)) throw std::invalid_argument("unknown tolerance '" + k + "' for " + res.id);
    t[k] = v;
  }
  std::vector<Verdict> out;
  if (res.id == "identity-suite") {
    for (const auto& r : res.rows)
      out.push_back({r.leg, r.values.at("passed") != 0.0,
                     "max error " + num(r.values.at("max_error")) + ", tolerance " + num(r.values.at("tolerance"))});
    return out;
  }
  if (res.id == "gamma-ustat") {
    out.push_back(slope_in("Cn log-log slope", res, "gamma", "Cn", t.at("cn_slope_min"), t.at("cn_slope_max")));
    double worst = 0.0;
    for (const StudyRow* r : res.leg("gamma"))
      worst = std::max({worst, std::abs(report_value(*r, "variance_gap")), std::abs(report_value(*r, "middle_defect"))});
    out.push_back(at_most("variance gap and middle defect vanish", worst, t.at("exact_gap_max")));
    const auto ks = ks_series(res, "gamma");
    out.push_back(strictly_decreasing("Kolmogorov distance strictly decreasing", ks));
    out.push_back(at_most("Kolmogorov distance at largest n", ks.back(), t.at("ks_max")));
    if (res.rate("gamma", "depoisson_var"))
      out.push_back(slope_in("de-Poissonization variance slope", res, "gamma", "depoisson_var",
                             t.at("depoisson_slope_min"), t.at("depoisson_slope_max")));
    return out;
  }
  if (res.id == "three-moment") {
    const auto f = res.rate("gamma", "residual");
    out.push_back({"Gamma residual slope", f && f->slope <= t.at("residual_slope_max"),
                   f ? "slope " + num(f->slope) + " <= " + num(t.at("residual_slope_max")) : "no fitted rate"});
    double lo = INFINITY;
    for (const StudyRow* r : res.leg("contrast")) lo = std::min(lo, r->values.at("residual"));
    out.push_back({"contrast residual above floor", !res.leg("contrast").empty() && lo >= t.at("contrast_floor"),
                   "min " + num(lo) + " >= " + num(t.at("contrast_floor"))});
    return out;
  }
  if (res.id == "dejong-normal") {
    const auto f = res.rate("normal", "Bn");
    out.push_back({"Normal-sequence Bn slope", f && f->slope < t.at("bn_slope_max"),
                   f ? "slope " + num(f->slope) + " < " + num(t.at("bn_slope_max")) : "no fitted rate"});
    out.push_back(at_most("Normal Kolmogorov distance at largest n", ks_series(res, "normal").back(), t.at("ks_max")));
    double lo = INFINITY;
    for (const StudyRow* r : res.leg("gamma")) lo = std::min(lo, report_value(*r, "Bn"));
    out.push_back({"Gamma-sequence Bn bounded below", lo >= t.at("gamma_bn_min"),
                   "min " + num(lo) + " >= " + num(t.at("gamma_bn_min"))});
    return out;
  }
  if (res.id == "hybrid-gn") return hybrid_verdicts(res, "normal", t);
  if (res.id == "hybrid-gp") return hybrid_verdicts(res, "poisson", t);
  throw std::invalid_argument("unknown study id '" + res.id + "'");
}

ExperimentResult identity_result(const std::vector<IdentityCheck>& checks, std::uint64_t seed) {
  ExperimentResult res;
  res.id = "identity-suite";
  res.claim = "exact algebraic, pathwise and moment identities of the library";
  res.seed = seed;
  for (const auto& c : checks) {
    StudyRow r;
    r.leg = c.name;
    r.replications = c.trials;
    r.values["max_error"] = c.max_error;
    r.values["tolerance"] = c.tolerance;
    r.values["passed"] = c.passed ? 1.0 : 0.0;
    res.rows.push_back(std::move(r));
  }
  return res;
}

std::vector<IdentityCheck> run_identity_suite(const ExperimentConfig& cfg) {
  const std::uint64_t seed = cfg.study.seed;
  auto out = algebra_identities(seed, cfg.identity_trials);
  for (auto& c : pathwise_identities(seed, cfg.identity_replications)) out.push_back(c);
  for (auto& c : isometry_checks(seed, cfg.moment_replications, cfg.study.workers)) out.push_back(c);
  for (auto& c : moment_oracle_checks(seed, cfg.moment_replications, cfg.study.workers)) out.push_back(c);
  return out;
}

}  // namespace pchaos::cli
