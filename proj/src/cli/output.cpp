#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <unistd.h>

#include <boost/version.hpp>
#include "json.hpp"

#include "pchaos/cli.hpp"
#include "pchaos/chaos_sim.hpp"

#ifndef PCHAOS_VERSION
#define PCHAOS_VERSION "0.0.0"
#endif

namespace pchaos::cli {

namespace fs = std::filesystem;
using nlohmann::json;

const char* const kCsvSchema = "pchaos-csv/1";

namespace {

const std::vector<std::string> kLeading = {"schema", "study", "leg", "n", "replications"};
const std::vector<std::string> kDistance = {"kolmogorov", "d3_lower", "emp_mean", "emp_variance", "emp_third", "emp_fourth"};
const std::vector<std::string> kReport = {
    "nu",       "q",        "variance", "variance_gap",     "sigma2",           "contraction_1_0",
    "contraction_1_1", "contraction_2_0", "contraction_2_1", "middle_defect", "a1_exact", "a3_bound",
    "a4_bound", "a5",       "Bn",       "Cn",               "Bn_depoissonized", "Cn_depoissonized",
    "final_bound", "max_form", "k_assembled"};

std::string fmt(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  out.close();
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

std::string utc_timestamp() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

json effective_config(const ExperimentConfig& cfg) {
  const StudyConfig& s = cfg.study;
  json j = {{"id", s.id}, {"seed", s.seed}, {"workers", s.workers}};
  if (s.id == "identity-suite") {
    j["trials"] = cfg.identity_trials;
    j["replications"] = cfg.identity_replications;
    j["moment_replications"] = cfg.moment_replications;
  } else {
    j["n"] = s.n_values;
    j["replications"] = s.replications;
    j["nu"] = s.nu;
    j["cells_exponent"] = s.cells_exponent;
    j["normal_order"] = s.normal_order;
    j["radius_exponent"] = s.radius_exponent;
    j["depoisson_replications"] = s.depoisson_replications;
    j["keep_samples"] = s.keep_samples;
    j["kernel"] = cfg.kernel ? "config" : "built-in";
  }
  j["tolerances"] = default_tolerances(s.id);
  for (const auto& [k, v] : cfg.tolerances) j["tolerances"][k] = v;
  return j;
}

json versions() {
  return {{"pchaos", PCHAOS_VERSION},
          {"csv_schema", kCsvSchema},
          {"compiler", __VERSION__},
          {"cxx_standard", __cplusplus},
          {"boost", BOOST_LIB_VERSION},
          {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                std::to_string(NLOHMANN_JSON_VERSION_PATCH)}};
}

std::string rate_text(const ExperimentResult& res, const FittedRate& fr) {
  std::string s = "# " + res.id + " " + fr.leg + " " + fr.column + " slope " + fmt(fr.fit.slope) + " stderr " +
                  fmt(fr.fit.stderr_slope) + " intercept " + fmt(fr.fit.intercept) + "\n";
  s += "n\t" + fr.column + "\n";
  for (const StudyRow* r : res.leg(fr.leg)) {
    double v = std::nan("");
    if (fr.column == "kolmogorov" && r->distances)
      v = r->distances->kolmogorov;
    else if (r->values.count(fr.column))
      v = r->values.at(fr.column);
    else if (r->report)
      for (const auto& [k, x] : r->report->flat())
        if (k == fr.column) v = x;
    if (std::isnan(v)) continue;
    s += fmt(r->n) + "\t" + fmt(v) + "\n";
  }
  return s;
}

}  // namespace

const std::vector<std::string>& csv_columns() {
  static const std::vector<std::string> cols = [] {
    std::vector<std::string> c = kLeading;
    c.insert(c.end(), kDistance.begin(), kDistance.end());
    c.insert(c.end(), kReport.begin(), kReport.end());
    const auto& v = study_value_columns();
    c.insert(c.end(), v.begin(), v.end());
    return c;
  }();
  return cols;
}

std::string csv_text(const ExperimentResult& res) {
  const auto& cols = csv_columns();
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < cols.size(); ++i) index[cols[i]] = i;
  std::string out;
  for (std::size_t i = 0; i < cols.size(); ++i) out += (i ? "," : "") + cols[i];
  out += "\n";
  for (const StudyRow& r : res.rows) {
    std::vector<std::string> f(cols.size());
    auto put = [&](const std::string& key, double v) {
      const auto it = index.find(key);
      if (it == index.end()) throw std::logic_error("column '" + key + "' is not in " + std::string(kCsvSchema));
      f[it->second] = std::isnan(v) ? "" : fmt(v);
    };
    f[0] = quote(kCsvSchema);
    f[1] = quote(res.id);
    f[2] = quote(r.leg);
    f[3] = fmt(r.n);
    f[4] = std::to_string(r.replications);
    if (r.distances) {
      const DistanceRecord& d = *r.distances;
      put("kolmogorov", d.kolmogorov);
      put("d3_lower", d.d3_lower);
      put("emp_mean", d.mean);
      put("emp_variance", d.variance);
      put("emp_third", d.third);
      put("emp_fourth", d.fourth);
    }
    if (r.report)
      for (const auto& [k, v] : r.report->flat())
        if (k != "n") put(k, v);
    for (const auto& [k, v] : r.values) put(k, v);
    for (std::size_t i = 0; i < f.size(); ++i) out += (i ? "," : "") + f[i];
    out += "\n";
  }
  return out;
}

std::vector<std::vector<std::string>> read_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string cell;
  bool quoted = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"' && i + 1 < text.size() && text[i + 1] == '"') {
        cell += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cell += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      row.push_back(cell);
      cell.clear();
    } else if (c == '\n') {
      row.push_back(cell);
      rows.push_back(row);
      row.clear();
      cell.clear();
    } else if (c != '\r') {
      cell += c;
    }
  }
  if (quoted) throw std::runtime_error(path + ": unterminated quoted field");
  if (!cell.empty() || !row.empty()) {
    row.push_back(cell);
    rows.push_back(row);
  }
  return rows;
}

bool RunOutcome::all_passed() const {
  for (const auto& v : verdicts)
    if (!v.passed) return false;
  return true;
}

RunOutcome run(const ExperimentConfig& cfg, const std::string& out_dir) {
  const auto t0 = std::chrono::steady_clock::now();
  const fs::path dir(out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw std::runtime_error("output path is not a writable directory: " + out_dir);
  const fs::path tmp = dir / (".pchaos-tmp-" + cfg.study.id + "-" + std::to_string(::getpid()));
  fs::remove_all(tmp, ec);
  if (!fs::create_directory(tmp, ec) || ec) throw std::runtime_error("output path is not writable: " + out_dir);

  try {
    RunOutcome o;
    if (cfg.study.id == "identity-suite")
      o.result = identity_result(run_identity_suite(cfg), cfg.study.seed);
    else
      o.result = run_study(cfg.study);
    o.verdicts = study_verdicts(o.result, cfg.tolerances);
    const ExperimentResult& res = o.result;

    std::vector<std::string> names;
    const std::string csv = res.id + ".csv";
    write_text(tmp / csv, csv_text(res));
    names.push_back(csv);
    json rates = json::array();
    for (const auto& fr : res.rates) {
      const std::string file = res.id + ".rate." + fr.leg + "." + fr.column + ".tsv";
      write_text(tmp / file, rate_text(res, fr));
      names.push_back(file);
      rates.push_back({{"leg", fr.leg},
                       {"column", fr.column},
                       {"slope", fr.fit.slope},
                       {"stderr", fr.fit.stderr_slope},
                       {"intercept", fr.fit.intercept},
                       {"file", file}});
    }
    if (!res.samples.empty()) {
      const std::string file = res.id + ".samples.pchs";
      write_pchs((tmp / file).string(), res.sample_names, res.samples);
      names.push_back(file);
    }
    json verdicts = json::array();
    for (const auto& v : o.verdicts) verdicts.push_back({{"name", v.name}, {"passed", v.passed}, {"detail", v.detail}});
    const std::string manifest = res.id + ".manifest.json";
    names.push_back(manifest);
    o.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    json m = {{"schema", "pchaos-manifest/1"},
              {"study", res.id},
              {"claim", res.claim},
              {"seed", res.seed},
              {"workers", cfg.study.workers},
              {"config", effective_config(cfg)},
              {"config_text", cfg.source_text},
              {"versions", versions()},
              {"stream_rule", "splitmix64(splitmix64(splitmix64(seed) ^ fnv1a(tag)) ^ (worker + 1)) seeds a 64-bit Mersenne Twister per (tag, worker)"},
              {"wall_seconds", o.wall_seconds},
              {"timestamp", utc_timestamp()},
              {"files", names},
              {"rates", rates},
              {"verdicts", verdicts},
              {"all_passed", o.all_passed()}};
    write_text(tmp / manifest, m.dump(2) + "\n");

    for (const auto& n : names) {
      fs::rename(tmp / n, dir / n);
      o.files.push_back((dir / n).string());
    }
    fs::remove_all(tmp, ec);
    return o;
  } catch (...) {
    fs::remove_all(tmp, ec);
    throw;
  }
}

RateFit rate_from_csv(const std::string& path, const std::string& leg, const std::string& column) {
  const auto rows = read_csv(path);
  if (rows.empty()) throw std::runtime_error(path + ": empty CSV");
  const auto& head = rows[0];
  auto col = [&](const std::string& name) {
    for (std::size_t i = 0; i < head.size(); ++i)
      if (head[i] == name) return i;
    throw std::invalid_argument(path + ": no column '" + name + "'");
  };
  const std::size_t il = col("leg"), in = col("n"), iv = col(column);
  std::vector<std::pair<double, double>> pts;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.size() != head.size()) throw std::runtime_error(path + ": row " + std::to_string(r + 1) + " has the wrong width");
    if (row[il] != leg || row[iv].empty()) continue;
    pts.emplace_back(std::stod(row[in]), std::stod(row[iv]));
  }
  if (pts.empty()) throw std::invalid_argument(path + ": no values of '" + column + "' for leg '" + leg + "'");
  return fit_rate(pts);
}

std::string bound_json(const ExperimentConfig& cfg) {
  const StudyConfig& s = cfg.study;
  if (s.n_values.empty()) throw std::invalid_argument("bound: the config needs an n schedule");
  KernelFamily fam = s.kernel;
  if (!fam) {
    const int nu = static_cast<int>(std::lround(s.nu));
    if (nu < 1 || std::abs(s.nu - nu) > 1e-12)
      throw std::invalid_argument("bound: the built-in kernel needs a positive integer nu");
    fam = [nu](double n) { return gamma_block_kernel(n, nu); };
  }
  json out = {{"nu", s.nu}, {"reports", json::array()}};
  for (double n : s.n_values) {
    const Kernel h = fam(n);
    const bool degenerate = h.order() == 2 && degeneracy_defect(h) < 1e-10;
    const BoundReport rep = degenerate ? gamma_leg_report(h, s.nu) : gamma_bound_report(h, s.nu);
    json r = {{"n", n}, {"kind", degenerate ? "degenerate-u-statistic" : "multiple-integral"}};
    for (const auto& [k, v] : rep.flat()) r["values"][k] = std::isnan(v) ? json(nullptr) : json(v);
    json diag = json::array();
    for (const auto& [k, v] : rep.diagnostics) diag.push_back({{"name", k}, {"value", v}});
    r["diagnostics"] = diag;
    r["methods"] = rep.method_tags;
    out["reports"].push_back(r);
  }
  return out.dump(2) + "\n";
}

}  // namespace pchaos::cli
