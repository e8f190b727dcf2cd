#include <algorithm>
#include <cctype>
#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "pchaos/cli.hpp"

namespace pchaos::cli {

namespace fs = std::filesystem;

ConfigError::ConfigError(int line, const std::string& msg)
    : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + msg : msg), line_(line) {}

const IniEntry* IniSection::find(const std::string& key) const {
  const IniEntry* hit = nullptr;
  for (const auto& e : entries)
    if (e.key == key) hit = &e;
  return hit;
}

std::vector<const IniEntry*> IniSection::all(const std::string& key) const {
  std::vector<const IniEntry*> out;
  for (const auto& e : entries)
    if (e.key == key) out.push_back(&e);
  return out;
}

const IniSection* IniDocument::section(const std::string& name) const {
  for (const auto& s : sections)
    if (s.name == name) return &s;
  return nullptr;
}

namespace {

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep)) out.push_back(trim(cur));
  if (!s.empty() && s.back() == sep) out.push_back("");
  return out;
}

double to_double(const std::string& s, int line, const std::string& what) {
  const std::string t = trim(s);
  if (t.empty()) throw ConfigError(line, what + ": empty number");
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(t.c_str(), &end);
  if (end != t.c_str() + t.size() || errno == ERANGE || !std::isfinite(v))
    throw ConfigError(line, what + ": not a finite number: '" + t + "'");
  return v;
}

long to_long(const std::string& s, int line, const std::string& what) {
  const double v = to_double(s, line, what);
  if (v != std::floor(v) || std::abs(v) > 9e15) throw ConfigError(line, what + ": not an integer: '" + trim(s) + "'");
  return static_cast<long>(v);
}

std::uint64_t to_u64(const std::string& s, int line, const std::string& what) {
  const std::string t = trim(s);
  if (t.empty() || !std::all_of(t.begin(), t.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); }))
    throw ConfigError(line, what + ": not an unsigned integer: '" + t + "'");
  errno = 0;
  const unsigned long long v = std::strtoull(t.c_str(), nullptr, 10);
  if (errno == ERANGE) throw ConfigError(line, what + ": out of range");
  return v;
}

bool to_bool(const std::string& s, int line, const std::string& what) {
  const std::string t = trim(s);
  if (t == "true" || t == "yes" || t == "1") return true;
  if (t == "false" || t == "no" || t == "0") return false;
  throw ConfigError(line, what + ": expected true or false");
}

std::vector<double> to_list(const std::string& s, int line, const std::string& what) {
  std::vector<double> out;
  for (const auto& part : split(s, ',')) out.push_back(to_double(part, line, what));
  return out;
}

std::vector<double> read_numbers(const fs::path& path, int line) {
  std::ifstream in(path);
  if (!in) throw ConfigError(line, "cannot read data file " + path.string());
  std::vector<double> out;
  std::string tok;
  while (in >> tok) out.push_back(to_double(tok, line, path.string()));
  return out;
}

void check_keys(const IniSection& sec, const std::set<std::string>& allowed, const std::string& prefix = "") {
  for (const auto& e : sec.entries) {
    if (allowed.count(e.key)) continue;
    if (!prefix.empty() && e.key.rfind(prefix, 0) == 0) continue;
    throw ConfigError(e.line, "unknown key '" + e.key + "' in [" + sec.name + "]");
  }
}

// name(arg, arg, ...)
FactorSpec parse_factor(const std::string& name, const std::string& def, int line, const fs::path& base) {
  const std::string t = trim(def);
  const auto open = t.find('(');
  if (open == std::string::npos || t.back() != ')') throw ConfigError(line, "factor '" + name + "': expected kind(args)");
  FactorSpec f;
  f.name = name;
  f.kind = trim(t.substr(0, open));
  const std::string inner = trim(t.substr(open + 1, t.size() - open - 2));
  const std::string what = "factor '" + name + "'";
  if (f.kind == "vector") {
    if (inner.empty()) throw ConfigError(line, what + ": vector needs a file path");
    f.path = inner;
    const fs::path p = fs::path(inner).is_absolute() ? fs::path(inner) : base / inner;
    f.args = read_numbers(p, line);
    if (f.args.empty()) throw ConfigError(line, what + ": empty vector file");
    return f;
  }
  if (!inner.empty()) f.args = to_list(inner, line, what);
  std::size_t want = 0;
  if (f.kind == "indicator")
    want = 2;
  else if (f.kind == "scaled-indicator")
    want = 3;
  else if (f.kind == "sign")
    want = 0;
  else if (f.kind == "polynomial") {
    if (f.args.empty()) throw ConfigError(line, what + ": polynomial needs at least one coefficient");
    return f;
  } else
    throw ConfigError(line, what + ": unknown kind '" + f.kind + "'");
  if (f.args.size() != want)
    throw ConfigError(line, what + ": " + f.kind + " takes " + std::to_string(want) + " arguments");
  return f;
}

SpaceSpec parse_space(const IniSection& sec) {
  check_keys(sec, {"type", "a", "b", "cells", "points", "weights"});
  SpaceSpec s;
  if (const auto* e = sec.find("type")) s.type = e->value;
  const int tl = sec.find("type") ? sec.find("type")->line : sec.line;
  if (s.type != "interval" && s.type != "cells" && s.type != "grid")
    throw ConfigError(tl, "space type must be interval, cells or grid");
  if (s.type == "grid") {
    const auto* p = sec.find("points");
    const auto* w = sec.find("weights");
    if (!p || !w) throw ConfigError(sec.line, "grid space needs points and weights");
    s.points = to_list(p->value, p->line, "points");
    s.weights = to_list(w->value, w->line, "weights");
    if (s.points.size() != s.weights.size()) throw ConfigError(w->line, "points and weights differ in length");
    for (double x : s.weights)
      if (!(x > 0)) throw ConfigError(w->line, "weights must be positive");
    return s;
  }
  if (const auto* e = sec.find("a")) s.a = to_double(e->value, e->line, "a");
  if (const auto* e = sec.find("b")) s.b = to_double(e->value, e->line, "b");
  if (!(s.b > s.a)) throw ConfigError(sec.line, "space needs a < b");
  if (s.type == "cells") {
    const auto* e = sec.find("cells");
    if (!e) throw ConfigError(sec.line, "cells space needs a cell count");
    const long c = to_long(e->value, e->line, "cells");
    if (c < 1 || c > 1000000) throw ConfigError(e->line, "cells must lie in [1, 1e6]");
    s.cells = static_cast<int>(c);
  }
  return s;
}

KernelSpec parse_kernel(const IniSection& sec, const SpaceSpec& space, const fs::path& base) {
  check_keys(sec, {"form", "order", "scale", "scale_power", "term", "file"}, "factor.");
  KernelSpec k;
  if (const auto* e = sec.find("form")) k.form = e->value;
  if (k.form != "rank" && k.form != "grid")
    throw ConfigError(sec.find("form")->line, "kernel form must be rank or grid");
  if (const auto* e = sec.find("order")) {
    const long q = to_long(e->value, e->line, "order");
    if (q < 1 || q > 6) throw ConfigError(e->line, "order must lie in [1, 6]");
    k.order = static_cast<int>(q);
  }
  if (const auto* e = sec.find("scale")) k.scale = to_double(e->value, e->line, "scale");
  if (const auto* e = sec.find("scale_power")) k.scale_power = to_double(e->value, e->line, "scale_power");
  if (k.form == "grid") {
    if (space.type == "interval") throw ConfigError(sec.line, "grid-form kernels need a cells or grid space");
    const auto* e = sec.find("file");
    if (!e) throw ConfigError(sec.line, "grid-form kernel needs a file");
    const fs::path p = fs::path(e->value).is_absolute() ? fs::path(e->value) : base / e->value;
    k.grid_values = read_numbers(p, e->line);
    const std::size_t atoms = space.type == "cells" ? static_cast<std::size_t>(space.cells) : space.points.size();
    std::size_t want = 1;
    for (int i = 0; i < k.order; ++i) want *= atoms;
    if (k.grid_values.size() != want)
      throw ConfigError(e->line, "grid file has " + std::to_string(k.grid_values.size()) + " values, expected " +
                                     std::to_string(want));
    return k;
  }
  std::set<std::string> names;
  for (const auto& e : sec.entries) {
    if (e.key.rfind("factor.", 0) != 0) continue;
    const std::string name = e.key.substr(7);
    if (name.empty()) throw ConfigError(e.line, "factor needs a name");
    if (!names.insert(name).second) throw ConfigError(e.line, "factor '" + name + "' defined twice");
    k.factors.push_back(parse_factor(name, e.value, e.line, base));
    if (k.factors.back().kind == "vector" && space.type == "interval")
      throw ConfigError(e.line, "vector factors need a cells or grid space");
  }
  for (const IniEntry* e : sec.all("term")) {
    std::istringstream is(e->value);
    std::string tok;
    if (!(is >> tok)) throw ConfigError(e->line, "empty term");
    const double c = to_double(tok, e->line, "term coefficient");
    std::vector<std::string> fac;
    while (is >> tok) {
      if (!names.count(tok)) throw ConfigError(e->line, "unknown factor '" + tok + "'");
      fac.push_back(tok);
    }
    if (static_cast<int>(fac.size()) != k.order)
      throw ConfigError(e->line, "term has " + std::to_string(fac.size()) + " factors, kernel order is " +
                                     std::to_string(k.order));
    k.terms.emplace_back(c, fac);
  }
  if (k.terms.empty()) throw ConfigError(sec.line, "rank-form kernel needs at least one term");
  return k;
}

PointFn factor_function(const FactorSpec& f) {
  const auto a = f.args;
  if (f.kind == "indicator") return [a](const double* x) { return x[0] >= a[0] && x[0] < a[1] ? 1.0 : 0.0; };
  if (f.kind == "scaled-indicator")
    return [a](const double* x) { return x[0] >= a[1] && x[0] < a[2] ? a[0] : 0.0; };
  if (f.kind == "sign") return [](const double* x) { return x[0] > 0 ? 1.0 : (x[0] < 0 ? -1.0 : 0.0); };
  return [a](const double* x) {
    double v = 0.0;
    for (std::size_t i = a.size(); i-- > 0;) v = v * x[0] + a[i];
    return v;
  };
}

}  // namespace

IniDocument parse_ini(const std::string& text) {
  IniDocument doc;
  std::istringstream in(text);
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    std::string s = raw;
    const auto hash = s.find_first_of("#;");
    if (hash != std::string::npos) s = s.substr(0, hash);
    s = trim(s);
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']') throw ConfigError(line, "unterminated section header");
      const std::string name = trim(s.substr(1, s.size() - 2));
      if (name.empty()) throw ConfigError(line, "empty section name");
      if (doc.section(name)) throw ConfigError(line, "section [" + name + "] repeated");
      doc.sections.push_back({name, line, {}});
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError(line, "expected 'key = value'");
    const std::string key = trim(s.substr(0, eq));
    if (key.empty()) throw ConfigError(line, "missing key");
    if (doc.sections.empty()) throw ConfigError(line, "entry before any section header");
    doc.sections.back().entries.push_back({key, trim(s.substr(eq + 1)), line});
  }
  return doc;
}

MeasureSpace build_space(const SpaceSpec& spec, double n) {
  if (spec.type == "interval") return make_uniform_interval(spec.a, spec.b, n);
  if (spec.type == "cells") return make_cell_grid(spec.a, spec.b, spec.cells, n);
  std::vector<Point> pts;
  for (double x : spec.points) pts.push_back({x});
  return make_grid_space(pts, spec.weights, n);
}

Kernel build_kernel(const SpaceSpec& space, const KernelSpec& k, double n) {
  const MeasureSpace sp = build_space(space, n);
  const double scale = k.scale * std::pow(n, k.scale_power);
  if (k.form == "grid") return Kernel::dense(sp, k.order, k.grid_values).scaled(scale);
  std::map<std::string, FactorPtr> made;
  for (const auto& f : k.factors) {
    if (f.kind == "vector") {
      if (f.args.size() != sp.node_count())
        throw std::invalid_argument("factor '" + f.name + "': " + std::to_string(f.args.size()) + " values for " +
                                    std::to_string(sp.node_count()) + " atoms");
      made[f.name] = make_grid_factor(sp, f.args);
    } else {
      made[f.name] = make_factor(sp, factor_function(f));
    }
  }
  std::vector<Term> terms;
  for (const auto& [c, names] : k.terms) {
    Term t{c * scale, {}};
    for (const auto& nm : names) t.factors.push_back(made.at(nm));
    terms.push_back(std::move(t));
  }
  return Kernel::separable(sp, k.order, std::move(terms));
}

ExperimentConfig parse_config(const std::string& text, const std::string& base_dir) {
  const IniDocument doc = parse_ini(text);
  const fs::path base(base_dir);
  for (const auto& s : doc.sections)
    if (s.name != "study" && s.name != "space" && s.name != "kernel" && s.name != "tolerances")
      throw ConfigError(s.line, "unknown section [" + s.name + "]");
  const IniSection* st = doc.section("study");
  if (!st) throw ConfigError(0, "missing [study] section");
  check_keys(*st, {"id", "n", "replications", "seed", "workers", "nu", "output", "cells_exponent", "normal_order",
                   "radius_exponent", "depoisson_replications", "keep_samples", "trials", "moment_replications"});

  ExperimentConfig cfg;
  cfg.source_text = text;
  StudyConfig& sc = cfg.study;
  const IniEntry* id = st->find("id");
  if (!id) throw ConfigError(st->line, "[study] needs an id");
  const auto& ids = study_ids();
  if (std::find(ids.begin(), ids.end(), id->value) == ids.end())
    throw ConfigError(id->line, "unknown study id '" + id->value + "'");
  sc.id = id->value;
  const bool identity = sc.id == "identity-suite";

  if (const auto* e = st->find("seed")) sc.seed = to_u64(e->value, e->line, "seed");
  if (const auto* e = st->find("workers")) {
    const long w = to_long(e->value, e->line, "workers");
    if (w < 1 || w > 1024) throw ConfigError(e->line, "workers must lie in [1, 1024]");
    sc.workers = static_cast<int>(w);
  }
  if (const auto* e = st->find("output")) cfg.output = e->value;
  if (const auto* e = st->find("replications")) {
    sc.replications = to_long(e->value, e->line, "replications");
    const long floor = identity ? 1 : 100;
    if (sc.replications < floor)
      throw ConfigError(e->line, "replications must be at least " + std::to_string(floor));
  }
  if (identity) {
    cfg.identity_replications = sc.replications;
    if (const auto* e = st->find("trials")) {
      cfg.identity_trials = to_long(e->value, e->line, "trials");
      if (cfg.identity_trials < 1) throw ConfigError(e->line, "trials must be positive");
    }
    if (const auto* e = st->find("moment_replications")) {
      cfg.moment_replications = to_long(e->value, e->line, "moment_replications");
      if (cfg.moment_replications < 100) throw ConfigError(e->line, "moment_replications must be at least 100");
    }
  } else {
    for (const char* key : {"trials", "moment_replications"})
      if (const auto* e = st->find(key)) throw ConfigError(e->line, std::string(key) + " applies to identity-suite only");
  }
  if (const auto* e = st->find("n")) {
    sc.n_values = to_list(e->value, e->line, "n");
    for (std::size_t i = 0; i < sc.n_values.size(); ++i) {
      if (!(sc.n_values[i] > 0)) throw ConfigError(e->line, "n values must be positive");
      if (i > 0 && !(sc.n_values[i] > sc.n_values[i - 1]))
        throw ConfigError(e->line, "n schedule must be strictly increasing");
    }
  } else if (!identity) {
    throw ConfigError(st->line, "[study] needs an n schedule");
  }
  if (const auto* e = st->find("nu")) {
    sc.nu = to_double(e->value, e->line, "nu");
    if (!(sc.nu > 0)) throw ConfigError(e->line, "nu must be positive");
  }
  if (const auto* e = st->find("cells_exponent")) {
    sc.cells_exponent = to_double(e->value, e->line, "cells_exponent");
    if (!(sc.cells_exponent > 0 && sc.cells_exponent < 1)) throw ConfigError(e->line, "cells_exponent must lie in (0, 1)");
  }
  if (const auto* e = st->find("normal_order")) {
    const long q = to_long(e->value, e->line, "normal_order");
    if (q < 1 || q > 6) throw ConfigError(e->line, "normal_order must lie in [1, 6]");
    try {
      check_hybrid_orders(2, static_cast<int>(q));
    } catch (const std::invalid_argument& ex) {
      throw ConfigError(e->line, ex.what());
    }
    sc.normal_order = static_cast<int>(q);
  }
  if (const auto* e = st->find("radius_exponent")) {
    sc.radius_exponent = to_double(e->value, e->line, "radius_exponent");
    if (!(sc.radius_exponent < 0)) throw ConfigError(e->line, "radius_exponent must be negative");
  }
  if (const auto* e = st->find("depoisson_replications")) {
    sc.depoisson_replications = to_long(e->value, e->line, "depoisson_replications");
    if (sc.depoisson_replications < 0) throw ConfigError(e->line, "depoisson_replications must be nonnegative");
  }
  if (const auto* e = st->find("keep_samples")) sc.keep_samples = to_bool(e->value, e->line, "keep_samples");

  const IniSection* sp = doc.section("space");
  const IniSection* kn = doc.section("kernel");
  if (kn && !sp) throw ConfigError(kn->line, "[kernel] needs a [space] section");
  if (sp && !kn) throw ConfigError(sp->line, "[space] needs a [kernel] section");
  if (kn) {
    if (sc.id == "hybrid-gn" || sc.id == "hybrid-gp" || identity)
      throw ConfigError(kn->line, "study '" + sc.id + "' uses built-in kernels only");
    cfg.space = parse_space(*sp);
    cfg.kernel = parse_kernel(*kn, *cfg.space, base);
    if (cfg.kernel->order != 2) throw ConfigError(kn->line, "study kernels must have order 2");
    const SpaceSpec space = *cfg.space;
    const KernelSpec kernel = *cfg.kernel;
    sc.kernel = [space, kernel](double n) { return build_kernel(space, kernel, n); };
  }

  const auto defaults = default_tolerances(sc.id);
  if (const IniSection* tol = doc.section("tolerances")) {
    for (const auto& e : tol->entries) {
      if (!defaults.count(e.key)) throw ConfigError(e.line, "unknown tolerance '" + e.key + "' for " + sc.id);
      cfg.tolerances[e.key] = to_double(e.value, e.line, e.key);
    }
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(0, "cannot read config file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  const fs::path parent = fs::path(path).parent_path();
  return parse_config(ss.str(), parent.empty() ? "." : parent.string());
}

std::string builtin_config_text(const std::string& id) {
  const std::string gamma_schedule = "n = 100, 400, 1600, 6400, 25600\n";
  const std::string hybrid_schedule = "n = 2, 8, 32, 128, 32768\n";
  if (id == "identity-suite")
    return "[study]\nid = identity-suite\nseed = 20240601\ntrials = 50\nreplications = 1000\n"
           "moment_replications = 200000\n";
  if (id == "gamma-ustat")
    return "[study]\nid = gamma-ustat\n" + gamma_schedule +
           "replications = 100000\nseed = 20240601\nnu = 1\ndepoisson_replications = 2000\n"
           "\n# e (x) e / n with e = (1, -1) on two cells of (-1, 1)\n"
           "[space]\ntype = cells\na = -1\nb = 1\ncells = 2\n"
           "\n[kernel]\nform = rank\norder = 2\nscale_power = -1\nfactor.e = sign()\nterm = 1 e e\n";
  if (id == "three-moment")
    return "[study]\nid = three-moment\n" + gamma_schedule + "replications = 10000\nseed = 20240601\nnu = 1\n";
  if (id == "dejong-normal")
    return "[study]\nid = dejong-normal\n" + gamma_schedule +
           "replications = 100000\nseed = 20240601\nnu = 1\ncells_exponent = 0.6\n";
  if (id == "hybrid-gn")
    return "[study]\nid = hybrid-gn\n" + hybrid_schedule +
           "replications = 200000\nseed = 20240601\nnormal_order = 3\ncells_exponent = 0.6\n";
  if (id == "hybrid-gp")
    return "[study]\nid = hybrid-gp\n" + hybrid_schedule + "replications = 100000\nseed = 20240601\nradius_exponent = -2\n";
  throw std::invalid_argument("no built-in config for '" + id + "'");
}

ExperimentConfig builtin_config(const std::string& id) { return parse_config(builtin_config_text(id)); }

}  // namespace pchaos::cli
