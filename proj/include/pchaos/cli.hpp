#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "pchaos/experiments.hpp"
#include "pchaos/identities.hpp"

namespace pchaos::cli {

// Parse error carrying the 1-based line of the offending input (0 when the
// problem is not tied to a line, e.g. a missing section).
class ConfigError : public std::runtime_error {
 public:
  ConfigError(int line, const std::string& msg);
  int line() const { return line_; }

 private:
  int line_;
};

struct IniEntry {
  std::string key;
  std::string value;
  int line = 0;
};

struct IniSection {
  std::string name;
  int line = 0;
  std::vector<IniEntry> entries;  // in file order; keys may repeat

  const IniEntry* find(const std::string& key) const;
  std::vector<const IniEntry*> all(const std::string& key) const;
};

struct IniDocument {
  std::vector<IniSection> sections;
  const IniSection* section(const std::string& name) const;
};

// Line-oriented "key = value" text with "[section]" headers; '#' and ';' start
// comments. Entries before the first header are an error.
IniDocument parse_ini(const std::string& text);

// [space]: type = interval (a, b) | cells (a, b, cells) | grid (points, weights).
struct SpaceSpec {
  std::string type = "interval";
  double a = -1.0, b = 1.0;
  int cells = 2;
  std::vector<double> points, weights;
};

// One factor of a rank-form kernel: indicator(a, b), scaled-indicator(c, a, b),
// polynomial(c0, c1, ...), sign(), or vector(path) with one value per atom.
struct FactorSpec {
  std::string name;
  std::string kind;
  std::vector<double> args;
  std::string path;
};

// [kernel]: form = rank (factor.NAME = ..., repeated "term = coef NAME NAME ...")
// or form = grid (file = path, whitespace-separated values over atom tuples).
// Every coefficient is multiplied by scale * n^scale_power.
struct KernelSpec {
  std::string form = "rank";
  int order = 2;
  double scale = 1.0;
  double scale_power = 0.0;
  std::vector<FactorSpec> factors;
  std::vector<std::pair<double, std::vector<std::string>>> terms;
  std::vector<double> grid_values;
};

MeasureSpace build_space(const SpaceSpec& spec, double n);
Kernel build_kernel(const SpaceSpec& space, const KernelSpec& kernel, double n);

struct ExperimentConfig {
  StudyConfig study;
  std::optional<SpaceSpec> space;
  std::optional<KernelSpec> kernel;
  std::string output = "out";
  std::map<std::string, double> tolerances;
  long identity_trials = 50;
  long identity_replications = 1000;
  // Monte Carlo moment checks need far more draws than the exact pathwise ones.
  long moment_replications = 200000;
  std::string source_text;
};

// `base_dir` resolves relative data-file paths in the config.
ExperimentConfig parse_config(const std::string& text, const std::string& base_dir = ".");
ExperimentConfig load_config(const std::string& path);
// The shipped configuration of a built-in study.
std::string builtin_config_text(const std::string& id);
ExperimentConfig builtin_config(const std::string& id);

struct Verdict {
  std::string name;
  bool passed = false;
  std::string detail;
};

// Default tolerances of a study, keyed as in the [tolerances] section.
std::map<std::string, double> default_tolerances(const std::string& id);
std::vector<Verdict> study_verdicts(const ExperimentResult& res, const std::map<std::string, double>& overrides = {});

ExperimentResult identity_result(const std::vector<IdentityCheck>& checks, std::uint64_t seed);
// Every identity check of the library, at the trial counts of the config.
std::vector<IdentityCheck> run_identity_suite(const ExperimentConfig& cfg);

// CSV of per-row results: closed, versioned column set, 17 significant digits.
extern const char* const kCsvSchema;
const std::vector<std::string>& csv_columns();
std::string csv_text(const ExperimentResult& res);
// Header plus rows as strings (quoted fields unquoted).
std::vector<std::vector<std::string>> read_csv(const std::string& path);

struct RunOutcome {
  ExperimentResult result;
  std::vector<Verdict> verdicts;
  std::vector<std::string> files;
  double wall_seconds = 0.0;
  bool all_passed() const;
};

// Run the study and write `<id>.csv`, `<id>.manifest.json`, rate files and
// optionally `<id>.samples.pchs` into `out_dir`. Nothing is left behind if
// any step fails.
RunOutcome run(const ExperimentConfig& cfg, const std::string& out_dir);

// Fit from a CSV written by `run`: rows of `leg`, log(column) against log(n).
RateFit rate_from_csv(const std::string& path, const std::string& leg, const std::string& column);

// JSON text of a bound report for the kernel of the config at each n.
std::string bound_json(const ExperimentConfig& cfg);

}  // namespace pchaos::cli
