#include <cstdio>
#include <iostream>

#include "CLI11.hpp"
#include "pchaos/cli.hpp"

namespace {

using namespace pchaos;
using namespace pchaos::cli;

struct Common {
  std::string config;
  std::string study;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::string out;
};

void add_common(CLI::App* app, Common& c, bool with_study) {
  app->add_option("--config", c.config, "Experiment config file");
  if (with_study) app->add_option("--study", c.study, "Built-in study id (used when --config is absent)");
  app->add_option("--seed", c.seed, "Override the config seed");
  app->add_option("--workers", c.workers, "Worker threads")->check(CLI::Range(1, 1024));
  app->add_option("--out", c.out, "Output directory (defaults to the config's output)");
}

ExperimentConfig resolve(const Common& c, const std::string& fallback) {
  ExperimentConfig cfg;
  if (!c.config.empty())
    cfg = load_config(c.config);
  else
    cfg = builtin_config(c.study.empty() ? fallback : c.study);
  if (c.seed) cfg.study.seed = *c.seed;
  if (c.workers) cfg.study.workers = *c.workers;
  return cfg;
}

int report(const RunOutcome& o) {
  for (const auto& v : o.verdicts) std::printf("%s  %s  (%s)\n", v.passed ? "PASS" : "FAIL", v.name.c_str(), v.detail.c_str());
  for (const auto& f : o.files) std::printf("wrote %s\n", f.c_str());
  std::printf("%s: %s in %.1f s\n", o.result.id.c_str(), o.all_passed() ? "all checks passed" : "some checks failed",
              o.wall_seconds);
  return o.all_passed() ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gamma, Normal and hybrid approximation of Poisson functionals"};
  app.require_subcommand(1);

  Common check_opts, bound_opts, sim_opts;
  CLI::App* check = app.add_subcommand("check", "Run the identity suite; exit 0 iff every identity holds");
  add_common(check, check_opts, false);
  CLI::App* bound = app.add_subcommand("bound", "Print bound reports of the config kernel as JSON");
  add_common(bound, bound_opts, true);
  CLI::App* sim = app.add_subcommand("simulate", "Run a study and write CSV, manifest and rate files");
  add_common(sim, sim_opts, true);

  std::string csv, leg, column;
  CLI::App* rate = app.add_subcommand("rate", "Fit a log-log rate from an existing CSV");
  rate->add_option("csv", csv, "CSV written by simulate")->required();
  rate->add_option("--leg", leg, "Row kind to fit")->required();
  rate->add_option("--column", column, "Column to fit against n")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*check) {
      ExperimentConfig cfg = resolve(check_opts, "identity-suite");
      if (cfg.study.id != "identity-suite") throw ConfigError(0, "check runs the identity-suite study only");
      if (check_opts.out.empty()) {
        const auto res = identity_result(run_identity_suite(cfg), cfg.study.seed);
        bool ok = true;
        for (const auto& v : study_verdicts(res)) {
          std::printf("%s  %s  (%s)\n", v.passed ? "PASS" : "FAIL", v.name.c_str(), v.detail.c_str());
          ok = ok && v.passed;
        }
        return ok ? 0 : 3;
      }
      return report(run(cfg, check_opts.out));
    }
    if (*bound) {
      const ExperimentConfig cfg = resolve(bound_opts, "gamma-ustat");
      std::cout << bound_json(cfg);
      return 0;
    }
    if (*sim) {
      const ExperimentConfig cfg = resolve(sim_opts, "gamma-ustat");
      return report(run(cfg, sim_opts.out.empty() ? cfg.output : sim_opts.out));
    }
    if (*rate) {
      const RateFit f = rate_from_csv(csv, leg, column);
      std::printf("slope %.17g\nstderr %.17g\nintercept %.17g\n", f.slope, f.stderr_slope, f.intercept);
      return 0;
    }
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 1;
}
