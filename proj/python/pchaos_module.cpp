#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cmath>

#include "pchaos/cli.hpp"
#include "pchaos/contract.hpp"
#include "pchaos/stein_gamma.hpp"

namespace py = pybind11;
using namespace pchaos;

namespace {

py::dict report_dict(const BoundReport& r) {
  py::dict d;
  for (const auto& [k, v] : r.flat()) d[py::str(k)] = std::isnan(v) ? py::none() : py::object(py::float_(v));
  py::list diag;
  for (const auto& [k, v] : r.diagnostics) diag.append(py::make_tuple(k, v));
  d["diagnostics"] = diag;
  return d;
}

Kernel kernel_from_config(const std::string& text, double n, const std::string& base_dir) {
  const cli::ExperimentConfig cfg = cli::parse_config(text, base_dir);
  if (!cfg.study.kernel) throw std::invalid_argument("config has no [kernel] section");
  return cfg.study.kernel(n);
}

std::vector<double> sample_integral(const Kernel& f, long reps, std::uint64_t seed, int workers) {
  if (reps < 1) throw std::invalid_argument("reps must be positive");
  std::vector<double> out(static_cast<std::size_t>(reps));
  const bool compiled = f.repr() == Repr::Separable && f.space().mode() == Mode::Grid;
  std::optional<CompiledKernel> ck;
  if (compiled) ck.emplace(f);
  parallel_replications(reps, workers, seed, "python/sample_integral", [&](long r, Rng& rng) {
    const PoissonSample s = sample(f.space(), rng);
    out[static_cast<std::size_t>(r)] = ck ? ck->integral(s) : multiple_integral_eval(f, s);
  });
  return out;
}

py::dict run_config(const std::string& text, const std::string& out_dir, std::optional<std::uint64_t> seed,
                    std::optional<int> workers, const std::string& base_dir) {
  cli::ExperimentConfig cfg = cli::parse_config(text, base_dir);
  if (seed) cfg.study.seed = *seed;
  if (workers) cfg.study.workers = *workers;
  cli::RunOutcome o;
  {
    py::gil_scoped_release release;
    o = cli::run(cfg, out_dir);
  }
  py::list verdicts;
  for (const auto& v : o.verdicts) verdicts.append(py::dict(py::arg("name") = v.name, py::arg("passed") = v.passed,
                                                            py::arg("detail") = v.detail));
  py::list rates;
  for (const auto& r : o.result.rates)
    rates.append(py::dict(py::arg("leg") = r.leg, py::arg("column") = r.column, py::arg("slope") = r.fit.slope,
                          py::arg("stderr") = r.fit.stderr_slope));
  return py::dict(py::arg("id") = o.result.id, py::arg("claim") = o.result.claim, py::arg("verdicts") = verdicts,
                  py::arg("rates") = rates, py::arg("files") = o.files, py::arg("passed") = o.all_passed(),
                  py::arg("wall_seconds") = o.wall_seconds);
}

}  // namespace

PYBIND11_MODULE(pchaos, m) {
  m.doc() = "Gamma, Normal and hybrid approximation of Poisson functionals";

  py::register_exception<cli::ConfigError>(m, "ConfigError", PyExc_ValueError);

  py::class_<Kernel>(m, "Kernel")
      .def_property_readonly("order", &Kernel::order)
      .def_property_readonly("intensity", [](const Kernel& k) { return k.space().intensity(); })
      .def_property_readonly("atoms", [](const Kernel& k) { return k.space().node_count(); })
      .def("scaled", &Kernel::scaled, py::arg("c"))
      .def("__repr__", [](const Kernel& k) {
        return "<pchaos.Kernel order=" + std::to_string(k.order()) + " n=" + std::to_string(k.space().intensity()) + ">";
      });

  m.def("gamma_block_kernel", &gamma_block_kernel, py::arg("n"), py::arg("nu") = 1,
        "Gamma-limit kernel: nu orthonormal blocks over n, variance 2 nu.");
  m.def("contrast_kernel", &contrast_kernel, py::arg("n"), "Variance-2 kernel whose Gamma defect stays positive.");
  m.def("normal_sequence_kernel", &normal_sequence_kernel, py::arg("n"), py::arg("cells_exponent") = 0.6,
        "Variance-2 kernel with a Normal limit.");
  m.def("kernel_from_config", &kernel_from_config, py::arg("text"), py::arg("n"), py::arg("base_dir") = ".",
        "Kernel of a config's [space] and [kernel] sections at intensity n.");

  m.def("norm2", &norm2, py::arg("f"));
  m.def("contraction_norm", [](const Kernel& f, int r, int l) { return norm(contract(f, f, r, l)); }, py::arg("f"),
        py::arg("r"), py::arg("l"), "Norm of the (r, l) contraction of f with itself.");
  m.def("c_q_constant", &c_q_constant, py::arg("q"));
  m.def("middle_contraction_defect", &middle_contraction_defect, py::arg("f"));
  m.def("third_moment", &third_moment_I2, py::arg("f"), "Exact E I_2(f)^3.");
  m.def("fourth_moment", &fourth_moment_I2, py::arg("f"), "Exact E I_2(f)^4.");
  m.def("three_moment_criterion", &three_moment_criterion, py::arg("f"), py::arg("nu"));

  m.def("dejong_report", [](const Kernel& h, std::optional<double> nu) { return report_dict(dejong_report(h, nu)); },
        py::arg("h"), py::arg("nu") = py::none());
  m.def("gamma_bound_report", [](const Kernel& f, double nu) { return report_dict(gamma_bound_report(f, nu)); },
        py::arg("f"), py::arg("nu"));

  m.def("gamma_cdf", [](double nu, double x) { return cdf(GammaTarget{nu}, x); }, py::arg("nu"), py::arg("x"),
        "CDF of the centred Gamma law with parameter nu.");
  m.def("gamma_moment", [](double nu, int k) { return moment(GammaTarget{nu}, k); }, py::arg("nu"), py::arg("k"));

  m.def("sample_integral", &sample_integral, py::arg("f"), py::arg("reps"), py::arg("seed") = 1, py::arg("workers") = 1,
        "Pathwise multiple integral I_q(f) over independent Poisson samples.");

  m.def("fit_rate",
        [](const std::vector<std::pair<double, double>>& pts) {
          const RateFit f = fit_rate(pts);
          return py::make_tuple(f.slope, f.stderr_slope, f.intercept);
        },
        py::arg("points"), "Least-squares slope of log(value) on log(n): (slope, stderr, intercept).");

  m.def("study_ids", &study_ids);
  m.def("builtin_config", &cli::builtin_config_text, py::arg("id"));
  m.def("run", &run_config, py::arg("config_text"), py::arg("out_dir"), py::arg("seed") = py::none(),
        py::arg("workers") = py::none(), py::arg("base_dir") = ".",
        "Run a study config and write its artifacts into out_dir.");
}
