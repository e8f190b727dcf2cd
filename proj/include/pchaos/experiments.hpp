#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pchaos/bounds.hpp"
#include "pchaos/chaos_sim.hpp"
#include "pchaos/identities.hpp"
#include "pchaos/rate.hpp"

namespace pchaos {

// Order-2 kernel of the Gamma leg as a function of the intensity n.
using KernelFamily = std::function<Kernel(double n)>;

struct StudyConfig {
  std::string id;
  std::vector<double> n_values;
  long replications = 10000;
  std::uint64_t seed = 1;
  int workers = 1;
  double nu = 1.0;
  double cells_exponent = 0.6;    // dejong-normal, hybrid-gn: about n^cells_exponent blocks
  int normal_order = 3;           // hybrid-gn
  double radius_exponent = -2.0;  // hybrid-gp: r = n^radius_exponent
  long depoisson_replications = 2000;
  KernelFamily kernel;  // empty: built-in block kernel with nu blocks
  bool keep_samples = false;
};

struct StudyRow {
  std::string leg;
  double n = 0.0;
  long replications = 0;
  std::optional<DistanceRecord> distances;
  std::optional<BoundReport> report;
  std::map<std::string, double> values;
};

struct FittedRate {
  std::string leg;
  std::string column;
  RateFit fit;
};

struct ExperimentResult {
  std::string id;
  std::string claim;
  std::uint64_t seed = 0;
  int workers = 1;
  std::vector<StudyRow> rows;  // sorted by (n, leg)
  std::vector<FittedRate> rates;
  std::vector<std::string> sample_names;
  std::vector<std::vector<double>> samples;

  std::vector<const StudyRow*> leg(const std::string& name) const;
  const StudyRow& row(const std::string& leg, double n) const;
  std::optional<RateFit> rate(const std::string& leg, const std::string& column) const;
};

// Closed list of the extra per-row columns the studies may emit.
const std::vector<std::string>& study_value_columns();
const std::vector<std::string>& study_ids();

// 2m equal cells on (-1, 1) at intensity n, with e_k = sqrt(m) (1_{2k} - 1_{2k+1}),
// k < m: orthonormal and centred under the uniform law.
MeasureSpace block_space(int m, double n);
std::vector<FactorPtr> block_factors(const MeasureSpace& cells, int m);
// coef * sum_k e_k^{(x) q}.
Kernel block_kernel(const MeasureSpace& cells, int m, int q, double coef);

// Gamma(nu) sequence for integer nu: sum of nu blocks over n, variance 2 nu and
// h *_1^1 h = h exactly.
Kernel gamma_block_kernel(double n, int nu);
// Two blocks scaled to variance 2: middle contraction equals h / sqrt(2), so the
// Gamma defect stays bounded away from zero.
Kernel contrast_kernel(double n);
// m = round(n^cells_exponent) blocks scaled to variance 2; fourth-moment ratio -> 0.
Kernel normal_sequence_kernel(double n, double cells_exponent);
int normal_sequence_blocks(double n, double cells_exponent);

// de Jong report with the Gamma bound quantities filled in.
BoundReport gamma_leg_report(const Kernel& h, double nu);
// Order constraint of the hybrid theorems: q1 != 2 q2 and q2 != 2 q1.
void check_hybrid_orders(int q1, int q2);

ExperimentResult gamma_ustat_study(const StudyConfig& cfg);
ExperimentResult three_moment_study(const StudyConfig& cfg);
ExperimentResult dejong_normal_study(const StudyConfig& cfg);
ExperimentResult hybrid_gn_study(const StudyConfig& cfg);
ExperimentResult hybrid_gp_study(const StudyConfig& cfg);
// Monte Carlo moments 2, 3 and 4 of I_2(f) against their exact values for the
// three built-in kernels (Gamma block, contrast, polynomial on an interval).
// Errors are in standard errors; the tolerance is 3.
std::vector<IdentityCheck> moment_oracle_checks(std::uint64_t seed, long reps, int workers = 1);
// Sample mean of I_q(f) against 0 and of I_q(f)^2 against q! |f|^2 for each
// built-in kernel family. Errors are in standard errors; the tolerance is 3.
std::vector<IdentityCheck> isometry_checks(std::uint64_t seed, long reps, int workers = 1);

// Dispatch on cfg.id (the simulation studies only).
ExperimentResult run_study(const StudyConfig& cfg);

}  // namespace pchaos
