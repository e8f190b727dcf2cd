#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pchaos/rng.hpp"
#include "pchaos/space.hpp"
#include "pchaos/stein_gamma.hpp"

namespace pchaos {

// One realization of the Poisson process with intensity measure mu_n.
// Grid mode keeps a multiplicity per atom; Continuum mode keeps coordinates.
struct PoissonSample {
  MeasureSpace space;
  std::vector<long> counts;
  std::vector<double> coords;
  long count = 0;
  long duplicate_points = 0;  // Continuum only: points sharing coordinates with another

  std::vector<Point> points() const;
};

PoissonSample sample(const MeasureSpace& space, Rng& rng);
// Exactly `count` i.i.d. points from mu / mu(Z) (the fixed-size, de-Poissonized sample).
PoissonSample sample_fixed(const MeasureSpace& space, long count, Rng& rng);
// Build a sample from explicit points (Grid mode: every point must be an atom).
PoissonSample make_sample(const MeasureSpace& space, const std::vector<Point>& points);
PoissonSample add_point(const PoissonSample& s, const double* z);

// Poisson sample for mu = base_mass * uniform(a, b), generated left to right from
// exponential gaps, so the coordinates come out sorted. Same law as `sample`.
PoissonSample sample_sorted_interval(const MeasureSpace& space, double a, double b, Rng& rng);

// Sum of h over ordered k-tuples of distinct points.
double ustat_eval(const Kernel& h, const PoissonSample& s);

// Separable Grid-mode kernel prepared for repeated pathwise evaluation: every
// term only visits the atoms where one of its factors is nonzero, so kernels
// with many narrowly supported terms cost O(total support) per sample.
class CompiledKernel {
 public:
  explicit CompiledKernel(const Kernel& f);
  int order() const { return q_; }
  // I_q(f), same value as multiple_integral_eval.
  double integral(const PoissonSample& s) const;
  // Sum over ordered distinct tuples, same value as ustat_eval.
  double ustat(const PoissonSample& s) const;

 private:
  struct Compiled {
    double coef = 0.0;
    std::vector<FactorPtr> factors;
    std::vector<std::size_t> support;
    std::vector<double> means;  // integrals against mu_n
  };
  double eval(const PoissonSample& s, bool compensate) const;
  int q_ = 0;
  MeasureSpace space_;
  std::vector<Compiled> terms_;
};

// h_i = C(k, i) * integral of h over its last k - i arguments against mu (intensity ignored).
Kernel hoeffding_projection(const Kernel& h, int i);
// ||h_1|| under mu.
double degeneracy_defect(const Kernel& h);
// Smallest i with ||h_i|| > tol under mu; k when h is completely degenerate.
int hoeffding_rank(const Kernel& h, double tol = 1e-10);

// Pathwise I_q(f) under the compensated measure eta - mu_n.
double multiple_integral_eval(const Kernel& f, const PoissonSample& s);
double evaluate_expansion(const ChaosExpansion& F, const PoissonSample& s);

// D_z I_q(f) = q I_{q-1}(f(z, .)).
double derivative_eval(const Kernel& f, const PoissonSample& s, const double* z);

enum class Pattern { Edge, Triangle, Path };
// Induced copies of the pattern in the disk graph with edges at distance in (0, radius).
// Path counts induced paths on `path_vertices` vertices.
long disk_graph_stat(const PoissonSample& s, double radius, Pattern pattern, int path_vertices = 3);
// Edge count for points on the line, given unsorted coordinates.
long edge_count_1d(std::vector<double> xs, double radius);

struct Target {
  enum class Kind { Gamma, Normal, Poisson } kind = Kind::Gamma;
  double nu = 1.0;
  double lambda = 1.0;
  double cdf(double x) const;
  double expect(const std::function<double(double)>& h) const;
  std::string label() const;
};

struct DistanceRecord {
  double kolmogorov = 0.0;
  double d3_lower = 0.0;
  double mean = 0.0, variance = 0.0, third = 0.0, fourth = 0.0;  // raw moments 3 and 4
};

double kolmogorov_distance(std::vector<double> samples, const Target& target);
DistanceRecord empirical_distances(const std::vector<double>& samples, const Target& target);

// Power sums up to x^8, so that raw moments 1..4 carry standard errors.
// Merging is plain addition.
struct MomentAccumulator {
  long n = 0;
  double s[9] = {0, 0, 0, 0, 0, 0, 0, 0, 0};

  void add(double x);
  void merge(const MomentAccumulator& o);
  double raw(int k) const;
  double raw_se(int k) const;
  double variance() const;
};

// Max over a 5x5 grid of marginal quantiles of |F_joint - F_1 F_2|.
double product_gap(const std::vector<double>& a, const std::vector<double>& b);
// Sample correlation and its large-sample standard error under independence.
struct Correlation {
  double value = 0.0, se = 0.0;
};
Correlation correlation(const std::vector<double>& a, const std::vector<double>& b);

// Run fn(rep, rng) for rep in [0, reps) over `workers` threads. Worker w owns the
// contiguous block of replications [w R / W, (w+1) R / W) and the stream
// derive_stream(seed, tag, w), so results depend only on (seed, tag, reps, workers).
void parallel_replications(long reps, int workers, std::uint64_t seed, const std::string& tag,
                           const std::function<void(long, Rng&)>& fn);

// Raw per-replication columns as a little-endian binary file:
// "PCHS", u32 version, u32 column count, u64 row count, then per column
// u32 name length + name bytes, then each column as f64 values.
void write_pchs(const std::string& path, const std::vector<std::string>& names,
                const std::vector<std::vector<double>>& columns);
std::vector<std::vector<double>> read_pchs(const std::string& path, std::vector<std::string>* names = nullptr);

}  // namespace pchaos
