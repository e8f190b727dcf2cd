#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <vector>

#include "pchaos/rng.hpp"

namespace pchaos {

using Point = std::vector<double>;
using PointFn = std::function<double(const double*)>;
using PointSampler = std::function<void(Rng&, double*)>;

enum class Mode { Grid, Continuum };

// Finite control measure mu together with the intensity n, so that the measure
// in force is mu_n = n * mu.
//
// Both modes carry a set of quadrature nodes with weights for mu. In Grid mode
// the nodes are the atoms. In Continuum mode they are only used to integrate
// closed-form factors; points are drawn from the sampler.
class MeasureSpace {
 public:
  MeasureSpace() = default;

  Mode mode() const { return data_->mode; }
  int dim() const { return data_->dim; }
  double base_mass() const { return data_->mass; }
  double intensity() const { return intensity_; }
  std::size_t node_count() const { return data_->weights.size(); }
  const double* node(std::size_t k) const { return data_->coords.data() + k * static_cast<std::size_t>(data_->dim); }
  const std::vector<double>& weights() const { return data_->weights; }

  MeasureSpace with_intensity(double n) const;
  bool same_nodes(const MeasureSpace& other) const { return data_ == other.data_; }
  bool same_measure(const MeasureSpace& other) const {
    return same_nodes(other) && intensity_ == other.intensity_;
  }
  bool valid() const { return static_cast<bool>(data_); }

  // Exact coordinate match against the atoms (Grid mode only).
  std::optional<std::size_t> find_atom(const double* x) const;

  // One point from the probability mu / mu(Z). Grid mode draws an atom by weight.
  void draw(Rng& rng, double* out) const;
  std::size_t draw_atom(Rng& rng) const;
  bool has_sampler() const { return static_cast<bool>(data_->sampler); }

 private:
  struct Data {
    Mode mode = Mode::Grid;
    int dim = 1;
    std::vector<double> coords;
    std::vector<double> weights;
    double mass = 0.0;
    PointSampler sampler;
    std::map<std::vector<double>, std::size_t> atom_index;
    std::vector<double> cumulative;
  };
  std::shared_ptr<const Data> data_;
  double intensity_ = 1.0;

  friend MeasureSpace make_grid_space(const std::vector<Point>&, const std::vector<double>&, double);
  friend MeasureSpace make_continuum_space(int, PointSampler, const std::vector<Point>&,
                                           const std::vector<double>&, double);
};

MeasureSpace make_grid_space(const std::vector<Point>& points, const std::vector<double>& weights,
                             double intensity);

// Continuum space: `quad_nodes` / `quad_weights` must integrate against mu.
MeasureSpace make_continuum_space(int dim, PointSampler sampler, const std::vector<Point>& quad_nodes,
                                  const std::vector<double>& quad_weights, double intensity);

// mu = uniform probability on (a, b), with a composite Gauss-Legendre rule
// (`panels` equal panels, 8 nodes each) for integrating closed-form factors.
MeasureSpace make_uniform_interval(double a, double b, double intensity, int panels = 64);

// Grid of `cells` equal cells on (a, b); atoms at cell midpoints, weight 1/cells each.
MeasureSpace make_cell_grid(double a, double b, int cells, double intensity);

// One-variable factor: its values at the quadrature nodes, plus an optional
// closed form that allows evaluation off the nodes.
std::uint64_t next_factor_serial();

struct Factor {
  std::vector<double> values;
  PointFn fn;
  // Creation order; gives factor lists an ordering that does not depend on addresses.
  std::uint64_t serial = next_factor_serial();
};
using FactorPtr = std::shared_ptr<const Factor>;

inline bool factor_before(const FactorPtr& a, const FactorPtr& b) { return a->serial < b->serial; }

FactorPtr make_factor(const MeasureSpace& space, PointFn fn);
FactorPtr make_grid_factor(const MeasureSpace& space, std::vector<double> values);

// Value of a factor at an arbitrary point (closed form, or atom lookup).
double eval_factor(const Factor& g, const MeasureSpace& space, const double* x);

// Integral of a factor against mu_n (intensity included).
double integrate_factor(const Factor& g, const MeasureSpace& space);

// A separable term: coefficient times the tensor product of its factors.
struct Term {
  double coef = 0.0;
  std::vector<FactorPtr> factors;
};

enum class Repr { Separable, DenseGrid };

// A function of `order` variables on a MeasureSpace.
//
// Separable: the literal sum of terms. Constructed through `Kernel::separable`
// the term list is expanded over all argument permutations, so the sum is
// itself symmetric. DenseGrid: row-major values over atom tuples.
class Kernel {
 public:
  Kernel() = default;

  static Kernel separable(const MeasureSpace& space, int order, std::vector<Term> terms,
                          bool symmetrize_terms = true);
  static Kernel dense(const MeasureSpace& space, int order, std::vector<double> values,
                      bool symmetric = true);
  static Kernel scalar(const MeasureSpace& space, double value);
  static Kernel zero(const MeasureSpace& space, int order);

  int order() const { return order_; }
  Repr repr() const { return repr_; }
  const MeasureSpace& space() const { return space_; }
  const std::vector<Term>& terms() const { return terms_; }
  const std::vector<double>& dense_values() const { return dense_; }
  bool symmetric() const { return symmetric_; }
  bool is_scalar() const { return order_ == 0; }
  double scalar_value() const;

  // Same kernel under a different intensity on the same nodes.
  Kernel on(const MeasureSpace& space) const;
  Kernel scaled(double c) const;

  std::size_t dense_size() const;

 private:
  int order_ = 0;
  Repr repr_ = Repr::Separable;
  MeasureSpace space_;
  std::vector<Term> terms_;
  std::vector<double> dense_;
  bool symmetric_ = true;

  friend class KernelBuilder;
};

// Internal constructor access for the algebra routines.
class KernelBuilder {
 public:
  static Kernel separable_raw(const MeasureSpace& space, int order, std::vector<Term> terms, bool symmetric);
  static Kernel dense_raw(const MeasureSpace& space, int order, std::vector<double> values, bool symmetric);
};

// Value of the symmetrized kernel at `args` (one coordinate vector per argument).
double eval_kernel(const Kernel& f, const std::vector<Point>& args);
// Value of the literal kernel at node indices (Grid atoms or quadrature nodes).
double eval_kernel_nodes(const Kernel& f, const std::vector<std::size_t>& nodes);

namespace detail {
// Expand a term list over all argument permutations (weights 1/q!), merging
// terms whose factor sequences coincide.
std::vector<Term> symmetrize_terms(const std::vector<Term>& terms, int order);
// Merge identical factor sequences, then drop terms with
// |coef| < rel_tol * max |coef| (and exact zeros).
std::vector<Term> merge_and_prune(std::vector<Term> terms, double rel_tol = 1e-14);
}  // namespace detail

// F = constant + sum_q I_q(components[q]).
struct ChaosExpansion {
  double constant = 0.0;
  std::map<int, Kernel> components;
};

}  // namespace pchaos
