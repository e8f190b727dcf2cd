#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace pchaos {

// One exact identity checked over a number of random trials: the worst error
// seen against the tolerance it must meet.
struct IdentityCheck {
  std::string name;
  long trials = 0;
  double max_error = 0.0;
  double tolerance = 0.0;
  bool passed = false;
};

// Algebraic identities: symmetrized full-product norm, c_q constants, contraction
// norm symmetry, Gamma moments against quadrature, Stein equation residuals.
std::vector<IdentityCheck> algebra_identities(std::uint64_t seed, long trials = 50);

// Per-realization identities: product formula, add-one cost, U-statistic chaos
// decomposition, carre expansion. `reps` realizations each.
std::vector<IdentityCheck> pathwise_identities(std::uint64_t seed, long reps = 1000);

}  // namespace pchaos
