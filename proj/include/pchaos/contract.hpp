#pragma once

#include <utility>
#include <vector>

#include "pchaos/space.hpp"

namespace pchaos {

// f *_r^l g: identify r variables, integrate l of them against mu_n.
// Result order 2q - r - l, not symmetrized. Separable x Separable stays Separable;
// any DenseGrid input gives DenseGrid.
Kernel contract(const Kernel& f, const Kernel& g, int r, int l);

// Average over all argument permutations. Idempotent.
Kernel symmetrize(const Kernel& f);

// <f, g> and ||f||^2 under mu_n^q.
double inner(const Kernel& f, const Kernel& g);
double norm2(const Kernel& f);
double norm(const Kernel& f);

// G_p^q f = sum over (r, l) with 2q - r - l = p of r! C(q,r)^2 C(r,l) (f ~*_r^l f).
// For p = 0 this is the scalar q! ||f||^2.
Kernel product_kernel(const Kernel& f, int p);

// c_q = 4 / ((q/2)! C(q, q/2)^2), q even.
double c_q_constant(int q);

// || f ~*_{q/2}^{q/2} f - c_q f ||, q even.
double middle_contraction_defect(const Kernel& f);

// Linear algebra on kernels of equal order on the same measure.
Kernel add(const Kernel& a, const Kernel& b);
Kernel linear_combination(const std::vector<std::pair<double, Kernel>>& parts);

// Materialize on the atom grid (Grid mode).
Kernel to_dense(const Kernel& f);

// Integrate the last `count` arguments of a symmetric kernel against mu
// (intensity ignored) or mu_n (intensity included).
Kernel integrate_last(const Kernel& f, int count, bool include_intensity);

// z -> f(z, .): the order q-1 section at a point (closed form or atom).
Kernel section(const Kernel& f, const double* z);
Kernel section_at_node(const Kernel& f, std::size_t node);

// c0^2 + sum_q q! ||f_q||^2.
double chaos_norm2(const ChaosExpansion& F);

}  // namespace pchaos
