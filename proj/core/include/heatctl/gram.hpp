#pragma once

#include "heatctl/basis.hpp"

namespace heatctl {

// Rectangular observation matrix G in R^{M x N}: G(i,j) = (e_i, e_j)_{L2(omega)}
// with the modes normalized in L2(domain). Row range covers the whole resolved
// basis, column range the N lowest modes the feedback acts on.
Matrix gram_matrix(const Basis& basis, const Region& omega, int N);

// Symmetric top block J_N = (G(i,j))_{i,j <= N}.
Matrix observed_block(const Basis& basis, const Region& omega, int N);

// Smallest eigenvalue of J_N together with its natural log. For N up to
// kHighPrecMaxN the eigensolve runs at ~80 decimal digits, which resolves
// values far below the double noise floor (the desk-scale fit needs values
// near 1e-58). Above that cap a double symmetric solve is used and values at
// or below double resolution raise NumericalError.
struct MinEig {
  double value = 0.0;     // 0.0 when only the log is representable
  double log_value = 0.0;
  bool high_precision = false;
};

inline constexpr int kHighPrecMaxN = 64;

MinEig min_eig_observed(const Basis& basis, const Region& omega, int N);

// Largest singular value, deterministic power iteration on G^T G.
double operator_norm(const Matrix& G);

} // namespace heatctl
