#pragma once

#include "heatctl/basis.hpp"

namespace heatctl {

// High-precision (~80 decimal digit) evaluation of the smallest eigenvalue of
// the N x N observed block. Assembly and the Jacobi eigensolve both run in
// extended precision; only the final value and its log are rounded to double.
// The value itself can underflow double (log_value stays meaningful).
struct PrecisionEig {
  double value;
  double log_value;
};

PrecisionEig min_eig_observed_hp(const Basis& basis, const Region& omega, int N);

} // namespace heatctl
