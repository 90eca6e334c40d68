#pragma once

// Thin LAPACKE dsyevd wrappers, internal to the library. Column-major in and
// out matches Eigen's default storage so matrices pass through untouched.

#include "heatctl/types.hpp"

namespace heatctl::internal {

// Eigenvalues only, ascending. A is consumed.
Vector sym_eigenvalues(Matrix A);

struct SymEig {
  Vector values;  // ascending
  Matrix vectors; // columns
};

// Full symmetric eigendecomposition. A is consumed.
SymEig sym_eigendecompose(Matrix A);

} // namespace heatctl::internal
