#include "sym_eig.hpp"

#include <lapacke.h>

namespace heatctl::internal {

Vector sym_eigenvalues(Matrix A) {
  const auto n = static_cast<lapack_int>(A.rows());
  Vector w(n);
  lapack_int info = LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'N', 'L', n, A.data(), n,
                                   w.data());
  if (info != 0)
    throw NumericalError("symmetric eigensolve failed (dsyevd info=" +
                         std::to_string(info) + ")");
  return w;
}

SymEig sym_eigendecompose(Matrix A) {
  const auto n = static_cast<lapack_int>(A.rows());
  Vector w(n);
  lapack_int info = LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'V', 'L', n, A.data(), n,
                                   w.data());
  if (info != 0)
    throw NumericalError("symmetric eigensolve failed (dsyevd info=" +
                         std::to_string(info) + ")");
  return SymEig{std::move(w), std::move(A)};
}

} // namespace heatctl::internal
