#include "heatctl/gram.hpp"

#include "heatctl/detail/overlap.hpp"
#include "heatctl/highprec.hpp"
#include "sym_eig.hpp"

#include <cmath>
#include <numbers>

namespace heatctl {

namespace {

void check_block(const Basis& basis, const Region& omega, int N) {
  if (omega.dim() != basis.domain.dim())
    throw ConfigError("control region dimension does not match basis");
  if (N < 1 || N > basis.size())
    throw ConfigError("observed block size out of range");
}

} // namespace

Matrix gram_matrix(const Basis& basis, const Region& omega, int N) {
  check_block(basis, omega, N);
  const int M = basis.size();
  const int d = basis.domain.dim();
  const double pi = std::numbers::pi;

  Matrix G(M, N);
  for (int j = 0; j < N; ++j) {
    for (int i = 0; i < M; ++i) {
      G(i, j) = detail::mode_overlap(basis.modes[static_cast<size_t>(i)].index,
                                     basis.modes[static_cast<size_t>(j)].index,
                                     d, omega.lo.data(), omega.hi.data(),
                                     basis.domain.lengths.data(), pi);
    }
  }
  // The top block is symmetric by construction; enforce exact symmetry so the
  // closed-loop matrix downstream is bit-symmetric.
  for (int j = 0; j < N; ++j)
    for (int i = 0; i < j; ++i) G(i, j) = G(j, i);
  return G;
}

Matrix observed_block(const Basis& basis, const Region& omega, int N) {
  check_block(basis, omega, N);
  return gram_matrix(basis, omega, N).topRows(N);
}

MinEig min_eig_observed(const Basis& basis, const Region& omega, int N) {
  check_block(basis, omega, N);
  MinEig out;
  if (N <= kHighPrecMaxN) {
    PrecisionEig r = min_eig_observed_hp(basis, omega, N);
    out.value = r.value;
    out.log_value = r.log_value;
    out.high_precision = true;
    return out;
  }
  Vector w = internal::sym_eigenvalues(observed_block(basis, omega, N));
  const double mn = w(0);
  if (!(mn > 0.0))
    throw NumericalError(
        "observed block min eigenvalue below double resolution; the block is "
        "too large for the high-precision path (N > 64)");
  out.value = mn;
  out.log_value = std::log(mn);
  out.high_precision = false;
  return out;
}

double operator_norm(const Matrix& G) {
  // Power iteration on G^T G with a fixed start vector. G has full column
  // rank for every region/basis pair we form (modes restricted to an open box
  // are linearly independent), so convergence to sigma_max is clean.
  const Index n = G.cols();
  Vector v = Vector::Constant(n, 1.0 / std::sqrt(static_cast<double>(n)));
  double s2 = 0.0;
  for (int it = 0; it < 300; ++it) {
    Vector w = G.transpose() * (G * v);
    const double nw = w.norm();
    if (nw == 0.0) return 0.0;
    w /= nw;
    const double prev = s2;
    s2 = nw;
    v = w;
    if (it > 4 && std::abs(s2 - prev) <= 1e-14 * s2) break;
  }
  return std::sqrt(s2);
}

} // namespace heatctl
