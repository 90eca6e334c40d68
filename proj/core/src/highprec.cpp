#include "heatctl/highprec.hpp"

#include "heatctl/detail/overlap.hpp"
#include "heatctl/gram.hpp"

#include <boost/multiprecision/cpp_bin_float.hpp>

#include <vector>

namespace heatctl {

namespace {

using mpfloat =
    boost::multiprecision::number<boost::multiprecision::cpp_bin_float<80>>;

// Cyclic-by-row Jacobi, eigenvalues only. Deterministic: fixed sweep order,
// no pivot search, fixed convergence threshold. A is dense symmetric n x n,
// destroyed in place.
mpfloat jacobi_min_eigenvalue(std::vector<mpfloat>& A, int n) {
  auto at = [&](int i, int j) -> mpfloat& {
    return A[static_cast<size_t>(i) * static_cast<size_t>(n) +
             static_cast<size_t>(j)];
  };

  mpfloat scale(0);
  for (int i = 0; i < n; ++i) scale = (std::max)(scale, abs(at(i, i)));
  if (scale == 0) scale = 1;
  // Off-diagonal mass below this is invisible next to the 1e-58-scale
  // eigenvalues we need at ~15 safe digits; the working type carries ~80.
  const mpfloat stop = scale * pow(mpfloat(10), -72);

  const int max_sweeps = 60;
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    mpfloat off_max(0);
    for (int p = 0; p < n - 1; ++p)
      for (int q = p + 1; q < n; ++q) off_max = (std::max)(off_max, abs(at(p, q)));
    if (off_max <= stop) break;

    for (int p = 0; p < n - 1; ++p) {
      for (int q = p + 1; q < n; ++q) {
        const mpfloat apq = at(p, q);
        if (abs(apq) <= stop / n) {
          at(p, q) = 0;
          at(q, p) = 0;
          continue;
        }
        const mpfloat theta = (at(q, q) - at(p, p)) / (2 * apq);
        mpfloat t;
        if (theta >= 0)
          t = 1 / (theta + sqrt(theta * theta + 1));
        else
          t = -1 / (-theta + sqrt(theta * theta + 1));
        const mpfloat c = 1 / sqrt(t * t + 1);
        const mpfloat s = t * c;

        const mpfloat app = at(p, p);
        const mpfloat aqq = at(q, q);
        at(p, p) = app - t * apq;
        at(q, q) = aqq + t * apq;
        at(p, q) = 0;
        at(q, p) = 0;
        for (int k = 0; k < n; ++k) {
          if (k == p || k == q) continue;
          const mpfloat akp = at(k, p);
          const mpfloat akq = at(k, q);
          at(k, p) = c * akp - s * akq;
          at(p, k) = at(k, p);
          at(k, q) = s * akp + c * akq;
          at(q, k) = at(k, q);
        }
      }
    }
  }

  mpfloat mn = at(0, 0);
  for (int i = 1; i < n; ++i) mn = (std::min)(mn, at(i, i));
  return mn;
}

} // namespace

PrecisionEig min_eig_observed_hp(const Basis& basis, const Region& omega, int N) {
  if (N < 1 || N > basis.size())
    throw ConfigError("observed block size out of range");
  if (N > kHighPrecMaxN)
    throw ConfigError("high-precision eigensolve capped at N <= 64");

  const int d = basis.domain.dim();
  const mpfloat pi = acos(mpfloat(-1));
  std::vector<mpfloat> lo(static_cast<size_t>(d)), hi(static_cast<size_t>(d)),
      len(static_cast<size_t>(d));
  for (int k = 0; k < d; ++k) {
    lo[static_cast<size_t>(k)] = omega.lo[static_cast<size_t>(k)];
    hi[static_cast<size_t>(k)] = omega.hi[static_cast<size_t>(k)];
    len[static_cast<size_t>(k)] = basis.domain.lengths[static_cast<size_t>(k)];
  }

  std::vector<mpfloat> A(static_cast<size_t>(N) * static_cast<size_t>(N));
  for (int i = 0; i < N; ++i) {
    for (int j = i; j < N; ++j) {
      mpfloat v = detail::mode_overlap(basis.modes[static_cast<size_t>(i)].index,
                                       basis.modes[static_cast<size_t>(j)].index,
                                       d, lo.data(), hi.data(), len.data(), pi);
      A[static_cast<size_t>(i) * static_cast<size_t>(N) + static_cast<size_t>(j)] = v;
      A[static_cast<size_t>(j) * static_cast<size_t>(N) + static_cast<size_t>(i)] = v;
    }
  }

  const mpfloat mn = jacobi_min_eigenvalue(A, N);
  if (!(mn > 0))
    throw NumericalError(
        "observed block min eigenvalue not resolved even at high precision");
  PrecisionEig out;
  out.value = static_cast<double>(mn); // may underflow to 0, log stays exact
  out.log_value = static_cast<double>(log(mn));
  return out;
}

} // namespace heatctl
