#pragma once

#include <array>

namespace heatctl::detail {

// Closed form for the scaled one-axis overlap
//   (2/L) int_a^b sin(m pi x / L) sin(n pi x / L) dx,
// valid for m, n >= 1 and 0 <= a < b <= L. Templated so the same expression
// serves double and multiprecision evaluation; `pi` is supplied at the
// caller's working precision.
template <class Real>
Real axis_overlap(int m, int n, const Real& a, const Real& b, const Real& L,
                  const Real& pi) {
  using std::sin;
  const Real w = pi / L;
  if (m == n) {
    return (b - a) / L - (sin(2 * m * w * b) - sin(2 * m * w * a)) / (2 * m * pi);
  }
  const int p = m - n;
  const int q = m + n;
  return (sin(p * w * b) - sin(p * w * a)) / (p * pi) -
         (sin(q * w * b) - sin(q * w * a)) / (q * pi);
}

// Product over axes for box modes; idx arrays carry 1 on unused axes.
template <class Real>
Real mode_overlap(const std::array<int, 3>& mi, const std::array<int, 3>& ni,
                  int dim, const Real* lo, const Real* hi, const Real* len,
                  const Real& pi) {
  Real v(1);
  for (int k = 0; k < dim; ++k) {
    v *= axis_overlap(mi[static_cast<size_t>(k)], ni[static_cast<size_t>(k)],
                      lo[k], hi[k], len[k], pi);
  }
  return v;
}

} // namespace heatctl::detail
