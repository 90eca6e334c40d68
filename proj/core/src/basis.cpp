#include "heatctl/basis.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace heatctl {

namespace {

void check_lengths(const std::vector<double>& lengths) {
  if (lengths.empty() || lengths.size() > 3)
    throw ConfigError("domain dimension must be 1, 2 or 3");
  for (double L : lengths)
    if (!(L > 0.0) || !std::isfinite(L))
      throw ConfigError("domain lengths must be positive and finite");
}

} // namespace

double Domain::volume() const {
  double v = 1.0;
  for (double L : lengths) v *= L;
  return v;
}

double Region::volume() const {
  double v = 1.0;
  for (size_t k = 0; k < lo.size(); ++k) v *= hi[k] - lo[k];
  return v;
}

Domain make_domain(const std::vector<double>& lengths) {
  check_lengths(lengths);
  return Domain{lengths};
}

Region make_region(const Domain& domain, const std::vector<double>& lo,
                   const std::vector<double>& hi) {
  if (lo.size() != hi.size() ||
      static_cast<int>(lo.size()) != domain.dim())
    throw ConfigError("control region dimension does not match domain");
  for (size_t k = 0; k < lo.size(); ++k) {
    if (!(lo[k] >= 0.0) || !(lo[k] < hi[k]) || !(hi[k] <= domain.lengths[k]))
      throw ConfigError("control region must satisfy 0 <= a < b <= L on every axis");
  }
  return Region{lo, hi};
}

Basis make_basis(const Domain& domain, int M) {
  check_lengths(domain.lengths);
  if (M < 1) throw ConfigError("mode count M must be at least 1");

  const int d = domain.dim();
  std::vector<Mode> modes;

  if (d == 1) {
    modes.reserve(static_cast<size_t>(M));
    const double w = std::numbers::pi / domain.lengths[0];
    for (int n = 1; n <= M; ++n) {
      Mode m;
      m.index[0] = n;
      m.tau = (n * w) * (n * w);
      modes.push_back(m);
    }
    return Basis{domain, std::move(modes)};
  }

  // Box case: enumerate a lattice cube guaranteed to contain the first M
  // modes, then sort and truncate. Per-axis cap: the M-th 1d frequency on the
  // shortest axis bounds tau_M, so n_k <= ceil(L_k/pi * sqrt(tau_cap)).
  double shortest = *std::min_element(domain.lengths.begin(), domain.lengths.end());
  const double w_min = std::numbers::pi / shortest;
  // tau for (M,1,..,1) on the shortest axis is an upper bound for the M-th
  // smallest tau overall.
  double tau_cap = (M * w_min) * (M * w_min) + (d - 1) * (w_min * w_min);
  std::array<int, 3> cap{1, 1, 1};
  for (int k = 0; k < d; ++k) {
    double wk = std::numbers::pi / domain.lengths[static_cast<size_t>(k)];
    cap[static_cast<size_t>(k)] =
        std::max(1, static_cast<int>(std::ceil(std::sqrt(tau_cap) / wk)) + 1);
  }

  for (int n1 = 1; n1 <= cap[0]; ++n1)
    for (int n2 = 1; n2 <= (d >= 2 ? cap[1] : 1); ++n2)
      for (int n3 = 1; n3 <= (d >= 3 ? cap[2] : 1); ++n3) {
        Mode m;
        m.index = {n1, n2, n3};
        double tau = 0.0;
        std::array<int, 3> idx{n1, n2, n3};
        for (int k = 0; k < d; ++k) {
          double wk = std::numbers::pi / domain.lengths[static_cast<size_t>(k)];
          tau += (idx[static_cast<size_t>(k)] * wk) * (idx[static_cast<size_t>(k)] * wk);
        }
        m.tau = tau;
        modes.push_back(m);
      }

  std::sort(modes.begin(), modes.end(), [](const Mode& a, const Mode& b) {
    if (a.tau != b.tau) return a.tau < b.tau;
    return a.index < b.index;
  });
  if (static_cast<int>(modes.size()) < M)
    throw NumericalError("mode enumeration cube too small"); // unreachable by construction
  modes.resize(static_cast<size_t>(M));
  return Basis{domain, std::move(modes)};
}

int count_modes(const Basis& basis, double lambda) {
  if (!(lambda > 0.0) || !std::isfinite(lambda))
    throw ConfigError("frequency threshold lambda must be positive and finite");
  if (lambda >= basis.tau_max())
    throw NumericalError(
        "truncation too small: lambda >= tau_M, the spectral gap above N(lambda) "
        "is not resolved; increase modes.M");
  int n = 0;
  for (const Mode& m : basis.modes) {
    if (m.tau <= lambda)
      ++n;
    else
      break;
  }
  return n;
}

double weyl_ratio(const Basis& basis, double lambda) {
  const int d = basis.domain.dim();
  const int N = count_modes(basis, lambda);
  double predicted;
  if (d == 1) {
    predicted = (basis.domain.lengths[0] / std::numbers::pi) * std::sqrt(lambda);
  } else {
    // omega_d = pi^{d/2} / Gamma(d/2 + 1)
    double omega_d = std::pow(std::numbers::pi, d / 2.0) / std::tgamma(d / 2.0 + 1.0);
    predicted = omega_d * basis.domain.volume() * std::pow(lambda, d / 2.0) /
                std::pow(2.0 * std::numbers::pi, d);
  }
  return static_cast<double>(N) / predicted;
}

} // namespace heatctl
