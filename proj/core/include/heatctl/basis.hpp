#pragma once

#include "heatctl/domain.hpp"

#include <array>
#include <vector>

namespace heatctl {

// One Dirichlet eigenfunction of -Laplace on the box: a multi-index n_k >= 1
// per axis, frequency tau = sum_k (n_k pi / L_k)^2.
struct Mode {
  std::array<int, 3> index{1, 1, 1}; // unused axes stay at 1
  double tau = 0.0;
};

// The first M eigenmodes ordered by increasing tau, ties broken
// lexicographically by multi-index so the ordering is total and reproducible.
struct Basis {
  Domain domain;
  std::vector<Mode> modes;

  int size() const { return static_cast<int>(modes.size()); }
  double tau(int i) const { return modes[static_cast<size_t>(i)].tau; }
  // Largest resolved frequency tau_M; spectral content above it is invisible.
  double tau_max() const { return modes.back().tau; }
};

Basis make_basis(const Domain& domain, int M);

// N(lambda): number of modes with tau <= lambda. Requires lambda < tau_M so
// that the strict gap tau_{N+1} > lambda is certified by the resolved
// spectrum; throws NumericalError otherwise.
int count_modes(const Basis& basis, double lambda);

// N(lambda) / (omega_d vol(domain) lambda^{d/2} / (2 pi)^d). In 1d the
// predictor reduces to (L/pi) sqrt(lambda), computed in that algebraic form
// so integer-lattice cases come out exact.
double weyl_ratio(const Basis& basis, double lambda);

} // namespace heatctl
