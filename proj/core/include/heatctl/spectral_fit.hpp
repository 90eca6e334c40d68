#pragma once

#include "heatctl/fitutil.hpp"
#include "heatctl/gram.hpp"

#include <optional>
#include <vector>

namespace heatctl {

struct SpectralPoint {
  double lambda = 0.0;
  int N = 0;
  MinEig eig;
  bool rejected = false; // below the representability floor, excluded from the fit
};

// Per-mode observed mass ||e_n||^2_omega against sqrt(tau_n); quantifies how
// little of a mode the region can miss. Informational, never gated.
struct TunnelingFit {
  double c0 = 0.0;    // decay constant in ||e_n||^2 >= c exp(-c0 sqrt(tau_n))
  double log_c = 0.0;
  double r2 = 0.0;
  int n_modes = 0;
};

// Result of calibrating the observability decay on a frequency grid:
// ln lambda_min(J_N(lambda)) ~ ln c - C sqrt(lambda). The operational
// constant c1 is what every downstream gain formula consumes.
struct SpectralFit {
  std::vector<SpectralPoint> points;
  LineFit line;            // ln lambda_min against sqrt(lambda)
  double fitted_c = 0.0;   // -line.slope
  double log_prefactor = 0.0;
  double pointwise_c = 1.0; // smallest C >= 1 valid at every grid point
  double c1 = 1.0;          // max(1, safety * fitted_c, pointwise_c)
  TunnelingFit tunneling;
  double floor = 0.0;
  double r2_min = 0.0;
  double safety = 0.0;
};

// Throws NumericalError when fewer than two grid points survive the floor or
// when the surviving fit has r^2 below r2_min.
SpectralFit fit_spectral_constant(const Basis& basis, const Region& omega,
                                  const std::vector<double>& lambda_grid,
                                  double floor = 1e-300, double r2_min = 0.9,
                                  double safety = 1.1);

// Frequencies above this are beyond direct verification: the true min
// eigenvalue sits below the high-precision noise floor.
inline constexpr double kVerifiableLambda = 3000.0;

// Checks lambda_min(J_N(lambda)) >= c1^{-1} exp(-c1 sqrt(lambda)) by direct
// high-precision eigensolve. nullopt when lambda is outside the verification
// window; callers record such gains as running on the extrapolated constant.
std::optional<bool> verify_pointwise(const Basis& basis, const Region& omega,
                                     double c1, double lambda);

} // namespace heatctl
