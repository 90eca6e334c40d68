#include "heatctl/spectral_fit.hpp"

#include "heatctl/highprec.hpp"

#include <algorithm>
#include <cmath>

namespace heatctl {

namespace {

// Smallest C >= 1 with C sqrt(lambda) + ln C >= -ln lambda_min, i.e. the
// value that makes the decay bound hold with equality at this point. The left
// side is strictly increasing in C, so bisection is safe.
double pointwise_requirement(double lambda, double log_min_eig) {
  const double s = std::sqrt(lambda);
  auto ok = [&](double c) { return c * s + std::log(c) + log_min_eig >= 0.0; };
  if (ok(1.0)) return 1.0;
  double lo = 1.0, hi = 2.0;
  while (!ok(hi)) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e8)
      throw NumericalError("pointwise observability requirement diverged");
  }
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (ok(mid) ? hi : lo) = mid;
    if (hi - lo <= 1e-12 * hi) break;
  }
  return hi;
}

} // namespace

SpectralFit fit_spectral_constant(const Basis& basis, const Region& omega,
                                  const std::vector<double>& lambda_grid,
                                  double floor, double r2_min, double safety) {
  if (lambda_grid.size() < 2)
    throw ConfigError("spectral fit needs at least two grid frequencies");
  if (!(floor > 0.0)) throw ConfigError("representability floor must be positive");

  SpectralFit out;
  out.floor = floor;
  out.r2_min = r2_min;
  out.safety = safety;

  std::vector<double> xs, ys;
  const double log_floor = std::log(floor);
  for (double lambda : lambda_grid) {
    SpectralPoint p;
    p.lambda = lambda;
    p.N = count_modes(basis, lambda);
    p.eig = min_eig_observed(basis, omega, p.N);
    p.rejected = p.eig.log_value < log_floor;
    if (!p.rejected) {
      xs.push_back(std::sqrt(lambda));
      ys.push_back(p.eig.log_value);
    }
    out.points.push_back(p);
  }
  if (xs.size() < 2)
    throw NumericalError(
        "spectral fit rejected: fewer than two grid points above the floor");

  out.line = fit_line(xs, ys);
  if (out.line.r2 < r2_min)
    throw NumericalError("spectral fit rejected: r2 below threshold");
  out.fitted_c = -out.line.slope;
  out.log_prefactor = out.line.intercept;

  out.pointwise_c = 1.0;
  for (const SpectralPoint& p : out.points) {
    if (p.rejected) continue;
    out.pointwise_c =
        std::max(out.pointwise_c, pointwise_requirement(p.lambda, p.eig.log_value));
  }
  out.c1 = std::max({1.0, safety * out.fitted_c, out.pointwise_c});

  // Tunneling profile over the modes the largest grid frequency sees.
  {
    const double lambda_max = *std::max_element(lambda_grid.begin(), lambda_grid.end());
    const int n_modes = count_modes(basis, lambda_max);
    const Matrix J = observed_block(basis, omega, n_modes);
    std::vector<double> tx, ty;
    for (int n = 0; n < n_modes; ++n) {
      if (J(n, n) <= 0.0) continue; // closed form gives > 0 on any open region
      tx.push_back(-std::sqrt(basis.tau(n)));
      ty.push_back(std::log(J(n, n)));
    }
    LineFit tf = fit_line(tx, ty);
    out.tunneling.c0 = tf.slope; // model: ln G_nn ~ log_c + c0 * (-sqrt(tau))
    out.tunneling.log_c = tf.intercept;
    out.tunneling.r2 = tf.r2;
    out.tunneling.n_modes = static_cast<int>(tx.size());
  }

  return out;
}

std::optional<bool> verify_pointwise(const Basis& basis, const Region& omega,
                                     double c1, double lambda) {
  if (lambda > kVerifiableLambda) return std::nullopt;
  const int N = count_modes(basis, lambda);
  if (N > kHighPrecMaxN) return std::nullopt;
  const PrecisionEig e = min_eig_observed_hp(basis, omega, N);
  const double required_log = -std::log(c1) - c1 * std::sqrt(lambda);
  return e.log_value >= required_log;
}

} // namespace heatctl
