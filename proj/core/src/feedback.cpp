#include "heatctl/feedback.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

namespace heatctl {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double from_log(double lg) {
  // exp with explicit saturation; exp() itself does the right thing but the
  // intent (log is the source of truth) reads better spelled out.
  if (lg > 710.0) return kInf;
  if (lg < -745.0) return 0.0;
  return std::exp(lg);
}

// max over the three dominated expressions, in log scale.
double required_log(double c1, double lambda) {
  const double s = std::sqrt(lambda);
  const double l = std::log(lambda);
  const double a = l + 2.0 * std::log(c1) + 2.0 * c1 * s;
  const double b = l + std::log(c1) + c1 * s;
  const double c = std::log(c1) + c1 * s;
  return std::max({a, b, c});
}

} // namespace

double select_c2(double c1, double lambda_hi, double lambda_lo) {
  if (!(c1 >= 1.0)) throw ConfigError("c1 must be at least 1");
  if (!(lambda_lo > 0.0) || !(lambda_hi > lambda_lo))
    throw ConfigError("c2 selection needs 0 < lambda_lo < lambda_hi");

  // Deterministic log-spaced sample of the run's range, endpoints included.
  constexpr int kSamples = 1024;
  std::vector<double> lambdas(kSamples + 1);
  const double llo = std::log(lambda_lo), lhi = std::log(lambda_hi);
  for (int i = 0; i <= kSamples; ++i)
    lambdas[static_cast<size_t>(i)] =
        std::exp(llo + (lhi - llo) * i / kSamples);
  lambdas.back() = lambda_hi;

  auto admissible = [&](double c2) {
    for (double lambda : lambdas) {
      if (std::log(c2) + c2 * std::sqrt(lambda) < required_log(c1, lambda))
        return false;
    }
    return true;
  };

  const double step = 0x1p-6;
  double c2 = std::ceil((2.0 * c1) / step) * step; // grid point >= 2 c1
  while (!admissible(c2)) {
    c2 += step;
    if (c2 > 1e4) throw NumericalError("c2 selection diverged");
  }
  return c2;
}

FeedbackParams make_params(double lambda, double c1, double c2,
                           const Basis& basis) {
  if (!(c1 >= 1.0)) throw ConfigError("c1 must be at least 1");
  if (!(c2 >= 2.0 * c1)) throw ConfigError("c2 must be at least 2*c1");

  FeedbackParams p;
  p.lambda = lambda;
  p.N = count_modes(basis, lambda); // throws "truncation too small" if needed
  p.c1 = c1;
  p.c2 = c2;

  const double s = std::sqrt(lambda);
  p.log_gamma = std::log(c1) + c1 * s + std::log(lambda);
  p.gamma = from_log(p.log_gamma);
  p.log_mu = 2.0 * (p.log_gamma - std::log(lambda));
  p.mu = from_log(p.log_mu);
  p.log_mu_tilde = 2.0 * p.log_gamma - std::log(lambda);
  p.mu_tilde = from_log(p.log_mu_tilde);
  p.log_r = -(std::log(c2) + c2 * s);
  p.r = from_log(p.log_r);
  if (p.log_r > -std::numbers::ln2)
    throw ConfigError("C2 too small for r <= 1/2 at this lambda");
  return p;
}

Vector apply_F(const FeedbackParams& p, const Vector& y) {
  if (y.size() < p.N)
    throw ConfigError("state has fewer coefficients than the feedback rank");
  return -p.gamma * y.head(p.N);
}

double cutoff_factor(const CutoffShape& shape, double x) {
  if (x <= shape.r) return 1.0;
  if (x >= 2.0 * shape.r) return 0.0;
  const double s = (x - shape.r) / shape.r;
  return 1.0 - s * s * s * (10.0 - 15.0 * s + 6.0 * s * s);
}

Vector apply_cutoff(const CutoffShape& shape, const Vector& v) {
  if (!(shape.r > 0.0) || shape.r > 0.5)
    throw ConfigError("cutoff radius must lie in (0, 1/2]");
  return cutoff_factor(shape, v.norm()) * v;
}

TruncatedGain truncated_gain(const FeedbackParams& p, double log_norm_low) {
  TruncatedGain g;
  if (std::isinf(log_norm_low) && log_norm_low < 0.0) {
    g.regime = CutoffRegime::kPlateau; // zero state, zero control
    g.log_norm = -kInf;
    return g;
  }
  // xi = log(||F y|| / r); the band [r, 2r) maps to xi in [0, ln 2).
  const double log_f = p.log_gamma + log_norm_low;
  const double xi = log_f - p.log_r;
  if (xi <= 0.0) {
    g.regime = CutoffRegime::kPlateau;
    g.log_norm = log_f;
  } else if (xi >= std::numbers::ln2) {
    g.regime = CutoffRegime::kOff;
    g.log_norm = -kInf;
  } else {
    g.regime = CutoffRegime::kBand;
    const double s = std::expm1(xi); // ||F y||/r - 1, in (0,1), exact in logs
    const double f = 1.0 - s * s * s * (10.0 - 15.0 * s + 6.0 * s * s);
    g.log_norm = f > 0.0 ? std::log(f) + log_f : -kInf;
  }
  return g;
}

Vector apply_truncated_F(const FeedbackParams& p, const Vector& y) {
  if (y.size() < p.N)
    throw ConfigError("state has fewer coefficients than the feedback rank");
  const Vector x = y.head(p.N);
  const double nx = x.norm();
  if (nx == 0.0) return Vector::Zero(p.N);
  const TruncatedGain g = truncated_gain(p, std::log(nx));
  if (std::isinf(g.log_norm) && g.log_norm < 0.0) return Vector::Zero(p.N);
  // Scale through the unit direction: the output norm is at most 2r <= 1, so
  // it is representable even when gamma alone is not.
  const double scale = from_log(g.log_norm);
  return (-scale / nx) * x;
}

double log_state_certificate(const FeedbackParams& p, double dt) {
  return std::log(p.c1) + p.c1 * std::sqrt(p.lambda) - 0.5 * p.lambda * dt;
}

double log_control_certificate(const FeedbackParams& p, double dt) {
  return std::log(p.c2) + p.c2 * std::sqrt(p.lambda) - 0.5 * p.lambda * dt;
}

} // namespace heatctl
