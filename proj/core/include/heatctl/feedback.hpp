#pragma once

#include "heatctl/basis.hpp"

namespace heatctl {

// Stationary feedback constants at frequency lambda. Gains grow like
// exp(c1 sqrt(lambda)) and overflow double well inside the operating range of
// the schedules, so every quantity is carried twice: in linear scale (inf /
// 0 past the representable range) and in log scale (always finite). All
// internal decisions are made on the log fields.
struct FeedbackParams {
  double lambda = 0.0;
  int N = 0;
  double c1 = 1.0;
  double c2 = 2.0;

  double gamma = 0.0; // c1 e^{c1 sqrt(lambda)} lambda
  double log_gamma = 0.0;
  double mu = 0.0; // gamma^2 / lambda^2
  double log_mu = 0.0;
  double mu_tilde = 0.0; // gamma^2 / lambda
  double log_mu_tilde = 0.0;
  double r = 0.0; // cutoff radius, 1/r = c2 e^{c2 sqrt(lambda)}
  double log_r = 0.0;
};

// Smallest constant on the 2^-6 grid, at least 2*c1, dominating the three
// gain expressions lambda c1^2 e^{2 c1 sqrt(lambda)}, lambda c1 e^{c1 sqrt(lambda)}
// and c1 e^{c1 sqrt(lambda)} by c2 e^{c2 sqrt(lambda)} across [lambda_lo, lambda_hi].
double select_c2(double c1, double lambda_hi, double lambda_lo = 1e-6);

FeedbackParams make_params(double lambda, double c1, double c2,
                           const Basis& basis);

// u_j = -gamma y_j for the first N coefficients. Entries overflow to +-inf
// when gamma does; flows that operate past that range never materialize u
// and work with log norms instead.
Vector apply_F(const FeedbackParams& p, const Vector& y);

struct CutoffShape {
  double r = 0.0;
  double log_r = 0.0;
};

// Quintic smoothstep profile: 1 on [0, r], 0 on [2r, inf),
// 1 - s^3 (10 - 15 s + 6 s^2) with s = (x - r)/r in between.
double cutoff_factor(const CutoffShape& shape, double x);

Vector apply_cutoff(const CutoffShape& shape, const Vector& v);

// K_{r}(F_lambda y): the scalar nonlinear gain -gamma f_r(gamma ||P_N y||) P_N y.
// Classification of the cutoff regime happens in log space so it stays exact
// when gamma has overflowed or r has underflowed; the returned vector always
// has norm <= 2r <= 1 and is representable.
Vector apply_truncated_F(const FeedbackParams& p, const Vector& y);

// log ||K_r(F y)|| and the regime it falls in, without materializing vectors.
enum class CutoffRegime { kPlateau, kBand, kOff };

struct TruncatedGain {
  CutoffRegime regime = CutoffRegime::kPlateau;
  double log_norm = 0.0; // -inf when the control vanishes
};

TruncatedGain truncated_gain(const FeedbackParams& p, double log_norm_low);

// Decay certificates for the closed loop at these params, as log factors per
// elapsed time: ||y(t)|| <= c1 e^{c1 sqrt(lambda)} e^{-lambda (t-s)/2} ||y(s)||
// and the analogous control bound with c2.
double log_state_certificate(const FeedbackParams& p, double dt);
double log_control_certificate(const FeedbackParams& p, double dt);

} // namespace heatctl
