#pragma once

#include "heatctl/feedback.hpp"
#include "heatctl/trajectory.hpp"

namespace heatctl {

enum class Method {
  kExponentialEuler,        // integrating-factor stepper, adaptive
  kDenseExponentialOracle,  // full M x M matrix exponential, cross-check only
  kModalExact,              // closed-loop eigenbasis propagation, no stepping
};

enum class Law {
  kNone,       // u = 0, pure heat decay
  kStationary, // u = F_lambda y
  kTruncated,  // u = K_r(F_lambda y)
};

struct IntegratorConfig {
  Method method = Method::kExponentialEuler;
  double dt = 0.0;          // 0: start from the stability guard
  double tolerance = 1e-8;  // local relative error target per step
  int samples_per_interval = 64;
  double norm_G = 0.0;      // 0: computed on demand for the step guard
  bool record_samples = true;
};

// Lyapunov functionals of the stationary loop:
//   V  = mu ||X_N||^2 + ||tail||^2,  V1 = mu_tilde ||X_N||^2 + sum tau_i y_i^2.
double lyapunov_V(const FeedbackParams& p, const Vector& y);
double lyapunov_V1(const FeedbackParams& p, const Basis& basis, const Vector& y);

// One trajectory row at (t, y) under the given law; log_norm_u stays finite
// whenever the state is nonzero, norm_u saturates to inf past double range.
Sample make_closed_loop_sample(double t, const Vector& y, const Basis& basis,
                               const FeedbackParams& p, Law law);

// Single integrating-factor step of the closed loop
//   ydot_i = -tau_i y_i + (G u)_i,
// second order in the coupling, diagonal treated exactly. The returned state
// is the step-doubled value with Richardson correction; throws NumericalError
// ("step rejected") when the doubling estimate exceeds `tolerance`.
Vector step_linear(const Basis& basis, const Matrix& G,
                   const FeedbackParams& p, const Vector& y, double dt,
                   double tolerance);
Vector step_truncated(const Basis& basis, const Matrix& G,
                      const FeedbackParams& p, const Vector& y, double dt,
                      double tolerance);

// Adaptive integration of the truncated loop over a window, step-doubling
// inside; norm_G = 0 recomputes the operator norm for the stability guard.
Vector integrate_truncated_window(const Basis& basis, const Matrix& G,
                                  const FeedbackParams& p, Vector y,
                                  double span, double tolerance,
                                  double norm_G = 0.0);

// Exact propagation of one stationary piece through the eigenbasis of the
// closed-loop low block S = -diag(tau_1..tau_N) - gamma J_N; the tail couples
// one way through G and integrates in closed form. Pieces whose gain exceeds
// double range (log gamma > kLogGammaStandardMax) or whose block exceeds the
// eigensolve cap switch to a certified-envelope mode: the low block is
// bounded by exp(-lambda dt) (valid since S <= -lambda I under the run's
// spectral constant) and the tail decays diagonally; boundary states are
// exact to far below double resolution, mid-piece samples are upper bounds.
inline constexpr double kLogGammaStandardMax = 705.0;
inline constexpr int kModalBlockCap = 4096;

struct ModalPiece {
  FeedbackParams params;
  bool saturated = false;
  Vector theta; // closed-loop rates, clamped to <= -(lambda + tau_1)
  Matrix W;     // eigenvectors of S, columns
  Matrix H;     // G_tail * W, cached coupling
  Vector tau;   // all M frequencies
};

ModalPiece build_modal_piece(const Basis& basis, const Matrix& G,
                             const FeedbackParams& p);

Vector modal_propagate(const ModalPiece& piece, const Vector& y0, double dt);

// Dense-oracle route: the full closed-loop generator and its exponential.
// Guarded to M <= 256 and representable gain.
Matrix closed_loop_generator(const Basis& basis, const Matrix& G,
                             const FeedbackParams& p);
Vector dense_expm_propagate(const Matrix& L, const Vector& y0, double dt);

// Integrate [t0, t1] under the chosen law, sampling samples_per_interval + 1
// instants including both endpoints; the final state is stored as a
// checkpoint. Decay certificates from the run's constants hold at every
// sample (tested, not assumed).
Trajectory run_stationary(const Basis& basis, const Matrix& G,
                          const FeedbackParams& p, const Vector& y0, double t0,
                          double t1, const IntegratorConfig& cfg,
                          Law law = Law::kStationary);

} // namespace heatctl
