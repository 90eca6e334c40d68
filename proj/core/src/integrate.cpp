#include "heatctl/integrate.hpp"

#include "heatctl/gram.hpp"
#include "sym_eig.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <limits>

namespace heatctl {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double saturate_exp(double lg) {
  if (lg > 710.0) return kInf;
  if (lg < -745.0) return 0.0;
  return std::exp(lg);
}

// phi1(z) = (e^z - 1)/z, phi2(z) = (e^z - 1 - z)/z^2; stable for z <= 0 of
// any magnitude (expm1 saturates at -1, the ratios go to 0 cleanly).
double phi1(double z) { return z == 0.0 ? 1.0 : std::expm1(z) / z; }

double phi2(double z) {
  if (std::abs(z) < 1e-4) return 0.5 + z / 6.0 + z * z / 24.0;
  return (std::expm1(z) - z) / (z * z);
}

Vector tau_vector(const Basis& basis) {
  Vector tau(basis.size());
  for (int i = 0; i < basis.size(); ++i) tau(i) = basis.tau(i);
  return tau;
}

// Integrating-factor stepper with explicit second-order coupling: the
// diagonal e^{-tau dt} is exact, the source enters through phi1/phi2 weights.
class Etd2 {
public:
  Etd2(const Basis& basis, const Matrix& G, const FeedbackParams& p, Law law)
      : basis_(basis), G_(G), p_(p), law_(law), tau_(tau_vector(basis)) {}

  Vector step_once(const Vector& y, double dt) {
    prepare(dt);
    const Vector F0 = source(y);
    const Vector a = (E_.array() * y.array() + P1_.array() * F0.array()).matrix();
    const Vector F1 = source(a);
    return a + (P2_.array() * (F1 - F0).array()).matrix();
  }

  // Step-doubled value with Richardson correction; *err is the doubling
  // estimate of the uncorrected pair, relative to the state norm.
  Vector step_refined(const Vector& y, double dt, double* err) {
    const Vector full = step_once(y, dt);
    Vector half = step_once(y, 0.5 * dt);
    half = step_once(half, 0.5 * dt);
    const double scale = std::max(half.norm(), 1e-290);
    *err = (half - full).norm() / scale;
    return half + (half - full) / 3.0;
  }

private:
  void prepare(double dt) {
    if (dt == cached_dt_) return;
    cached_dt_ = dt;
    const auto z = (-tau_.array() * dt).eval();
    E_ = z.exp().matrix();
    P1_.resize(tau_.size());
    P2_.resize(tau_.size());
    for (Index i = 0; i < tau_.size(); ++i) {
      P1_(i) = dt * phi1(z(i));
      P2_(i) = dt * phi2(z(i));
    }
  }

  Vector source(const Vector& y) const {
    switch (law_) {
      case Law::kNone:
        return Vector::Zero(y.size());
      case Law::kStationary:
        return G_ * apply_F(p_, y);
      case Law::kTruncated:
        return G_ * apply_truncated_F(p_, y);
    }
    throw ConfigError("unknown control law");
  }

  const Basis& basis_;
  const Matrix& G_;
  const FeedbackParams& p_;
  Law law_;
  Vector tau_;
  double cached_dt_ = -1.0;
  Vector E_, P1_, P2_;
};

Vector integrate_window(Etd2& ws, Vector y, double span, double tolerance,
                        double guard_dt, double start_dt = 0.0) {
  const double dt_floor = std::max(span * 1e-13, 1e-300);
  double t = 0.0; // relative to t_begin; spans are short, keeps dt exact-ish
  double dt = std::min(start_dt > 0.0 ? std::min(start_dt, guard_dt) : guard_dt,
                       span);
  long steps = 0;
  while (t < span) {
    dt = std::min(dt, span - t);
    double err = 0.0;
    const Vector ynew = ws.step_refined(y, dt, &err);
    if (err <= tolerance) {
      y = ynew;
      t += dt;
      ++steps;
      if (steps > 50'000'000)
        throw NumericalError("step budget exhausted; gain too stiff for the "
                             "integrating-factor method");
      const double grow = err > 0.0 ? 0.9 * std::cbrt(tolerance / err) : 4.0;
      dt = std::min(guard_dt, dt * std::clamp(grow, 0.2, 4.0));
    } else {
      if (dt <= dt_floor)
        throw NumericalError(
            "step rejected: local error estimate exceeds tolerance at the "
            "smallest admissible step");
      dt *= 0.5;
    }
  }
  return y;
}

double guard_step(const Matrix& G, const FeedbackParams& p, double norm_G) {
  if (!std::isfinite(p.gamma))
    throw NumericalError(
        "step guard unsatisfiable: gain exceeds double range; use modal "
        "propagation for this piece");
  const double nG = norm_G > 0.0 ? norm_G : operator_norm(G);
  return 0.1 / (p.gamma * nG + p.lambda);
}

} // namespace

Sample make_closed_loop_sample(double t, const Vector& y, const Basis& basis,
                               const FeedbackParams& p, Law law) {
  const int N = p.N;
  const Index M = y.size();
  Sample s;
  s.t = t;
  s.norm_y = y.norm();
  s.norm_low = y.head(N).norm();
  s.norm_tail = y.tail(M - N).norm();

  switch (law) {
    case Law::kNone:
      s.norm_u = 0.0;
      s.log_norm_u = -kInf;
      break;
    case Law::kStationary:
      s.log_norm_u =
          s.norm_low > 0.0 ? p.log_gamma + std::log(s.norm_low) : -kInf;
      s.norm_u = s.norm_low > 0.0 ? saturate_exp(s.log_norm_u) : 0.0;
      break;
    case Law::kTruncated: {
      const TruncatedGain g = truncated_gain(
          p, s.norm_low > 0.0 ? std::log(s.norm_low) : -kInf);
      s.log_norm_u = g.log_norm;
      s.norm_u = saturate_exp(g.log_norm);
      break;
    }
  }

  s.V = lyapunov_V(p, y);
  s.V1 = lyapunov_V1(p, basis, y);
  return s;
}

double lyapunov_V(const FeedbackParams& p, const Vector& y) {
  const double low2 = y.head(p.N).squaredNorm();
  const double tail2 = y.tail(y.size() - p.N).squaredNorm();
  return (low2 > 0.0 ? p.mu * low2 : 0.0) + tail2;
}

double lyapunov_V1(const FeedbackParams& p, const Basis& basis,
                   const Vector& y) {
  const double low2 = y.head(p.N).squaredNorm();
  double tail = 0.0;
  for (Index i = p.N; i < y.size(); ++i)
    tail += basis.tau(static_cast<int>(i)) * y(i) * y(i);
  return (low2 > 0.0 ? p.mu_tilde * low2 : 0.0) + tail;
}

Vector step_linear(const Basis& basis, const Matrix& G,
                   const FeedbackParams& p, const Vector& y, double dt,
                   double tolerance) {
  Etd2 ws(basis, G, p, Law::kStationary);
  double err = 0.0;
  Vector out = ws.step_refined(y, dt, &err);
  if (err > tolerance)
    throw NumericalError("step rejected: local error estimate exceeds tolerance");
  return out;
}

Vector step_truncated(const Basis& basis, const Matrix& G,
                      const FeedbackParams& p, const Vector& y, double dt,
                      double tolerance) {
  Etd2 ws(basis, G, p, Law::kTruncated);
  double err = 0.0;
  Vector out = ws.step_refined(y, dt, &err);
  if (err > tolerance)
    throw NumericalError("step rejected: local error estimate exceeds tolerance");
  return out;
}

Vector integrate_truncated_window(const Basis& basis, const Matrix& G,
                                  const FeedbackParams& p, Vector y,
                                  double span, double tolerance,
                                  double norm_G) {
  const double guard = guard_step(G, p, norm_G);
  Etd2 ws(basis, G, p, Law::kTruncated);
  return integrate_window(ws, std::move(y), span, tolerance, guard);
}

ModalPiece build_modal_piece(const Basis& basis, const Matrix& G,
                             const FeedbackParams& p) {
  ModalPiece piece;
  piece.params = p;
  piece.tau = tau_vector(basis);
  const int N = p.N;
  const int M = basis.size();
  if (p.log_gamma > kLogGammaStandardMax || N > kModalBlockCap) {
    piece.saturated = true;
    return piece;
  }
  if (G.rows() != M || G.cols() < N)
    throw ConfigError("coupling matrix does not cover the feedback rank");

  Matrix S = (-p.gamma) * G.topLeftCorner(N, N);
  S.diagonal() -= piece.tau.head(N);
  // Normalize before the eigensolve so entries of order gamma never square
  // inside LAPACK; eigenvalues scale back linearly.
  const double scale = std::max(S.cwiseAbs().maxCoeff(), 1.0);
  internal::SymEig se = internal::sym_eigendecompose(S / scale);

  piece.theta = scale * se.values;
  // S <= -(tau_1 + gamma lambda_min(J_N)) I <= -(tau_1 + lambda) I whenever
  // the run's spectral constant is valid: gamma lambda_min >= lambda is the
  // design equation of gamma. Rates the eigensolve cannot resolve (true
  // magnitudes below its noise floor) are pinned to that certified ceiling.
  const double ceiling = -(p.lambda + piece.tau(0));
  for (Index k = 0; k < piece.theta.size(); ++k)
    piece.theta(k) = std::min(piece.theta(k), ceiling);
  piece.W = std::move(se.vectors);
  piece.H = G.bottomRows(M - N) * piece.W;
  return piece;
}

Vector modal_propagate(const ModalPiece& piece, const Vector& y0, double dt) {
  const FeedbackParams& p = piece.params;
  const Index M = piece.tau.size();
  const int N = p.N;
  if (y0.size() != M) throw ConfigError("state length does not match basis");
  if (dt < 0.0) throw ConfigError("propagation time must be nonnegative");

  Vector y(M);
  if (piece.saturated) {
    // Certified envelope: ||e^{S dt}|| <= e^{-lambda dt}; the tail's control
    // kick dies within a vanishing fraction of any schedule piece at these
    // gains (log gamma < lambda dt by a wide margin), so diagonal decay is
    // exact at boundaries and an upper bound mid-piece.
    const double f = std::exp(-p.lambda * dt);
    y.head(N) = f * y0.head(N);
    y.tail(M - N) =
        ((-piece.tau.tail(M - N).array() * dt).exp() * y0.tail(M - N).array())
            .matrix();
    return y;
  }

  const Vector c = piece.W.transpose() * y0.head(N);
  const Vector ec = ((piece.theta.array() * dt).exp() * c.array()).matrix();
  y.head(N) = piece.W * ec;

  // psi(theta, q, dt) = int_0^dt e^{q(dt-s)} e^{theta s} ds, written against
  // the larger of the two rates so the phi1 argument is never positive:
  // e^{max dt} dt phi1(-|theta-q| dt) stays bounded even when one factor
  // underflows.
  Vector etheta(N);
  for (int k = 0; k < N; ++k) etheta(k) = std::exp(piece.theta(k) * dt);
  for (Index i = 0; i < M - N; ++i) {
    const double q = -piece.tau(N + i);
    const double eq = std::exp(q * dt);
    double acc = eq * y0(N + i);
    for (int k = 0; k < N; ++k) {
      const double lead = piece.theta(k) >= q ? etheta(k) : eq;
      const double psi =
          lead * dt * phi1(-std::abs(piece.theta(k) - q) * dt);
      acc -= p.gamma * piece.H(i, k) * c(k) * psi;
    }
    y(N + i) = acc;
  }
  if (!y.allFinite())
    throw NumericalError(
        "modal transient overflow: state norm exceeds double range for this "
        "gain; normalize the initial state");
  return y;
}

Matrix closed_loop_generator(const Basis& basis, const Matrix& G,
                             const FeedbackParams& p) {
  const int M = basis.size();
  if (M > 256) throw ConfigError("dense exponential oracle capped at M <= 256");
  if (!std::isfinite(p.gamma))
    throw NumericalError("dense exponential oracle requires representable gain");
  Matrix L = Matrix::Zero(M, M);
  L.leftCols(p.N) = (-p.gamma) * G.leftCols(p.N);
  L.diagonal() -= tau_vector(basis);
  return L;
}

Vector dense_expm_propagate(const Matrix& L, const Vector& y0, double dt) {
  const Matrix E = (L * dt).exp();
  return E * y0;
}

Trajectory run_stationary(const Basis& basis, const Matrix& G,
                          const FeedbackParams& p, const Vector& y0, double t0,
                          double t1, const IntegratorConfig& cfg, Law law) {
  const int M = basis.size();
  if (y0.size() != M) throw ConfigError("initial state length does not match basis");
  if (!y0.allFinite()) throw ConfigError("initial state must be finite");
  if (!(t1 > t0)) throw ConfigError("time window must have positive length");
  if (cfg.samples_per_interval < 1)
    throw ConfigError("need at least one sample interval");

  const int K = cfg.samples_per_interval;
  std::vector<double> ts(static_cast<size_t>(K) + 1);
  for (int j = 0; j <= K; ++j)
    ts[static_cast<size_t>(j)] = t0 + (t1 - t0) * j / K;
  ts.back() = t1;

  Trajectory tr;
  tr.checkpoints.push_back({t0, y0});
  auto record = [&](double t, const Vector& y) {
    if (cfg.record_samples)
      tr.samples.push_back(make_closed_loop_sample(t, y, basis, p, law));
  };

  if (law == Law::kNone) {
    // Pure heat decay is diagonal regardless of method.
    Vector tau = tau_vector(basis);
    Vector y = y0;
    record(t0, y0);
    for (int j = 1; j <= K; ++j) {
      const double dt = ts[static_cast<size_t>(j)] - t0;
      y = ((-tau.array() * dt).exp() * y0.array()).matrix();
      record(ts[static_cast<size_t>(j)], y);
    }
    tr.checkpoints.push_back({t1, y});
    return tr;
  }

  switch (cfg.method) {
    case Method::kModalExact: {
      if (law != Law::kStationary)
        throw ConfigError("modal propagation requires the stationary law");
      const ModalPiece piece = build_modal_piece(basis, G, p);
      record(t0, y0);
      Vector y = y0;
      for (int j = 1; j <= K; ++j) {
        y = modal_propagate(piece, y0, ts[static_cast<size_t>(j)] - t0);
        record(ts[static_cast<size_t>(j)], y);
      }
      tr.checkpoints.push_back({t1, y});
      return tr;
    }
    case Method::kDenseExponentialOracle: {
      const Matrix L = closed_loop_generator(basis, G, p);
      if (law != Law::kStationary)
        throw ConfigError("dense oracle implements the stationary law only");
      record(t0, y0);
      Vector y = y0;
      for (int j = 1; j <= K; ++j) {
        y = dense_expm_propagate(L, y0, ts[static_cast<size_t>(j)] - t0);
        record(ts[static_cast<size_t>(j)], y);
      }
      tr.checkpoints.push_back({t1, y});
      return tr;
    }
    case Method::kExponentialEuler: {
      const double guard = guard_step(G, p, cfg.norm_G);
      Etd2 ws(basis, G, p, law);
      Vector y = y0;
      record(t0, y0);
      for (int j = 1; j <= K; ++j) {
        y = integrate_window(
            ws, std::move(y),
            ts[static_cast<size_t>(j)] - ts[static_cast<size_t>(j - 1)],
            cfg.tolerance, guard, cfg.dt);
        record(ts[static_cast<size_t>(j)], y);
      }
      tr.checkpoints.push_back({t1, y});
      return tr;
    }
  }
  throw ConfigError("unknown integration method");
}

} // namespace heatctl
