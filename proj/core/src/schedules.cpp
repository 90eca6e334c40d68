#include "heatctl/schedules.hpp"

#include "heatctl/gram.hpp"
#include "heatctl/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace heatctl {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kFrequencyCap = 0.8; // of tau_M

double saturate_exp(double lg) {
  if (lg > 710.0) return kInf;
  if (lg < -745.0) return 0.0;
  return std::exp(lg);
}

// Feasibility of X as the gain constant: ln C + C X <= X^2/16 for both C.
bool gain_ok(double x, double c1, double c2) {
  for (double c : {c1, c2}) {
    if (std::log(c) + c * x > x * x / 16.0) return false;
  }
  return true;
}

double solve_gain(double c1, double c2) {
  if (!(c1 >= 1.0) || !(c2 >= 1.0))
    throw ConfigError("gain constants require c1, c2 >= 1");
  // Past the parabola vertex x = 8 max(c1,c2) the slack is increasing in x,
  // so the feasible set is a half line and bisection brackets its edge.
  double lo = 8.0 * std::max(c1, c2);
  double hi = lo;
  while (!gain_ok(hi, c1, c2)) {
    hi *= 2.0;
    if (hi > 1e12) throw NumericalError("gain constant bisection diverged");
  }
  if (gain_ok(lo, c1, c2)) return lo; // vertex already feasible (impossible for c >= 1)
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (gain_ok(mid, c1, c2) ? hi : lo) = mid;
    if (hi - lo <= 1e-9) break;
  }
  return hi;
}

// Explicit re-check of the defining inequality over piece indices 1..1000
// with the slack exponent the partition actually uses.
void verify_gain(double g, double c1, double c2, double expo) {
  for (int n = 1; n <= 1000; ++n) {
    const double w = std::pow(static_cast<double>(n), expo);
    for (double c : {c1, c2}) {
      if (std::log(c) + c * g * w > (g * g / 16.0) * w * (1.0 + 1e-12))
        throw NumericalError("gain constant verification failed at index " +
                             std::to_string(n));
    }
  }
}

int exact_int(double x, const char* what, double lo = 1.0) {
  const double r = std::round(x);
  if (!(std::abs(x - r) <= 1e-9 * std::max(1.0, std::abs(x))) || r < lo)
    throw ConfigError(std::string("horizon not admissible: ") + what);
  return static_cast<int>(r);
}

} // namespace

std::string to_string(ScheduleKind kind) {
  switch (kind) {
    case ScheduleKind::kPoly4: return "poly4";
    case ScheduleKind::kPolyK: return "poly_k";
    case ScheduleKind::kDyadic: return "dyadic";
  }
  return "?";
}

double solve_gamma(double c1, double c2) {
  const double g = solve_gain(c1, c2);
  verify_gain(g, c1, c2, 2.0); // quartic partition: slack weight n^2
  return g;
}

double solve_gamma_eps(double c1, double c2, int k) {
  if (k < 1) throw ConfigError("poly_k exponent k must be >= 1");
  const double g = solve_gain(c1, c2);
  verify_gain(g, c1, c2, static_cast<double>(k) + 1.0);
  return g;
}

double solve_q(double c1, double c2) {
  const double g = solve_gain(c1, c2);
  verify_gain(g, c1, c2, 1.0); // linear slack in the dyadic index
  return g;
}

Schedule build_schedule(ScheduleKind kind, double T, double c1, double c2,
                        const Basis& basis, const StopRule& rule, int k) {
  if (!(T > 0.0) || !(T < 1.0 + 1e-12))
    throw ConfigError("horizon not admissible: T must lie in (0, 1]");
  if (rule.use_n_max && rule.n_max < 0)
    throw ConfigError("n_max stop rule needs a nonnegative index");
  if (!rule.use_n_max && !(rule.eps_null > 0.0))
    throw ConfigError("eps_null stop rule needs a positive target");

  Schedule s;
  s.kind = kind;
  s.T = T;

  int n_start = 0;
  switch (kind) {
    case ScheduleKind::kPoly4: {
      s.n_T = exact_int(1.0 / T, "1/T not integer");
      s.gain = solve_gamma(c1, c2);
      n_start = s.n_T;
      break;
    }
    case ScheduleKind::kPolyK: {
      if (k < 1) throw ConfigError("schedule.k required for poly_k");
      s.k = k;
      const int inv = exact_int(1.0 / T, "1/T not integer");
      const double root = std::pow(static_cast<double>(inv), 1.0 / k);
      s.n_T = exact_int(root, "1/T not a k-th power");
      s.gain = solve_gamma_eps(c1, c2, k);
      n_start = s.n_T;
      break;
    }
    case ScheduleKind::kDyadic: {
      const int inv = exact_int(1.0 / T, "1/T not integer");
      const double lg = std::log2(static_cast<double>(inv));
      // T = 1 gives n0 = 0: the whole horizon is one dyadic generation.
      s.n0 = exact_int(lg, "1/T not a power of two", 0.0);
      s.gain = solve_q(c1, c2);
      n_start = 0;
      break;
    }
  }
  s.c3 = s.gain * s.gain / 16.0;

  const double cap = kFrequencyCap * basis.tau_max();
  double log_bound = 0.0;
  for (int n = n_start;; ++n) {
    double lambda = 0.0, t0 = 0.0, t1 = 0.0;
    switch (kind) {
      case ScheduleKind::kPoly4:
        lambda = s.gain * s.gain * std::pow(static_cast<double>(n), 4.0);
        t0 = T - 1.0 / n;
        t1 = T - 1.0 / (n + 1);
        break;
      case ScheduleKind::kPolyK:
        lambda = s.gain * s.gain *
                 std::pow(static_cast<double>(n), 2.0 * (s.k + 1));
        t0 = T - std::pow(static_cast<double>(n), -static_cast<double>(s.k));
        t1 = T - std::pow(static_cast<double>(n) + 1.0,
                          -static_cast<double>(s.k));
        break;
      case ScheduleKind::kDyadic:
        lambda = s.gain * s.gain * std::exp2(2.0 * (s.n0 + n));
        t0 = std::exp2(-s.n0) * (1.0 - std::exp2(-n));
        t1 = std::exp2(-s.n0) * (1.0 - std::exp2(-(n + 1)));
        break;
    }
    if (n == n_start) t0 = 0.0; // analytic zero; poly_k rounding must not shift it

    if (lambda > cap) {
      if (rule.use_n_max)
        throw NumericalError("truncation too small for schedule tail");
      s.stop_rule_fired = "truncation";
      break;
    }
    s.pieces.push_back({n, t0, t1, lambda});
    log_bound += std::log(c1) + c1 * std::sqrt(lambda) - lambda * (t1 - t0) / 2.0;
    if (!rule.use_n_max && log_bound <= std::log(rule.eps_null)) {
      s.stop_rule_fired = "eps_null";
      break;
    }
    if (rule.use_n_max && n >= rule.n_max) {
      s.stop_rule_fired = "n_max";
      break;
    }
    if (static_cast<int>(s.pieces.size()) > 10000)
      throw NumericalError("schedule did not terminate within 10000 pieces");
  }
  if (s.pieces.empty())
    throw NumericalError(
        "truncation too small: no schedule piece resolvable at this M");
  s.log_predicted_terminal = log_bound;
  return s;
}

NullControlResult run_null_control(const Basis& basis, const Region& omega,
                                   const Schedule& schedule, double c1,
                                   double c2, const Vector& y0,
                                   const IntegratorConfig& cfg) {
  const int M = basis.size();
  if (y0.size() != M) throw ConfigError("initial state length does not match basis");
  const double norm_y0 = y0.norm();

  NullControlResult out;
  out.report.kind = schedule.kind;
  out.report.T = schedule.T;
  out.report.gain = schedule.gain;
  out.report.c3 = schedule.c3;
  out.report.stop_rule = schedule.stop_rule_fired;
  out.report.n_max = schedule.pieces.back().n;

  Vector y = y0;
  double log_sup = -kInf;
  for (size_t pi = 0; pi < schedule.pieces.size(); ++pi) {
    const SchedulePiece& sp = schedule.pieces[pi];
    FeedbackParams params = make_params(sp.lambda, c1, c2, basis);
    // Lazy coupling: saturated pieces never touch G.
    Matrix G;
    const bool saturated = params.log_gamma > kLogGammaStandardMax ||
                           params.N > kModalBlockCap;
    if (!saturated) G = gram_matrix(basis, omega, params.N);
    const ModalPiece piece = build_modal_piece(basis, G, params);

    const double norm_low_at_start = y.head(params.N).norm();
    PieceCost pc;
    pc.n = sp.n;
    pc.lambda = sp.lambda;
    pc.t0 = sp.t0;
    pc.t1 = sp.t1;
    pc.saturated = piece.saturated;
    pc.log_sup_u = norm_low_at_start > 0.0
                       ? params.log_gamma + std::log(norm_low_at_start)
                       : -kInf;
    pc.sup_u = saturate_exp(pc.log_sup_u);
    pc.log_transient_ceiling =
        y.norm() > 0.0 ? std::log(c1) + c1 * std::sqrt(sp.lambda) +
                             std::log(y.norm())
                       : -kInf;
    out.report.per_piece.push_back(pc);
    log_sup = std::max(log_sup, pc.log_sup_u);

    const int K = cfg.record_samples ? std::max(1, cfg.samples_per_interval) : 1;
    const Vector piece_start = y;
    for (int j = (pi == 0 ? 0 : 1); j <= K; ++j) {
      const double tj = sp.t0 + (sp.t1 - sp.t0) * j / K;
      if (j > 0) y = modal_propagate(piece, piece_start, tj - sp.t0);
      if (cfg.record_samples) {
        Sample smp;
        smp.t = tj;
        smp.norm_y = y.norm();
        smp.norm_low = y.head(params.N).norm();
        smp.norm_tail = y.tail(M - params.N).norm();
        smp.log_norm_u = smp.norm_low > 0.0
                             ? params.log_gamma + std::log(smp.norm_low)
                             : -kInf;
        smp.norm_u = saturate_exp(smp.log_norm_u);
        smp.V = lyapunov_V(params, y);
        smp.V1 = lyapunov_V1(params, basis, y);
        out.trajectory.samples.push_back(smp);
      }
    }
    out.trajectory.checkpoints.push_back({sp.t1, y});
  }

  // Free decay across the truncated remainder of the horizon.
  const double t_last = schedule.pieces.back().t1;
  if (schedule.T > t_last) {
    const int K = cfg.record_samples ? std::max(1, cfg.samples_per_interval) : 1;
    const Vector start = y;
    Vector tau(M);
    for (int i = 0; i < M; ++i) tau(i) = basis.tau(i);
    for (int j = 1; j <= K; ++j) {
      const double tj = t_last + (schedule.T - t_last) * j / K;
      y = ((-tau.array() * (tj - t_last)).exp() * start.array()).matrix();
      if (cfg.record_samples) {
        Sample smp;
        smp.t = tj;
        smp.norm_y = y.norm();
        smp.norm_low = 0.0;
        smp.norm_tail = smp.norm_y;
        smp.norm_u = 0.0;
        smp.log_norm_u = -kInf;
        smp.V = y.squaredNorm();
        double v1 = 0.0;
        for (int i = 0; i < M; ++i) v1 += basis.tau(i) * y(i) * y(i);
        smp.V1 = v1;
        out.trajectory.samples.push_back(smp);
      }
    }
    out.trajectory.checkpoints.push_back({schedule.T, y});
  }

  out.terminal_state = y;
  out.report.log_sup_cost = log_sup;
  out.report.sup_cost = saturate_exp(log_sup);
  const double norm_T = y.norm();
  out.report.terminal_ratio = norm_y0 > 0.0 ? norm_T / norm_y0 : 0.0;
  out.report.log_terminal_ratio =
      (norm_y0 > 0.0 && norm_T > 0.0) ? std::log(norm_T) - std::log(norm_y0)
                                      : -kInf;
  return out;
}

CostScaling cost_scaling(ScheduleKind kind, const std::vector<double>& T_grid,
                         const Basis& basis, const Region& omega, double c1,
                         double c2, const StopRule& rule,
                         const IntegratorConfig& cfg, std::uint64_t seed,
                         int k) {
  if (T_grid.size() < 3)
    throw ConfigError("insufficient grid: cost scaling needs >= 3 horizons");

  CostScaling out;
  out.kind = kind;
  const Vector y0 = Rng(seed).unit_vector(basis.size());

  for (double T : T_grid) {
    const Schedule s = build_schedule(kind, T, c1, c2, basis, rule, k);
    IntegratorConfig run_cfg = cfg;
    run_cfg.record_samples = false;
    NullControlResult r = run_null_control(basis, omega, s, c1, c2, y0, run_cfg);
    out.gain = s.gain;
    out.c3 = s.c3;
    const double x =
        kind == ScheduleKind::kDyadic ? 1.0 / T : 1.0 / (T * T);
    if (!std::isfinite(r.report.log_sup_cost))
      throw NumericalError("degenerate cost fit: zero control cost in sweep");
    out.abscissae.push_back(x);
    out.log_costs.push_back(r.report.log_sup_cost);
    out.reports.push_back(std::move(r.report));
  }

  const auto [mn, mx] =
      std::minmax_element(out.log_costs.begin(), out.log_costs.end());
  if (*mx - *mn <= 1e-9 * (1.0 + std::abs(*mx)))
    throw NumericalError("degenerate cost fit: flat sup-cost across horizons");

  out.fit = fit_line(out.abscissae, out.log_costs);
  out.slope_ok = out.fit.slope <= out.c3 * (1.0 + 1e-9);
  return out;
}

} // namespace heatctl
