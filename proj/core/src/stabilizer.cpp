#include "heatctl/stabilizer.hpp"

#include "heatctl/gram.hpp"
#include "heatctl/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

namespace heatctl {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr int kScanBound = 1'000'000;
constexpr int kBranchCap = 10'000;

double log_or_neg_inf(double x) { return x > 0.0 ? std::log(x) : -kInf; }

} // namespace

int select_NT(double Lambda, double Gamma, int n_T) {
  if (!(Lambda >= 1.0)) throw ConfigError("Lambda must be at least 1");
  if (!(Gamma > 0.0) || !std::isfinite(Gamma))
    throw ConfigError("Gamma must be positive and finite");
  if (n_T < 1) throw ConfigError("n_T must be at least 1");

  const double g2 = Gamma * Gamma / 16.0;
  // Contraction ledger over one period: the truncated branches past N must
  // absorb the dissipation deficit 2 Lambda e^{g2 N^2} of the linear head
  // against the accumulated decay e^{-3 g2 sum k^2} plus the re-entry
  // transient e^{2 g2 (N+1)^2} of the first cutoff branch.
  double sum_k2 = static_cast<double>(n_T) * n_T;
  for (int N = n_T + 1; N <= kScanBound; ++N) {
    const double dN = static_cast<double>(N);
    sum_k2 += dN * dN;
    const double lhs = std::log(2.0) + std::log(Lambda) + g2 * dN * dN -
                       3.0 * g2 * sum_k2 + 2.0 * g2 * (dN + 1.0) * (dN + 1.0);
    if (lhs <= 0.0) return N;
  }
  throw NumericalError("no N_T within scan bound");
}

StabilizerConfig make_stabilizer(const Basis& basis, double T, double Lambda,
                                 double c1, double c2) {
  if (!(T > 0.0) || !std::isfinite(T))
    throw ConfigError("period must be positive and finite");
  if (!(Lambda >= 1.0)) throw ConfigError("Lambda must be at least 1");

  const double inv = 1.0 / T;
  const double rounded = std::round(inv);
  if (!(rounded >= 1.0) || std::abs(inv - rounded) > 1e-9 * rounded)
    throw ConfigError("horizon not admissible: 1/T not integer");

  StabilizerConfig cfg;
  cfg.T = T;
  cfg.n_T = static_cast<int>(rounded);
  cfg.Lambda = Lambda;
  cfg.c1 = c1;
  cfg.c2 = c2;
  cfg.Gamma = solve_gamma(c1, c2);
  cfg.N_T = select_NT(Lambda, cfg.Gamma, cfg.n_T);

  const double cap = 0.8 * basis.tau_max();
  for (int n = cfg.n_T; n - cfg.n_T < kBranchCap; ++n) {
    const double dn = static_cast<double>(n);
    const double lambda = cfg.Gamma * cfg.Gamma * dn * dn * dn * dn;
    if (lambda > cap) break;
    StabilizerBranch b;
    b.n = n;
    b.t0 = n == cfg.n_T ? 0.0 : T - 1.0 / dn;
    b.t1 = T - 1.0 / (dn + 1.0);
    b.lambda = lambda;
    b.truncated = n > cfg.N_T;
    cfg.branches.push_back(b);
  }
  if (cfg.branches.empty())
    throw NumericalError(
        "truncation too small: no stabilizer branch resolvable at this M");
  cfg.t_tail = cfg.branches.back().t1;
  cfg.n_scheduled_max = cfg.branches.back().n;
  return cfg;
}

StabilizerEngine::StabilizerEngine(StabilizerConfig cfg, const Basis& basis,
                                   const Region& omega)
    : basis_(basis), omega_(omega), cfg_(std::move(cfg)) {
  if (cfg_.branches.empty())
    throw ConfigError("stabilizer configuration has no branches");
  if (omega_.dim() != basis_.domain.dim())
    throw ConfigError("control region dimension does not match domain");

  tau_.resize(basis_.size());
  for (int i = 0; i < basis_.size(); ++i) tau_(i) = basis_.tau(i);

  params_.reserve(cfg_.branches.size());
  pieces_.reserve(cfg_.branches.size());
  couplings_.reserve(cfg_.branches.size());
  norm_G_.reserve(cfg_.branches.size());
  for (const StabilizerBranch& b : cfg_.branches) {
    FeedbackParams p = make_params(b.lambda, cfg_.c1, cfg_.c2, basis_);
    const bool saturated =
        p.log_gamma > kLogGammaStandardMax || p.N > kModalBlockCap;
    if (saturated) {
      couplings_.emplace_back();
      norm_G_.push_back(0.0);
    } else {
      couplings_.push_back(gram_matrix(basis_, omega_, p.N));
      norm_G_.push_back(operator_norm(couplings_.back()));
    }
    pieces_.push_back(build_modal_piece(basis_, couplings_.back(), p));
    params_.push_back(std::move(p));
  }
}

StabilizerEngine::Segment StabilizerEngine::segment_at(double local_t) const {
  const double eps = cfg_.T * 1e-9;
  for (size_t i = 0; i < cfg_.branches.size(); ++i) {
    if (local_t < cfg_.branches[i].t1 - eps)
      return {static_cast<int>(i), cfg_.branches[i].t0, cfg_.branches[i].t1};
  }
  return {-1, cfg_.t_tail, cfg_.T};
}

Vector StabilizerEngine::feedback(double t, const Vector& y) const {
  if (y.size() != basis_.size())
    throw ConfigError("state length does not match basis");
  double tp = t - cfg_.T * std::floor(t / cfg_.T);
  if (tp >= cfg_.T || tp < 0.0) tp = 0.0; // floor wobble at period edges
  const Segment seg = segment_at(tp);
  if (seg.branch_index < 0) return Vector();
  const size_t i = static_cast<size_t>(seg.branch_index);
  return cfg_.branches[i].truncated ? apply_truncated_F(params_[i], y)
                                    : apply_F(params_[i], y);
}

Vector periodic_feedback(const StabilizerEngine& engine, double t,
                         const Vector& y) {
  return engine.feedback(t, y);
}

FlowResult StabilizerEngine::flow(double s, double t, const Vector& y0,
                                  const FlowOptions& opts) const {
  if (y0.size() != basis_.size())
    throw ConfigError("state length does not match basis");
  if (!y0.allFinite()) throw ConfigError("initial state must be finite");
  if (!(t >= s)) throw ConfigError("flow interval must be forward in time");
  if (opts.samples_per_piece < 1)
    throw ConfigError("need at least one sample interval");

  const double T = cfg_.T;
  const double eps_t = T * 1e-9;
  const FeedbackParams tail_params; // N = 0, mu = 0: V collapses to ||y||^2

  FlowResult res;
  res.s = s;
  res.t = t;
  res.y_start = y0;
  res.sup_norm_state = y0.norm();
  res.log_sup_norm_control = -kInf;

  // Locate the first segment. Starts sitting within eps of a period edge
  // belong to the period on the right.
  long period = static_cast<long>(std::floor(s / T));
  if (static_cast<double>(period + 1) * T - s <= eps_t) ++period;
  double local = s - static_cast<double>(period) * T;
  if (local < 0.0) local = 0.0;
  Segment seg = segment_at(local);

  Vector y = y0;
  double now = s;
  const int K = opts.samples_per_piece;

  auto note_sample = [&](const Sample& smp) {
    res.sup_norm_state = std::max(res.sup_norm_state, smp.norm_y);
    res.log_sup_norm_control =
        std::max(res.log_sup_norm_control, smp.log_norm_u);
    if (opts.record_samples) res.trajectory.samples.push_back(smp);
  };

  if (opts.record_samples) res.trajectory.checkpoints.push_back({s, y0});

  while (t - now > eps_t) {
    const double seg_end_abs =
        seg.branch_index < 0
            ? static_cast<double>(period + 1) * T
            : static_cast<double>(period) * T + seg.local_t1;
    const double end = std::min(seg_end_abs, t);
    const double span = end - now;

    if (span > 0.0) {
      FlowPieceLog log_row;
      log_row.period = period;
      log_row.t0 = now;
      log_row.t1 = end;

      if (seg.branch_index < 0) {
        log_row.n = 0;
        log_row.branch = "tail";
        const Vector entry = y;
        for (int j = 0; j <= K; ++j) {
          const double h = span * j / K;
          if (j > 0)
            y = ((-tau_.array() * h).exp() * entry.array()).matrix();
          note_sample(make_closed_loop_sample(now + h, y, basis_, tail_params,
                                              Law::kNone));
        }
      } else {
        const size_t i = static_cast<size_t>(seg.branch_index);
        const FeedbackParams& p = params_[i];
        const ModalPiece& piece = pieces_[i];
        log_row.n = cfg_.branches[i].n;

        if (!cfg_.branches[i].truncated) {
          log_row.branch = "linear";
          const Vector entry = y;
          for (int j = 0; j <= K; ++j) {
            const double h = span * j / K;
            if (j > 0) y = modal_propagate(piece, entry, h);
            note_sample(make_closed_loop_sample(now + h, y, basis_, p,
                                                Law::kStationary));
          }
        } else {
          // Cutoff branch: classify per substep. The plateau is forward
          // invariant (the loop contracts the low block) and the off regime
          // decays diagonally, so both advance in closed form; only the band
          // between them needs stepping.
          bool saw_off = false;
          bool saw_band = false;
          for (int j = 0; j <= K; ++j) {
            if (j > 0) {
              const double h = span / K;
              const TruncatedGain g =
                  truncated_gain(p, log_or_neg_inf(y.head(p.N).norm()));
              switch (g.regime) {
                case CutoffRegime::kPlateau:
                  y = modal_propagate(piece, y, h);
                  break;
                case CutoffRegime::kOff:
                  y = ((-tau_.array() * h).exp() * y.array()).matrix();
                  saw_off = true;
                  break;
                case CutoffRegime::kBand:
                  y = integrate_truncated_window(basis_, couplings_[i], p, y,
                                                 h, opts.tolerance, norm_G_[i]);
                  saw_band = true;
                  break;
              }
            }
            note_sample(make_closed_loop_sample(now + span * j / K, y, basis_,
                                                p, Law::kTruncated));
          }
          log_row.branch = saw_band ? "band" : saw_off ? "off" : "plateau";
        }
      }
      res.pieces.push_back(std::move(log_row));
    }

    now = end;
    if (t - now <= eps_t) break;
    if (seg.branch_index < 0) {
      ++period;
      seg = segment_at(0.0);
    } else if (static_cast<size_t>(seg.branch_index) + 1 <
               cfg_.branches.size()) {
      const StabilizerBranch& nb =
          cfg_.branches[static_cast<size_t>(seg.branch_index) + 1];
      seg = {seg.branch_index + 1, nb.t0, nb.t1};
    } else {
      seg = {-1, cfg_.t_tail, T};
    }
  }

  res.y_end = y;
  res.sup_norm_control =
      res.log_sup_norm_control > 710.0
          ? kInf
          : (res.log_sup_norm_control == -kInf
                 ? 0.0
                 : std::exp(res.log_sup_norm_control));
  if (opts.record_samples) res.trajectory.checkpoints.push_back({t, y});
  return res;
}

UniformStability uniform_stability_probe(const StabilizerEngine& engine,
                                         double delta, int start_count,
                                         int dir_count, std::uint64_t seed,
                                         double eta_candidate) {
  if (!(delta > 0.0) || !std::isfinite(delta))
    throw ConfigError("delta must be positive and finite");
  if (start_count < 1) throw ConfigError("need at least one start phase");
  if (dir_count < 1) throw ConfigError("need at least one probe direction");

  const double T = engine.config().T;
  const Index M = engine.basis().size();
  Rng rng(seed);
  std::vector<Vector> dirs;
  dirs.reserve(static_cast<size_t>(dir_count));
  for (int j = 0; j < dir_count; ++j) dirs.push_back(rng.unit_vector(M));

  FlowOptions opts;
  opts.samples_per_piece = 32;
  opts.record_samples = false;

  UniformStability out;
  out.delta = delta;

  // Phase A: worst amplification from unit starts fixes the admission
  // radius; phase B verifies the delta-ball bound from eta-scaled starts.
  out.amax = 1.0;
  if (eta_candidate > 0.0) {
    out.eta = eta_candidate;
  } else {
    for (int i = 0; i < start_count; ++i) {
      const double s = T * i / start_count;
      for (const Vector& d : dirs) {
        const FlowResult fr = engine.flow(s, s + 2.0 * T, d, opts);
        out.amax = std::max(out.amax, fr.sup_norm_state);
      }
    }
    out.eta = 0.9 * delta / out.amax;
  }

  out.worst_sup = 0.0;
  for (int i = 0; i < start_count; ++i) {
    const double s = T * i / start_count;
    for (const Vector& d : dirs) {
      const FlowResult fr = engine.flow(s, s + 2.0 * T, out.eta * d, opts);
      out.worst_sup = std::max(out.worst_sup, fr.sup_norm_state);
    }
  }
  out.worst_ratio = out.worst_sup / delta;
  out.pass = out.worst_sup <= delta * (1.0 + 1e-12);
  return out;
}

} // namespace heatctl
