#pragma once

#include "heatctl/integrate.hpp"
#include "heatctl/schedules.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace heatctl {

struct StabilizerBranch {
  int n = 0;
  double t0 = 0.0;
  double t1 = 0.0;
  double lambda = 0.0;
  bool truncated = false; // cutoff-composed branch (index beyond N_T)
};

// One period of the T-periodic feedback: the quartic partition carries a
// plain linear branch up to N_T and a cutoff-composed branch beyond, with
// zero control past the last frequency the basis resolves.
struct StabilizerConfig {
  double T = 0.0;
  int n_T = 0;
  int N_T = 0;
  double Lambda = 1.0;
  double Gamma = 0.0;
  double c1 = 1.0;
  double c2 = 2.0;
  std::vector<StabilizerBranch> branches;
  double t_tail = 0.0;       // start of the zero-control remainder in [0, T)
  int n_scheduled_max = 0;   // last branch index the basis resolves
};

// Smallest N_T > n_T with
//   2 Lambda e^{G^2 N_T^2/16} (prod_{k=n_T}^{N_T} e^{-3 G^2 k^2/16})
//     e^{G^2 (N_T+1)^2/8} <= 1,
// by ascending scan; throws "no N_T within scan bound" past 10^6.
int select_NT(double Lambda, double Gamma, int n_T);

StabilizerConfig make_stabilizer(const Basis& basis, double T, double Lambda,
                                 double c1, double c2);

struct FlowPieceLog {
  long period = 0;
  int n = 0; // 0 for the tail segment
  double t0 = 0.0;
  double t1 = 0.0;
  std::string branch; // "linear" | "plateau" | "band" | "off" | "tail"
};

struct FlowResult {
  double s = 0.0;
  double t = 0.0;
  Vector y_start;
  Vector y_end;
  double sup_norm_state = 0.0;
  double sup_norm_control = 0.0;
  double log_sup_norm_control = 0.0;
  Trajectory trajectory;
  std::vector<FlowPieceLog> pieces;
};

struct FlowOptions {
  int samples_per_piece = 64;
  bool record_samples = true;
  double tolerance = 1e-8; // only the stepped cutoff band consumes this
};

// Owns the per-branch feedback constants, coupling blocks and modal data so
// repeated flow evaluations (probes, sweeps) share the setup cost.
class StabilizerEngine {
public:
  StabilizerEngine(StabilizerConfig cfg, const Basis& basis,
                   const Region& omega);

  const StabilizerConfig& config() const { return cfg_; }
  const Basis& basis() const { return basis_; }
  const FeedbackParams& branch_params(size_t i) const { return params_[i]; }

  // U(t; y): the control coefficients of the active branch at time t mod T,
  // empty for the zero-control tail. Exactly T-periodic by construction.
  Vector feedback(double t, const Vector& y) const;

  // Piecewise propagation of the closed loop from s to t. Norm suprema are
  // tracked at sample cadence regardless of record_samples.
  FlowResult flow(double s, double t, const Vector& y0,
                  const FlowOptions& opts = {}) const;

private:
  struct Segment {
    int branch_index = -1; // -1: zero-control tail
    double local_t0 = 0.0;
    double local_t1 = 0.0;
  };
  Segment segment_at(double local_t) const;

  const Basis& basis_;
  Region omega_;
  StabilizerConfig cfg_;
  std::vector<FeedbackParams> params_;
  std::vector<ModalPiece> pieces_;
  std::vector<Matrix> couplings_;    // per branch; empty when saturated
  std::vector<double> norm_G_;       // cached operator norms, 0 when saturated
  Vector tau_;
};

Vector periodic_feedback(const StabilizerEngine& engine, double t,
                         const Vector& y);

struct UniformStability {
  double delta = 0.0;
  double eta = 0.0;
  double amax = 0.0;       // worst sup-norm over unit starts (phase A)
  double worst_sup = 0.0;  // worst sup-norm over eta-ball starts (phase B)
  double worst_ratio = 0.0; // worst_sup / delta
  bool pass = false;
};

// Operational two-phase probe: measure the worst amplification A over a grid
// of start phases and random unit directions on [s, s+2T], set
// eta = 0.9 delta / max(A, 1), then verify sup ||flow|| <= delta from the
// eta-ball. A positive eta_candidate skips phase A.
UniformStability uniform_stability_probe(const StabilizerEngine& engine,
                                         double delta, int start_count,
                                         int dir_count, std::uint64_t seed,
                                         double eta_candidate = 0.0);

} // namespace heatctl
