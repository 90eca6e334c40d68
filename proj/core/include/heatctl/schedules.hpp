#pragma once

#include "heatctl/fitutil.hpp"
#include "heatctl/integrate.hpp"

#include <string>
#include <vector>

namespace heatctl {

enum class ScheduleKind { kPoly4, kPolyK, kDyadic };

std::string to_string(ScheduleKind kind);

// Gain-scale constants: smallest value with ln C + C X <= X^2/16 for both
// stored constants (worst case at the first piece; the slack grows with the
// piece index). Bisection on the decreasing side of the parabola, then an
// explicit re-verification over indices 1..1000.
double solve_gamma(double c1, double c2);            // quartic partition
double solve_gamma_eps(double c1, double c2, int k); // same root, n^{k+1} slack
double solve_q(double c1, double c2);                // dyadic partition

struct SchedulePiece {
  int n = 0;
  double t0 = 0.0;
  double t1 = 0.0;
  double lambda = 0.0;
};

struct StopRule {
  // Stop after the predicted terminal bound drops below eps_null, or after
  // the piece with index n_max, whichever is configured. The frequency cap
  // lambda_n <= 0.8 tau_M always applies on top.
  bool use_n_max = false;
  double eps_null = 1e-8;
  int n_max = 0;

  static StopRule by_eps(double eps) { return {false, eps, 0}; }
  static StopRule by_n_max(int n) { return {true, 0.0, n}; }
};

struct Schedule {
  ScheduleKind kind = ScheduleKind::kPoly4;
  double T = 0.0;
  int n_T = 0;  // first piece index (poly4/poly_k); dyadic starts at n = 0
  int k = 0;    // poly_k exponent
  int n0 = 0;   // dyadic: 1/T = 2^{n0}
  double gain = 0.0; // Gamma, Gamma_eps or Q
  double c3 = 0.0;   // gain^2 / 16
  std::vector<SchedulePiece> pieces;
  std::string stop_rule_fired; // "eps_null" | "n_max" | "truncation"
  double log_predicted_terminal = 0.0; // sum of ln(c1) + c1 sqrt(l) - l |I|/2
};

// Throws ConfigError("horizon not admissible...") unless 1/T is an integer
// (poly4), an exact k-th power of an integer (poly_k), or a power of two
// (dyadic). With an explicit n_max the frequency cap firing first is an
// error ("truncation too small for schedule tail").
Schedule build_schedule(ScheduleKind kind, double T, double c1, double c2,
                        const Basis& basis, const StopRule& rule, int k = 0);

struct PieceCost {
  int n = 0;
  double lambda = 0.0;
  double t0 = 0.0, t1 = 0.0;
  bool saturated = false;
  double sup_u = 0.0;      // inf past double range; log twin is authoritative
  double log_sup_u = 0.0;
  // ln c1 + c1 sqrt(lambda) + log ||y(piece start)||: certified ceiling of the
  // in-piece state transient, recorded because saturated samples cannot show it.
  double log_transient_ceiling = 0.0;
};

struct CostReport {
  ScheduleKind kind = ScheduleKind::kPoly4;
  double T = 0.0;
  double gain = 0.0;
  double c3 = 0.0;
  double sup_cost = 0.0;
  double log_sup_cost = 0.0;
  double terminal_ratio = 0.0;
  double log_terminal_ratio = 0.0;
  int n_max = 0; // index of the last executed piece
  std::string stop_rule;
  std::vector<PieceCost> per_piece;
};

struct NullControlResult {
  Trajectory trajectory;
  CostReport report;
  Vector terminal_state;
};

// Piecewise stationary feedback along the schedule, then free decay to T.
// Pieces propagate through the closed-loop eigenbasis (exact for
// representable gains, certified-envelope beyond; see integrate.hpp); the
// coupling matrix is assembled lazily per piece so fully saturated runs never
// form it. cfg controls sampling only.
NullControlResult run_null_control(const Basis& basis, const Region& omega,
                                   const Schedule& schedule, double c1,
                                   double c2, const Vector& y0,
                                   const IntegratorConfig& cfg);

struct CostScaling {
  ScheduleKind kind = ScheduleKind::kPoly4;
  double gain = 0.0;
  double c3 = 0.0;
  LineFit fit; // log sup-cost against 1/T (dyadic) or 1/T^2 (poly4, poly_k)
  bool slope_ok = false;
  std::vector<double> abscissae;
  std::vector<double> log_costs;
  std::vector<CostReport> reports;
};

// Requires >= 3 admissible horizons; rejects degenerate (flat or zero-cost)
// sweeps. The same basis serves every horizon, sized for the finest one.
CostScaling cost_scaling(ScheduleKind kind, const std::vector<double>& T_grid,
                         const Basis& basis, const Region& omega, double c1,
                         double c2, const StopRule& rule,
                         const IntegratorConfig& cfg, std::uint64_t seed,
                         int k = 0);

} // namespace heatctl
