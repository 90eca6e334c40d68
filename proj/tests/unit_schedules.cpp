#include "heatctl/schedules.hpp"

#include "heatctl/feedback.hpp"
#include "heatctl/rng.hpp"
#include "heatctl/spectral_fit.hpp"
#include "test_util.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

using namespace heatctl;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Constants fitted on the pi-interval desk geometry, omega = (1, 2).
constexpr double kDeskC1 = 3.0729549635940203;
constexpr double kDeskC2 = 7.015625;

// Independent restatement of the gain feasibility condition: the returned
// root must satisfy ln c + c g w <= (g^2/16) w for both constants at every
// slack weight w >= 1 the partition can produce.
bool gain_feasible(double g, double c1, double c2, double expo, int n_hi) {
  for (int n = 1; n <= n_hi; ++n) {
    const double w = std::pow(static_cast<double>(n), expo);
    for (double c : {c1, c2}) {
      if (std::log(c) + c * g * w > (g * g / 16.0) * w * (1.0 + 1e-12))
        return false;
    }
  }
  return true;
}

} // namespace

TEST_CASE("gain constant for c1 = c2 = 1 is the parabola intersection") {
  // ln 1 + x = x^2/16 has root 16; bisection lands within its 1e-9 bracket,
  // on the feasible side.
  const double g = solve_gamma(1.0, 1.0);
  CHECK(g == doctest::Approx(16.0).epsilon(1e-9));
  CHECK(g >= 16.0);
  CHECK(gain_feasible(g, 1.0, 1.0, 2.0, 1000));
}

TEST_CASE("gain constant for c1 = 1, c2 = 2 matches the quadratic root") {
  // Binding constant is c2 = 2: ln 2 + 2x = x^2/16, so
  // x = 16 + sqrt(256 + 16 ln 2).
  const double root = 16.0 + std::sqrt(256.0 + 16.0 * std::log(2.0));
  const double g = solve_gamma(1.0, 2.0);
  CHECK(g == doctest::Approx(root).epsilon(1e-9));
  CHECK(g == doctest::Approx(32.342899219200953).epsilon(1e-9));
}

TEST_CASE("all three partitions share one gain root") {
  // The solvers differ only in the re-verification exponent; the root is
  // identical bit for bit.
  const double a = solve_gamma(1.5, 3.5);
  const double b = solve_q(1.5, 3.5);
  const double c = solve_gamma_eps(1.5, 3.5, 3);
  CHECK(a == b);
  CHECK(a == c);
  CHECK(gain_feasible(a, 1.5, 3.5, 2.0, 1000));
  CHECK(gain_feasible(a, 1.5, 3.5, 4.0, 100));
}

TEST_CASE("desk constants produce the frozen gain") {
  const double q = solve_q(kDeskC1, kDeskC2);
  CHECK(q == doctest::Approx(112.52700228625918).epsilon(1e-9));
  CHECK(gain_feasible(q, kDeskC1, kDeskC2, 1.0, 1000));
}

TEST_CASE("gain solver rejects constants below one") {
  CHECK(testutil::throws_with<ConfigError>(
      [] { solve_gamma(0.5, 2.0); }, "c1, c2 >= 1"));
  CHECK(testutil::throws_with<ConfigError>(
      [] { solve_q(1.0, 0.9); }, "c1, c2 >= 1"));
  CHECK(testutil::throws_with<ConfigError>(
      [] { solve_gamma_eps(1.0, 2.0, 0); }, "k must be >= 1"));
}

TEST_CASE("quartic schedule at T = 1/3 resolves one piece on M = 512") {
  const Basis basis = testutil::desk_basis(512);
  const Schedule s = build_schedule(ScheduleKind::kPoly4, 1.0 / 3.0, 1.0, 2.0,
                                    basis, StopRule::by_eps(1e-8));
  CHECK(s.n_T == 3);
  CHECK(s.gain == solve_gamma(1.0, 2.0));
  CHECK(s.c3 == s.gain * s.gain / 16.0);

  // lambda_3 = Gamma^2 81 ~ 8.5e4 fits under the 0.8 tau_512 cap; lambda_4
  // does not, and the single piece already drives the bound below 1e-8.
  REQUIRE(s.pieces.size() == 1);
  CHECK(s.pieces[0].n == 3);
  CHECK(s.pieces[0].t0 == 0.0);
  CHECK(s.pieces[0].t1 == doctest::Approx(1.0 / 3.0 - 0.25).epsilon(1e-15));
  CHECK(s.pieces[0].lambda ==
        doctest::Approx(s.gain * s.gain * 81.0).epsilon(1e-15));
  CHECK(s.stop_rule_fired == "eps_null");

  const SchedulePiece& p = s.pieces[0];
  const double expect = std::log(1.0) + std::sqrt(p.lambda) -
                        p.lambda * (p.t1 - p.t0) / 2.0;
  CHECK(s.log_predicted_terminal == doctest::Approx(expect).epsilon(1e-12));
  CHECK(s.log_predicted_terminal < std::log(1e-8));
}

TEST_CASE("poly_k with k = 1 reproduces the quartic partition") {
  const Basis basis = testutil::desk_basis(512);
  const Schedule a = build_schedule(ScheduleKind::kPoly4, 1.0 / 3.0, 1.0, 2.0,
                                    basis, StopRule::by_eps(1e-8));
  const Schedule b = build_schedule(ScheduleKind::kPolyK, 1.0 / 3.0, 1.0, 2.0,
                                    basis, StopRule::by_eps(1e-8), 1);
  CHECK(a.gain == b.gain);
  REQUIRE(a.pieces.size() == b.pieces.size());
  for (size_t i = 0; i < a.pieces.size(); ++i) {
    CHECK(a.pieces[i].n == b.pieces[i].n);
    CHECK(a.pieces[i].lambda ==
          doctest::Approx(b.pieces[i].lambda).epsilon(1e-15));
    CHECK(a.pieces[i].t0 == doctest::Approx(b.pieces[i].t0).epsilon(1e-15));
    CHECK(a.pieces[i].t1 == doctest::Approx(b.pieces[i].t1).epsilon(1e-15));
  }
}

TEST_CASE("poly_k schedule starts exactly at zero despite the root") {
  // T = 1/9 with k = 2: n_T = 3 and t0 = T - 3^{-2} is an analytic zero;
  // the assembled piece must carry 0.0, not a rounding residue.
  const Basis basis = testutil::desk_basis(1024);
  const Schedule s = build_schedule(ScheduleKind::kPolyK, 1.0 / 9.0, 1.0, 2.0,
                                    basis, StopRule::by_eps(1e-8), 2);
  CHECK(s.n_T == 3);
  CHECK(s.k == 2);
  REQUIRE(s.pieces.size() == 1);
  CHECK(s.pieces[0].t0 == 0.0);
  CHECK(s.pieces[0].t1 ==
        doctest::Approx(1.0 / 9.0 - 1.0 / 16.0).epsilon(1e-15));
  CHECK(s.pieces[0].lambda ==
        doctest::Approx(s.gain * s.gain * 729.0).epsilon(1e-15));
}

TEST_CASE("dyadic schedule structure at T = 1/4") {
  const Basis basis = testutil::desk_basis(256);
  const Schedule s = build_schedule(ScheduleKind::kDyadic, 0.25, 1.0, 2.0,
                                    basis, StopRule::by_eps(1e-8));
  CHECK(s.n0 == 2);
  CHECK(s.gain == solve_q(1.0, 2.0));
  REQUIRE(s.pieces.size() == 1);
  CHECK(s.pieces[0].n == 0);
  CHECK(s.pieces[0].t0 == 0.0);
  CHECK(s.pieces[0].t1 == doctest::Approx(0.125).epsilon(1e-15));
  CHECK(s.pieces[0].lambda ==
        doctest::Approx(s.gain * s.gain * 16.0).epsilon(1e-15));
  CHECK(s.stop_rule_fired == "eps_null");
}

TEST_CASE("n_max stop rule walks the dyadic ladder") {
  const Basis basis = testutil::desk_basis(256);
  const Schedule s = build_schedule(ScheduleKind::kDyadic, 0.5, 1.0, 2.0,
                                    basis, StopRule::by_n_max(1));
  REQUIRE(s.pieces.size() == 2);
  CHECK(s.pieces[0].n == 0);
  CHECK(s.pieces[1].n == 1);
  CHECK(s.pieces[1].lambda ==
        doctest::Approx(4.0 * s.pieces[0].lambda).epsilon(1e-15));
  CHECK(s.pieces[1].t0 == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(s.pieces[1].t1 == doctest::Approx(0.375).epsilon(1e-15));
  CHECK(s.stop_rule_fired == "n_max");

  // Asking for a piece past the frequency cap is an error, not a silent
  // truncation, when the caller pinned the index.
  CHECK(testutil::throws_with<NumericalError>(
      [&] {
        build_schedule(ScheduleKind::kDyadic, 0.5, 1.0, 2.0, basis,
                       StopRule::by_n_max(2));
      },
      "truncation too small for schedule tail"));
}

TEST_CASE("horizon admissibility") {
  const Basis basis = testutil::desk_basis(256);
  const StopRule eps = StopRule::by_eps(1e-8);

  CHECK(testutil::throws_with<ConfigError>(
      [&] { build_schedule(ScheduleKind::kPoly4, 0.3, 1.0, 2.0, basis, eps); },
      "1/T not integer"));
  // The binary representation of 1/3 round-trips: 1/(1/3) rounds back to 3.
  // The first piece sits at gain^2 * 81 ~ 8.5e4, above the 256-mode cap, so
  // this probe needs the deeper basis.
  CHECK_NOTHROW(build_schedule(ScheduleKind::kPoly4, 1.0 / 3.0, 1.0, 2.0,
                               testutil::desk_basis(512), eps));
  CHECK(testutil::throws_with<ConfigError>(
      [&] {
        build_schedule(ScheduleKind::kDyadic, 1.0 / 3.0, 1.0, 2.0, basis, eps);
      },
      "1/T not a power of two"));
  CHECK(testutil::throws_with<ConfigError>(
      [&] {
        build_schedule(ScheduleKind::kDyadic, 1.0 / 6.0, 1.0, 2.0, basis, eps);
      },
      "1/T not a power of two"));
  CHECK(testutil::throws_with<ConfigError>(
      [&] {
        build_schedule(ScheduleKind::kPolyK, 0.125, 1.0, 2.0, basis, eps, 2);
      },
      "1/T not a k-th power"));
  CHECK(testutil::throws_with<ConfigError>(
      [&] { build_schedule(ScheduleKind::kPoly4, 1.5, 1.0, 2.0, basis, eps); },
      "T must lie in (0, 1]"));
  CHECK(testutil::throws_with<ConfigError>(
      [&] { build_schedule(ScheduleKind::kPoly4, 0.0, 1.0, 2.0, basis, eps); },
      "T must lie in (0, 1]"));
  // T = 1 is admissible everywhere: 1 is an integer, a k-th power, and 2^0.
  CHECK_NOTHROW(
      build_schedule(ScheduleKind::kPoly4, 1.0, 1.0, 2.0, basis, eps));
  CHECK_NOTHROW(
      build_schedule(ScheduleKind::kDyadic, 1.0, 1.0, 2.0, basis, eps));
  CHECK_NOTHROW(
      build_schedule(ScheduleKind::kPolyK, 1.0, 1.0, 2.0, basis, eps, 2));

  CHECK(testutil::throws_with<ConfigError>(
      [&] {
        build_schedule(ScheduleKind::kPolyK, 0.25, 1.0, 2.0, basis, eps, 0);
      },
      "schedule.k required"));
  CHECK(testutil::throws_with<ConfigError>(
      [&] {
        build_schedule(ScheduleKind::kPoly4, 0.25, 1.0, 2.0, basis,
                       StopRule::by_n_max(-1));
      },
      "nonnegative index"));
  CHECK(testutil::throws_with<ConfigError>(
      [&] {
        build_schedule(ScheduleKind::kPoly4, 0.25, 1.0, 2.0, basis,
                       StopRule::by_eps(0.0));
      },
      "positive target"));
}

TEST_CASE("truncation too small leaves no resolvable piece") {
  // poly_k, k = 2 at T = 1/9 opens at lambda ~ 7.6e5; M = 512 caps at
  // 0.8 * 512^2 ~ 2.1e5.
  const Basis basis = testutil::desk_basis(512);
  CHECK(testutil::throws_with<NumericalError>(
      [&] {
        build_schedule(ScheduleKind::kPolyK, 1.0 / 9.0, 1.0, 2.0, basis,
                       StopRule::by_eps(1e-8), 2);
      },
      "no schedule piece resolvable"));
}

TEST_CASE("schedule kind names") {
  CHECK(to_string(ScheduleKind::kPoly4) == "poly4");
  CHECK(to_string(ScheduleKind::kPolyK) == "poly_k");
  CHECK(to_string(ScheduleKind::kDyadic) == "dyadic");
}

TEST_CASE("null control run on a certified wide observation window") {
  // omega = (0.3, 2.9) keeps lambda_min(J_N) >= e^{-sqrt(lambda)} well into
  // the spectrum, so c1 = 1 is a certified constant here and the single
  // dyadic piece at T = 1 runs through the exact closed-loop eigenbasis.
  const Domain dom = make_domain({std::numbers::pi});
  const Basis basis = make_basis(dom, 64);
  const Region omega = make_region(dom, {0.3}, {2.9});
  const double c1 = 1.0, c2 = 2.375;

  const Schedule s = build_schedule(ScheduleKind::kDyadic, 1.0, c1, c2, basis,
                                    StopRule::by_eps(1e-8));
  REQUIRE(s.pieces.size() == 1);
  const double lambda0 = s.pieces[0].lambda;
  const auto certified = verify_pointwise(basis, omega, c1, lambda0);
  REQUIRE(certified.has_value());
  REQUIRE(*certified);

  const Vector y0 = Rng(11).unit_vector(basis.size());
  IntegratorConfig cfg;
  cfg.samples_per_interval = 64;
  const NullControlResult res =
      run_null_control(basis, omega, s, c1, c2, y0, cfg);

  const FeedbackParams p = make_params(lambda0, c1, c2, basis);
  REQUIRE(res.report.per_piece.size() == 1);
  const PieceCost& pc = res.report.per_piece[0];
  CHECK_FALSE(pc.saturated);
  CHECK(pc.log_sup_u ==
        doctest::Approx(p.log_gamma + std::log(y0.head(p.N).norm()))
            .epsilon(1e-14));
  CHECK(pc.sup_u == doctest::Approx(std::exp(pc.log_sup_u)).epsilon(1e-12));
  CHECK(pc.log_transient_ceiling ==
        doctest::Approx(std::log(c1) + c1 * std::sqrt(lambda0)).epsilon(1e-12));

  // 65 samples across the piece, 64 across the free-decay remainder; one
  // checkpoint per segment.
  CHECK(res.trajectory.samples.size() == 129);
  REQUIRE(res.trajectory.checkpoints.size() == 2);
  CHECK(res.trajectory.checkpoints[0].t == s.pieces[0].t1);
  CHECK(res.trajectory.checkpoints[1].t == 1.0);
  CHECK(res.trajectory.checkpoints[1].y.isApprox(res.terminal_state));

  // The closed-loop block is symmetric negative definite, so the control
  // norm peaks at piece entry: the report sup equals the first sample.
  double worst = -kInf;
  for (const Sample& smp : res.trajectory.samples)
    worst = std::max(worst, smp.log_norm_u);
  CHECK(worst == res.report.log_sup_cost);
  CHECK(res.report.log_sup_cost == pc.log_sup_u);

  // Terminal state: certified prediction is ~e^{-330}; the run undershoots
  // it (the free tail decays much faster than the envelope).
  CHECK(res.report.terminal_ratio < 1e-200);
  CHECK(res.report.log_terminal_ratio < s.log_predicted_terminal);
  for (const Sample& smp : res.trajectory.samples)
    if (smp.t > s.pieces[0].t1) CHECK(smp.norm_u == 0.0);
}

TEST_CASE("saturated desk run lands exactly on zero") {
  // Fitted desk constants at T = 1/4 put log gamma ~ 1.4e3: the gain is not
  // representable and the piece runs on the certified envelope. The head
  // envelope e^{-lambda dt} and the tail decay both underflow, so the
  // terminal state is exactly the zero vector.
  const Basis basis = testutil::desk_basis(1024);
  const Region omega = testutil::desk_omega();
  const Schedule s = build_schedule(ScheduleKind::kDyadic, 0.25, kDeskC1,
                                    kDeskC2, basis, StopRule::by_eps(1e-8));
  REQUIRE(s.pieces.size() == 1);
  CHECK(s.pieces[0].lambda ==
        doctest::Approx(s.gain * s.gain * 16.0).epsilon(1e-15));

  const Vector y0 = Rng(3).unit_vector(basis.size());
  IntegratorConfig cfg;
  cfg.samples_per_interval = 8;
  const NullControlResult res =
      run_null_control(basis, omega, s, kDeskC1, kDeskC2, y0, cfg);

  REQUIRE(res.report.per_piece.size() == 1);
  CHECK(res.report.per_piece[0].saturated);
  CHECK(res.report.sup_cost == kInf);
  CHECK(std::isfinite(res.report.log_sup_cost));

  const FeedbackParams p = make_params(s.pieces[0].lambda, kDeskC1, kDeskC2,
                                       basis);
  CHECK(res.report.log_sup_cost ==
        doctest::Approx(p.log_gamma + std::log(y0.head(p.N).norm()))
            .epsilon(1e-14));

  CHECK(res.terminal_state.norm() == 0.0);
  CHECK(res.report.terminal_ratio == 0.0);
  CHECK(res.report.log_terminal_ratio == -kInf);
}

TEST_CASE("pinned-index run reports the zero-state tail honestly") {
  // With n_max = 1 the second desk piece starts from the exact zero left by
  // the first: its cost entries must be -inf/0, not NaN, and the first
  // piece's entries must match the eps-rule run bit for bit.
  const Basis basis = testutil::desk_basis(1024);
  const Region omega = testutil::desk_omega();
  const Vector y0 = Rng(3).unit_vector(basis.size());
  IntegratorConfig cfg;
  cfg.record_samples = false;

  const Schedule s0 = build_schedule(ScheduleKind::kDyadic, 0.25, kDeskC1,
                                     kDeskC2, basis, StopRule::by_n_max(0));
  const Schedule s1 = build_schedule(ScheduleKind::kDyadic, 0.25, kDeskC1,
                                     kDeskC2, basis, StopRule::by_n_max(1));
  REQUIRE(s0.pieces.size() == 1);
  REQUIRE(s1.pieces.size() == 2);
  CHECK(s1.pieces[0].lambda == s0.pieces[0].lambda);
  CHECK(s1.pieces[0].t1 == s0.pieces[0].t1);

  const NullControlResult r0 =
      run_null_control(basis, omega, s0, kDeskC1, kDeskC2, y0, cfg);
  const NullControlResult r1 =
      run_null_control(basis, omega, s1, kDeskC1, kDeskC2, y0, cfg);

  CHECK(r1.report.per_piece[0].log_sup_u == r0.report.per_piece[0].log_sup_u);
  CHECK(r1.report.per_piece[0].log_transient_ceiling ==
        r0.report.per_piece[0].log_transient_ceiling);

  const PieceCost& second = r1.report.per_piece[1];
  CHECK(second.log_sup_u == -kInf);
  CHECK(second.sup_u == 0.0);
  CHECK(second.log_transient_ceiling == -kInf);
  CHECK(r1.report.log_sup_cost == r0.report.log_sup_cost);
  CHECK(r1.report.n_max == 1);
  CHECK(r1.report.stop_rule == "n_max");
}

TEST_CASE("state length must match the basis") {
  const Basis basis = testutil::desk_basis(64);
  const Region omega = testutil::desk_omega();
  const Schedule s = build_schedule(ScheduleKind::kDyadic, 1.0, 1.0, 2.0,
                                    basis, StopRule::by_eps(1e-8));
  IntegratorConfig cfg;
  CHECK(testutil::throws_with<ConfigError>(
      [&] {
        run_null_control(basis, omega, s, 1.0, 2.0, Vector::Ones(8), cfg);
      },
      "state length"));
}

TEST_CASE("cost scaling across dyadic horizons on desk constants") {
  const Basis basis = testutil::desk_basis(1024);
  const Region omega = testutil::desk_omega();
  IntegratorConfig cfg;
  cfg.record_samples = false;

  const CostScaling cs =
      cost_scaling(ScheduleKind::kDyadic, {0.5, 0.25, 0.125}, basis, omega,
                   kDeskC1, kDeskC2, StopRule::by_eps(1e-8), cfg, 7);

  CHECK(cs.gain == doctest::Approx(112.52700228625918).epsilon(1e-9));
  CHECK(cs.c3 == cs.gain * cs.gain / 16.0);
  REQUIRE(cs.abscissae.size() == 3);
  CHECK(cs.abscissae[0] == 2.0);
  CHECK(cs.abscissae[1] == 4.0);
  CHECK(cs.abscissae[2] == 8.0);
  REQUIRE(cs.reports.size() == 3);
  for (const CostReport& r : cs.reports) {
    CHECK(std::isfinite(r.log_sup_cost));
    CHECK(r.per_piece.size() == 1);
  }

  // log sup-cost is dominated by c1 Q / T, an affine function of 1/T; the
  // fitted slope sits far under the certified ceiling c3 = Q^2/16 ~ 791.4.
  CHECK(cs.fit.n == 3);
  CHECK(cs.fit.r2 > 0.99);
  CHECK(cs.fit.slope == doctest::Approx(346.3456).epsilon(2e-3));
  CHECK(cs.fit.slope < cs.c3);
  CHECK(cs.slope_ok);
}

TEST_CASE("cost scaling needs at least three horizons") {
  const Basis basis = testutil::desk_basis(256);
  const Region omega = testutil::desk_omega();
  IntegratorConfig cfg;
  CHECK(testutil::throws_with<ConfigError>(
      [&] {
        cost_scaling(ScheduleKind::kDyadic, {0.5, 0.25}, basis, omega, 1.0,
                     2.0, StopRule::by_eps(1e-8), cfg, 7);
      },
      "insufficient grid"));
}
