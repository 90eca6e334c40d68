#include "heatctl/stabilizer.hpp"

#include "heatctl/gram.hpp"
#include "heatctl/rng.hpp"
#include "heatctl/spectral_fit.hpp"
#include "test_util.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <set>

using namespace heatctl;
using testutil::throws_with;

namespace {

constexpr double kDeskC1 = 3.0729549635940203;
constexpr double kDeskC2 = 7.015625;

// Contraction inequality behind the branch split, restated independently so
// the selection routine is checked against the formula rather than itself.
double split_margin(double Lambda, double Gamma, int n_T, int N) {
  const double g2 = Gamma * Gamma / 16.0;
  double sum_k2 = 0.0;
  for (int k = n_T; k <= N; ++k) sum_k2 += double(k) * k;
  return std::log(2.0) + std::log(Lambda) + g2 * double(N) * N -
         3.0 * g2 * sum_k2 + 2.0 * g2 * (N + 1.0) * (N + 1.0);
}

// Two-branch configuration on a wide control region where c1 = 1 is a
// certified constant: one linear branch, one cutoff branch, then a tail.
struct SmallWorld {
  Basis basis;
  Region omega;
  StabilizerConfig cfg;
};

SmallWorld small_world() {
  const auto domain = make_domain({std::numbers::pi});
  SmallWorld w{make_basis(domain, 32), make_region(domain, {0.3}, {2.9}), {}};
  w.cfg.T = 0.5;
  w.cfg.n_T = 2;
  w.cfg.N_T = 2;
  w.cfg.Lambda = 1.0;
  w.cfg.Gamma = 10.0;
  w.cfg.c1 = 1.0;
  w.cfg.c2 = 2.0;
  w.cfg.branches.push_back({2, 0.0, 1.0 / 6.0, 25.0, false});
  w.cfg.branches.push_back({3, 1.0 / 6.0, 0.25, 100.0, true});
  w.cfg.t_tail = 0.25;
  w.cfg.n_scheduled_max = 3;
  return w;
}

} // namespace

TEST_CASE("branch split index satisfies the contraction inequality minimally") {
  CHECK(select_NT(1.0, 16.0, 2) == 4);
  CHECK(split_margin(1.0, 16.0, 2, 4) <= 0.0);
  CHECK(split_margin(1.0, 16.0, 2, 3) > 0.0);

  const double Gamma = solve_gamma(kDeskC1, kDeskC2);
  const int NT = select_NT(1.0, Gamma, 2);
  CHECK(NT == 4);
  CHECK(split_margin(1.0, Gamma, 2, NT) <= 0.0);
  CHECK(split_margin(1.0, Gamma, 2, NT - 1) > 0.0);

  // A larger stabilized ball can only push the split out.
  CHECK(select_NT(std::exp(20.0), 16.0, 2) >= 4);

  CHECK(throws_with<ConfigError>([] { select_NT(0.5, 16.0, 2); },
                                 "Lambda must be at least 1"));
  CHECK(throws_with<ConfigError>([] { select_NT(1.0, 0.0, 2); }, "Gamma"));
  CHECK(throws_with<ConfigError>([] { select_NT(1.0, 16.0, 0); }, "n_T"));
}

TEST_CASE("stabilizer assembly on the reference geometry") {
  const auto basis = testutil::desk_basis(512);
  const auto cfg = make_stabilizer(basis, 0.5, 1.0, kDeskC1, kDeskC2);
  CHECK(cfg.n_T == 2);
  CHECK(cfg.N_T == 4);
  CHECK(cfg.Gamma == doctest::Approx(112.52700228625918).epsilon(1e-9));
  REQUIRE(cfg.branches.size() == 1);
  CHECK(cfg.branches[0].n == 2);
  CHECK(cfg.branches[0].t0 == 0.0);
  CHECK(cfg.branches[0].t1 == doctest::Approx(0.5 - 1.0 / 3.0).epsilon(1e-14));
  CHECK(cfg.branches[0].lambda ==
        doctest::Approx(cfg.Gamma * cfg.Gamma * 16.0).epsilon(1e-12));
  CHECK_FALSE(cfg.branches[0].truncated); // n = 2 <= N_T
  CHECK(cfg.t_tail == cfg.branches[0].t1);
  CHECK(cfg.n_scheduled_max == 2);
}

TEST_CASE("stabilizer assembly rejects unresolvable configurations") {
  const auto basis = testutil::desk_basis(512);
  CHECK(throws_with<ConfigError>(
      [&] { make_stabilizer(basis, 0.3, 1.0, kDeskC1, kDeskC2); },
      "1/T not integer"));
  CHECK(throws_with<ConfigError>(
      [&] { make_stabilizer(basis, 0.5, 0.5, kDeskC1, kDeskC2); },
      "Lambda must be at least 1"));
  // T = 1/4 starts the partition at lambda = Gamma^2 256, beyond this basis.
  CHECK(throws_with<NumericalError>(
      [&] { make_stabilizer(basis, 0.25, 1.0, kDeskC1, kDeskC2); },
      "no stabilizer branch resolvable"));
}

TEST_CASE("small world is certified for its constants") {
  const auto w = small_world();
  for (double lambda : {25.0, 100.0}) {
    const auto ok = verify_pointwise(w.basis, w.omega, w.cfg.c1, lambda);
    REQUIRE(ok.has_value());
    CHECK(*ok);
  }
}

TEST_CASE("periodic feedback dispatches by segment") {
  const auto w = small_world();
  const StabilizerEngine engine(w.cfg, w.basis, w.omega);
  Rng rng(21);
  const Vector y = rng.unit_vector(32);

  // Linear branch: plain scaled projection onto the first N modes.
  const Vector u1 = engine.feedback(0.05, y);
  REQUIRE(u1.size() == engine.branch_params(0).N);
  for (Index i = 0; i < u1.size(); ++i)
    CHECK(u1(i) == -engine.branch_params(0).gamma * y(i));

  // Cutoff branch at unit size: far past the cutoff, control vanishes.
  const Vector u2 = engine.feedback(0.2, y);
  REQUIRE(u2.size() == engine.branch_params(1).N);
  CHECK(u2.norm() == 0.0);

  // Tail: no control at all, signalled by an empty vector.
  CHECK(engine.feedback(0.3, y).size() == 0);

  // Exact periodicity at representable times: t and t + T reduce to the same
  // local offset, hence bitwise equal control.
  for (double t : {0.0625, 0.125, 0.1875, 0.3125}) {
    const Vector a = engine.feedback(t, y);
    const Vector b = engine.feedback(t + w.cfg.T, y);
    const Vector c = periodic_feedback(engine, t + 3.0 * w.cfg.T, y);
    REQUIRE(a.size() == b.size());
    REQUIRE(a.size() == c.size());
    for (Index i = 0; i < a.size(); ++i) {
      CHECK(a(i) == b(i));
      CHECK(a(i) == c(i));
    }
  }
}

TEST_CASE("flow marches segments and logs branch regimes") {
  const auto w = small_world();
  const StabilizerEngine engine(w.cfg, w.basis, w.omega);
  Rng rng(22);
  const Vector y0 = rng.unit_vector(32);

  FlowOptions opts;
  opts.samples_per_piece = 16;
  const auto fr = engine.flow(0.0, 1.0, y0, opts);

  CHECK(fr.s == 0.0);
  CHECK(fr.t == 1.0);
  REQUIRE(fr.pieces.size() == 6); // two periods, three segments each
  CHECK(fr.pieces[0].branch == "linear");
  CHECK(fr.pieces[1].branch == "off"); // unit-size state sits past the cutoff
  CHECK(fr.pieces[2].branch == "tail");
  CHECK(fr.pieces[3].period == 1);
  CHECK(fr.pieces[5].t1 == doctest::Approx(1.0));

  // Strict contraction over the two periods and a finite control record.
  CHECK(fr.y_end.norm() < 0.1 * y0.norm());
  CHECK(fr.sup_norm_state >= 1.0);
  CHECK(fr.sup_norm_state < 5.0);
  CHECK(std::isfinite(fr.log_sup_norm_control));
  CHECK(fr.sup_norm_control > 0.0);

  // Sample bookkeeping: every sample inside a cutoff-off stretch reports
  // zero control.
  for (const auto& smp : fr.trajectory.samples)
    if (smp.t > fr.pieces[1].t0 + 1e-12 && smp.t < fr.pieces[1].t1 - 1e-12)
      CHECK(smp.norm_u == 0.0);
}

TEST_CASE("second-period cutoff branches are inactive or identity") {
  const auto w = small_world();
  const StabilizerEngine engine(w.cfg, w.basis, w.omega);
  Rng rng(23);
  const Vector y0 = rng.unit_vector(32);
  const auto fr = engine.flow(0.0, 6.0 * w.cfg.T, y0);
  bool checked = false;
  for (const auto& piece : fr.pieces) {
    if (piece.period != 1 || piece.n != 3) continue;
    checked = true;
    // The cutoff must not sit mid-ramp on the second period: its branch is
    // either fully off (inactive) or on the plateau (identity composition).
    CHECK((piece.branch == "off" || piece.branch == "plateau"));
  }
  CHECK(checked);
}

TEST_CASE("deep decay hands the cutoff branch over to the plateau") {
  const auto w = small_world();
  const StabilizerEngine engine(w.cfg, w.basis, w.omega);
  // Start small enough that gamma ||X|| < r on the cutoff branch: the branch
  // then acts as the full linear law from the first period on.
  Vector y0 = Vector::Zero(32);
  y0(0) = std::exp(-40.0);
  const auto fr = engine.flow(0.0, 0.5, y0);
  for (const auto& piece : fr.pieces)
    if (piece.n == 3) CHECK(piece.branch == "plateau");
  CHECK(fr.y_end.norm() < y0.norm());
}

TEST_CASE("cutoff band is stepped, bounded and logged") {
  const auto w = small_world();
  const StabilizerEngine engine(w.cfg, w.basis, w.omega);
  const FeedbackParams& p = engine.branch_params(1);

  // Place the low block mid-band at the cutoff branch entry.
  Rng rng(24);
  Vector y0 = Vector::Zero(32);
  y0.head(p.N) = std::exp(p.log_r - p.log_gamma + 0.3) * rng.unit_vector(p.N);
  const auto fr = engine.flow(1.0 / 6.0, 0.25, y0);
  REQUIRE(fr.pieces.size() == 1);
  CHECK(fr.pieces[0].branch == "band");
  CHECK(fr.y_end.allFinite());
  // Mid-ramp control norms stay below the hard cutoff amplitude 2r.
  CHECK(fr.sup_norm_control <= 2.0 * p.r * (1.0 + 1e-9));
  CHECK(fr.sup_norm_control > 0.0);
}

TEST_CASE("flow composes across an interior cut") {
  const auto w = small_world();
  const StabilizerEngine engine(w.cfg, w.basis, w.omega);
  Rng rng(25);
  const Vector y0 = rng.unit_vector(32);
  FlowOptions opts;
  opts.record_samples = false;

  for (double cut : {0.1, 0.2, 0.3, 0.45}) {
    const auto whole = engine.flow(0.0, 0.7, y0, opts);
    const auto first = engine.flow(0.0, cut, y0, opts);
    const auto second = engine.flow(cut, 0.7, first.y_end, opts);
    const double scale = whole.y_end.norm();
    REQUIRE(scale > 0.0);
    CHECK((second.y_end - whole.y_end).norm() <= 1e-8 * scale);
  }
}

TEST_CASE("degenerate flow windows are harmless") {
  const auto w = small_world();
  const StabilizerEngine engine(w.cfg, w.basis, w.omega);
  Rng rng(26);
  const Vector y0 = rng.unit_vector(32);
  const auto fr = engine.flow(0.2, 0.2, y0);
  CHECK(fr.pieces.empty());
  CHECK((fr.y_end - y0).norm() == 0.0);
  CHECK(fr.sup_norm_state == y0.norm());

  CHECK(throws_with<ConfigError>([&] { engine.flow(0.3, 0.1, y0); },
                                 "forward in time"));
  CHECK(throws_with<ConfigError>(
      [&] { engine.flow(0.0, 1.0, rng.unit_vector(31)); }, "state length"));
  Vector bad = y0;
  bad(3) = std::numeric_limits<double>::infinity();
  CHECK(throws_with<ConfigError>([&] { engine.flow(0.0, 1.0, bad); }, "finite"));
}

TEST_CASE("reference stabilizer drives every probe start to zero in 2T") {
  const auto basis = testutil::desk_basis(512);
  const auto omega = testutil::desk_omega();
  const auto cfg = make_stabilizer(basis, 0.5, 1.0, kDeskC1, kDeskC2);
  const StabilizerEngine engine(cfg, basis, omega);

  Rng rng(27);
  FlowOptions opts;
  opts.record_samples = false;
  for (double s : {0.0, 0.5 / 3.0, 0.25}) {
    const Vector y0 = rng.unit_vector(512);
    const auto fr = engine.flow(s, s + 1.0, y0, opts);
    // One saturated branch pass already underflows every mode.
    CHECK(fr.y_end.norm() == 0.0);
    CHECK(fr.sup_norm_state <= y0.norm() * (1.0 + 1e-12));
  }
}

TEST_CASE("uniform stability probe certifies a small-ball bound") {
  const auto w = small_world();
  const StabilizerEngine engine(w.cfg, w.basis, w.omega);
  const auto probe = uniform_stability_probe(engine, 1e-2, 8, 10, 31);
  CHECK(probe.delta == 1e-2);
  CHECK(probe.amax >= 1.0);
  CHECK(probe.eta == 0.9 * probe.delta / probe.amax);
  CHECK(probe.worst_sup <= probe.delta * (1.0 + 1e-12));
  CHECK(probe.worst_ratio == probe.worst_sup / probe.delta);
  CHECK(probe.pass);

  // Same seed, same verdict, bit for bit.
  const auto again = uniform_stability_probe(engine, 1e-2, 8, 10, 31);
  CHECK(again.amax == probe.amax);
  CHECK(again.eta == probe.eta);
  CHECK(again.worst_sup == probe.worst_sup);

  // A supplied admission radius skips the calibration phase.
  const auto manual = uniform_stability_probe(engine, 1e-2, 4, 4, 31, 1e-4);
  CHECK(manual.eta == 1e-4);
  CHECK(manual.amax == 1.0);
  CHECK(manual.worst_sup <= 1e-2);

  CHECK(throws_with<ConfigError>(
      [&] { uniform_stability_probe(engine, 0.0, 4, 4, 31); }, "delta"));
  CHECK(throws_with<ConfigError>(
      [&] { uniform_stability_probe(engine, 1e-2, 0, 4, 31); }, "start"));
  CHECK(throws_with<ConfigError>(
      [&] { uniform_stability_probe(engine, 1e-2, 4, 0, 31); }, "direction"));
}

TEST_CASE("engine construction validation") {
  const auto w = small_world();
  StabilizerConfig empty = w.cfg;
  empty.branches.clear();
  CHECK(throws_with<ConfigError>(
      [&] { StabilizerEngine(empty, w.basis, w.omega); }, "no branches"));
  const auto boxdom = make_domain({2.0, 2.0});
  const auto boxreg = make_region(boxdom, {0.0, 0.0}, {1.0, 1.0});
  CHECK(throws_with<ConfigError>(
      [&] { StabilizerEngine(w.cfg, w.basis, boxreg); }, "dimension"));
}
