#include "heatctl/experiment.hpp"

#include "heatctl/gram.hpp"
#include "heatctl/rng.hpp"
#include "heatctl/schedules.hpp"
#include "heatctl/spectral_fit.hpp"
#include "heatctl/stabilizer.hpp"
#include "heatctl/version.hpp"

#include "json.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <limits>
#include <optional>
#include <string>

namespace heatctl {

namespace {

using json = nlohmann::json;

constexpr double kProbeDelta = 1e-2;
constexpr int kProbeStarts = 16;
constexpr int kProbeDirs = 20;

std::string now_utc() {
  const std::time_t t =
      std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_file(const std::filesystem::path& path, const std::string& body) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ConfigError("cannot open output file " + path.string());
  os << body;
}

void write_json(const std::filesystem::path& path, const json& j) {
  write_file(path, j.dump(2) + "\n");
}

json config_echo(const RunConfig& cfg) {
  json j;
  j["domain.kind"] = cfg.domain_kind;
  j["domain.lengths"] = cfg.domain_lengths;
  j["omega.bounds"] = cfg.omega_bounds;
  j["modes.M"] = cfg.M;
  j["experiment.kind"] = cfg.experiment_kind;
  j["lambda"] = cfg.lambda;
  j["lambda_grid"] = cfg.lambda_grid;
  j["T"] = cfg.T;
  j["T_grid"] = cfg.T_grid;
  j["Lambda"] = cfg.Lambda;
  j["eps_null"] = cfg.eps_null;
  j["eps_zero"] = cfg.eps_zero;
  j["schedule.kind"] = cfg.schedule_kind;
  j["schedule.k"] = cfg.schedule_k;
  j["seed"] = cfg.seed;
  j["c1_override"] = cfg.c1_override;
  j["c2_override"] = cfg.c2_override;
  return j;
}

// Every constant a run consumes is registered here with its provenance and
// lands in the manifest; nothing reads a gain constant behind its back.
struct ConstantsLedger {
  json entries = json::object();

  void note(const std::string& name, double value,
            const std::string& provenance) {
    entries[name] = {{"value", value}, {"provenance", provenance}};
  }
  void note_int(const std::string& name, long value,
                const std::string& provenance) {
    entries[name] = {{"value", value}, {"provenance", provenance}};
  }
};

json line_fit_json(const LineFit& f) {
  return {{"slope", f.slope},
          {"intercept", f.intercept},
          {"r2", f.r2},
          {"n", f.n}};
}

struct Geometry {
  Domain domain;
  Region omega;
  Basis basis;
};

Geometry make_geometry(const RunConfig& cfg) {
  Geometry g;
  g.domain = make_domain(cfg.domain_lengths);
  std::vector<double> lo, hi;
  for (size_t a = 0; a < cfg.domain_lengths.size(); ++a) {
    lo.push_back(cfg.omega_bounds[2 * a]);
    hi.push_back(cfg.omega_bounds[2 * a + 1]);
  }
  g.omega = make_region(g.domain, lo, hi);
  g.basis = make_basis(g.domain, cfg.M);
  return g;
}

struct Constants {
  double c1 = 1.0;
  std::string c1_prov;
  double c2 = 2.0;
  std::string c2_prov;
  double lambda_hi = 0.0;    // largest frequency the run can touch
  double verified_to = 0.0;  // largest frequency checked by direct eigensolve
  bool extrapolated = false; // gains beyond verified_to run on the fit alone
};

// Operational constants for a run that exercises frequencies up to
// lambda_hi: overrides win, otherwise the spectral constant is fitted on the
// desk grid clipped to the resolvable range, and c2 is grown to dominate the
// gain expressions over the whole range. The pointwise certificate is then
// checked by direct eigensolve at the largest verifiable frequency; a
// failure aborts the run rather than reporting fabricated decay.
Constants resolve_constants(const RunConfig& cfg, const Geometry& g,
                            double lambda_hi, ConstantsLedger& ledger,
                            json* fit_out = nullptr) {
  Constants k;
  k.lambda_hi = lambda_hi;

  if (cfg.c1_override > 0.0) {
    k.c1 = cfg.c1_override;
    k.c1_prov = "supplied";
  } else {
    std::vector<double> grid;
    const double cap = 0.8 * g.basis.tau_max();
    for (double l : {25.0, 100.0, 400.0, 900.0, 1600.0, 2500.0})
      if (l <= cap) grid.push_back(l);
    if (grid.size() < 2)
      throw NumericalError(
          "truncation too small: cannot calibrate the spectral constant at "
          "this M");
    const SpectralFit sf = fit_spectral_constant(g.basis, g.omega, grid);
    k.c1 = sf.c1;
    k.c1_prov = "fitted";
    if (fit_out)
      *fit_out = {{"fit", line_fit_json(sf.line)},
                  {"fitted_c", sf.fitted_c},
                  {"pointwise_c", sf.pointwise_c},
                  {"grid", grid}};
  }

  // Largest frequency the direct certificate can reach: the high-precision
  // eigensolve cap and the verification window both bind.
  const int hp_modes = std::min(kHighPrecMaxN, g.basis.size() - 1);
  double lambda_v = std::min(lambda_hi, kVerifiableLambda);
  lambda_v = std::min(lambda_v, 0.999 * g.basis.tau(hp_modes));
  if (lambda_v >= g.basis.tau(0)) {
    const std::optional<bool> ok =
        verify_pointwise(g.basis, g.omega, k.c1, lambda_v);
    if (ok && !*ok)
      throw NumericalError(
          "spectral constant does not certify this geometry: c1 too small at "
          "lambda " +
          std::to_string(lambda_v));
    k.verified_to = lambda_v;
  }
  k.extrapolated = lambda_hi > k.verified_to;

  if (cfg.c2_override > 0.0) {
    if (cfg.c2_override < 2.0 * k.c1)
      throw ConfigError(
          "constraint violation: c2_override: must be at least twice the "
          "operational c1");
    k.c2 = cfg.c2_override;
    k.c2_prov = "supplied";
  } else {
    k.c2 = select_c2(k.c1, lambda_hi);
    k.c2_prov = "fitted";
  }

  ledger.note("c1", k.c1, k.c1_prov);
  ledger.note("c2", k.c2, k.c2_prov);
  return k;
}

json constants_json(const Constants& k) {
  return {{"c1", k.c1},
          {"c1_provenance", k.c1_prov},
          {"c2", k.c2},
          {"c2_provenance", k.c2_prov},
          {"lambda_hi", k.lambda_hi},
          {"verified_to_lambda", k.verified_to},
          {"extrapolated", k.extrapolated}};
}

json cost_report_json(const CostReport& r) {
  json per = json::array();
  for (const PieceCost& p : r.per_piece)
    per.push_back({{"n", p.n},
                   {"lambda", p.lambda},
                   {"t0", p.t0},
                   {"t1", p.t1},
                   {"saturated", p.saturated},
                   {"sup_u", p.sup_u},
                   {"log_sup_u", p.log_sup_u},
                   {"log_transient_ceiling", p.log_transient_ceiling}});
  return {{"kind", to_string(r.kind)},
          {"T", r.T},
          {"gamma_or_q", r.gain},
          {"c3", r.c3},
          {"sup_cost", r.sup_cost},
          {"log_sup_cost", r.log_sup_cost},
          {"terminal_ratio", r.terminal_ratio},
          {"log_terminal_ratio", r.log_terminal_ratio},
          {"n_max", r.n_max},
          {"stop_rule", r.stop_rule},
          {"per_piece", per}};
}

json run_spectral(const RunConfig& cfg, const Geometry& g,
                  ConstantsLedger& ledger) {
  const SpectralFit sf =
      fit_spectral_constant(g.basis, g.omega, cfg.lambda_grid);
  ledger.note("c1", sf.c1, "fitted");

  json points = json::array();
  for (const SpectralPoint& p : sf.points)
    points.push_back({{"lambda", p.lambda},
                      {"N", p.N},
                      {"min_eig", p.eig.value},
                      {"log_min_eig", p.eig.log_value},
                      {"high_precision", p.eig.high_precision},
                      {"rejected", p.rejected}});

  json j;
  j["kind"] = "spectral";
  j["grid"] = cfg.lambda_grid;
  j["points"] = points;
  j["fit"] = line_fit_json(sf.line);
  j["r2"] = sf.line.r2;
  j["fitted_c"] = sf.fitted_c;
  j["log_prefactor"] = sf.log_prefactor;
  j["pointwise_c"] = sf.pointwise_c;
  j["c1"] = sf.c1;
  j["tunneling"] = {{"c0", sf.tunneling.c0},
                    {"log_c", sf.tunneling.log_c},
                    {"r2", sf.tunneling.r2},
                    {"n_modes", sf.tunneling.n_modes}};
  j["weyl_ratio_at_grid_max"] = weyl_ratio(g.basis, cfg.lambda_grid.back());
  const std::optional<bool> v = verify_pointwise(
      g.basis, g.omega, sf.c1,
      std::min(cfg.lambda_grid.back(),
               0.999 * g.basis.tau(std::min(kHighPrecMaxN, g.basis.size() - 1))));
  if (v)
    j["pointwise_verified"] = *v;
  else
    j["pointwise_verified"] = nullptr;
  return j;
}

json run_rapid(const RunConfig& cfg, const Geometry& g,
               ConstantsLedger& ledger, const std::filesystem::path& out) {
  const Constants k = resolve_constants(cfg, g, cfg.lambda, ledger);
  const FeedbackParams p = make_params(cfg.lambda, k.c1, k.c2, g.basis);
  ledger.note("gamma", p.gamma, "derived");
  ledger.note_int("N", p.N, "derived");

  Matrix G;
  const bool saturated =
      p.log_gamma > kLogGammaStandardMax || p.N > kModalBlockCap;
  if (!saturated) G = gram_matrix(g.basis, g.omega, p.N);

  Rng rng(cfg.seed);
  const Vector y0 = rng.unit_vector(g.basis.size());

  IntegratorConfig ic;
  ic.method = Method::kModalExact;
  ic.samples_per_interval = 64;
  const Trajectory tr =
      run_stationary(g.basis, G, p, y0, 0.0, cfg.T, ic, Law::kStationary);
  write_trajectory_csv((out / "trajectory.csv").string(), tr);

  // Decay rate from the asymptotic half of the window; the early transient
  // follows the fast closed-loop rates, not the certified envelope.
  std::vector<double> ts, lns;
  for (const Sample& s : tr.samples)
    if (s.t >= 0.5 * cfg.T && s.norm_y > 0.0) {
      ts.push_back(s.t);
      lns.push_back(std::log(s.norm_y));
    }
  json decay = json::object();
  if (ts.size() >= 2) {
    const LineFit f = fit_loglinear(ts, lns);
    decay = {{"rate", -f.slope}, {"r2", f.r2}, {"n", f.n}};
  } else {
    decay = {{"rate", nullptr}, {"r2", nullptr}, {"n", ts.size()}};
  }

  // Certificate check along the samples: V e^{lambda t} must not grow by
  // more than rounding from one sample to the next.
  double worst_growth = 0.0;
  bool comparable = false;
  for (size_t i = 1; i < tr.samples.size(); ++i) {
    const Sample& a = tr.samples[i - 1];
    const Sample& b = tr.samples[i];
    if (a.V > 0.0 && std::isfinite(a.V) && std::isfinite(b.V)) {
      comparable = true;
      const double growth = (b.V / a.V) * std::exp(cfg.lambda * (b.t - a.t));
      worst_growth = std::max(worst_growth, growth);
    }
  }

  json j;
  j["kind"] = "rapid";
  j["lambda"] = cfg.lambda;
  j["N"] = p.N;
  j["gamma"] = p.gamma;
  j["log_gamma"] = p.log_gamma;
  j["mu"] = p.mu;
  j["log_mu"] = p.log_mu;
  j["mu_tilde"] = p.mu_tilde;
  j["log_mu_tilde"] = p.log_mu_tilde;
  j["r"] = p.r;
  j["log_r"] = p.log_r;
  j["saturated"] = saturated;
  j["decay"] = decay;
  j["lyapunov_worst_step_growth"] = comparable ? json(worst_growth) : json();
  j["constants"] = constants_json(k);
  return j;
}

ScheduleKind schedule_kind_from(const std::string& s) {
  if (s == "poly4") return ScheduleKind::kPoly4;
  if (s == "poly_k") return ScheduleKind::kPolyK;
  return ScheduleKind::kDyadic;
}

json run_null(const RunConfig& cfg, const Geometry& g, ConstantsLedger& ledger,
              const std::filesystem::path& out) {
  const double lambda_hi = 0.8 * g.basis.tau_max();
  const Constants k = resolve_constants(cfg, g, lambda_hi, ledger);
  const ScheduleKind kind = schedule_kind_from(cfg.schedule_kind);

  const Schedule schedule =
      build_schedule(kind, cfg.T, k.c1, k.c2, g.basis,
                     StopRule::by_eps(cfg.eps_null), cfg.schedule_k);
  ledger.note(kind == ScheduleKind::kDyadic ? "Q" : "Gamma", schedule.gain,
              "derived");
  ledger.note("c3", schedule.c3, "derived");

  Rng rng(cfg.seed);
  const Vector y0 = rng.unit_vector(g.basis.size());
  IntegratorConfig ic;
  ic.samples_per_interval = 64;
  const NullControlResult res =
      run_null_control(g.basis, g.omega, schedule, k.c1, k.c2, y0, ic);
  write_trajectory_csv((out / "trajectory.csv").string(), res.trajectory);

  json j = cost_report_json(res.report);
  j["eps_null"] = cfg.eps_null;
  j["log_predicted_terminal"] = schedule.log_predicted_terminal;
  j["constants"] = constants_json(k);
  return j;
}

json run_finite(const RunConfig& cfg, const Geometry& g,
                ConstantsLedger& ledger, const std::filesystem::path& out) {
  const double lambda_hi = 0.8 * g.basis.tau_max();
  const Constants k = resolve_constants(cfg, g, lambda_hi, ledger);

  const StabilizerConfig sc =
      make_stabilizer(g.basis, cfg.T, cfg.Lambda, k.c1, k.c2);
  ledger.note("Gamma", sc.Gamma, "derived");
  ledger.note_int("N_T", sc.N_T, "derived");
  ledger.note("Lambda", sc.Lambda, "supplied");
  const StabilizerEngine engine(sc, g.basis, g.omega);

  Rng rng(cfg.seed);
  std::vector<Vector> dirs;
  for (int i = 0; i < kProbeDirs; ++i)
    dirs.push_back(rng.unit_vector(g.basis.size()));

  FlowOptions quiet;
  quiet.record_samples = false;
  quiet.samples_per_piece = 32;

  double worst_2T = 0.0;
  double worst_amp = 1.0;
  for (double s : {0.0, cfg.T / 3.0, cfg.T / 2.0}) {
    for (const Vector& d : dirs) {
      const FlowResult fr = engine.flow(s, s + 2.0 * cfg.T, d, quiet);
      worst_2T = std::max(worst_2T, fr.y_end.norm());
      worst_amp = std::max(worst_amp, fr.sup_norm_state);
    }
  }

  const UniformStability probe = uniform_stability_probe(
      engine, kProbeDelta, kProbeStarts, kProbeDirs, cfg.seed);

  FlowOptions rec;
  rec.samples_per_piece = 64;
  const FlowResult shown = engine.flow(0.0, 2.0 * cfg.T, dirs.front(), rec);
  write_trajectory_csv((out / "trajectory.csv").string(), shown.trajectory);

  json branches = json::array();
  for (const StabilizerBranch& b : sc.branches)
    branches.push_back({{"n", b.n},
                        {"t0", b.t0},
                        {"t1", b.t1},
                        {"lambda", b.lambda},
                        {"truncated", b.truncated}});

  json j;
  j["kind"] = "finite";
  j["T"] = sc.T;
  j["n_T"] = sc.n_T;
  j["N_T"] = sc.N_T;
  j["Lambda"] = sc.Lambda;
  j["Gamma"] = sc.Gamma;
  j["eps_zero_achieved"] = worst_2T;
  j["eps_zero_target"] = cfg.eps_zero;
  j["eps_zero_pass"] = worst_2T <= cfg.eps_zero;
  j["worst_period_amplification"] = worst_amp;
  j["uniform_stability"] = {{"delta", probe.delta},
                            {"eta", probe.eta},
                            {"worst_ratio", probe.worst_ratio},
                            {"worst_sup", probe.worst_sup},
                            {"amax", probe.amax},
                            {"pass", probe.pass}};
  j["branches"] = branches;
  j["constants"] = constants_json(k);
  return j;
}

json run_sweep(const RunConfig& cfg, const Geometry& g,
               ConstantsLedger& ledger) {
  const double lambda_hi = 0.8 * g.basis.tau_max();
  const Constants k = resolve_constants(cfg, g, lambda_hi, ledger);
  const ScheduleKind kind = schedule_kind_from(cfg.schedule_kind);

  IntegratorConfig ic;
  ic.record_samples = false;
  const CostScaling cs = cost_scaling(kind, cfg.T_grid, g.basis, g.omega, k.c1,
                                      k.c2, StopRule::by_eps(cfg.eps_null), ic,
                                      cfg.seed, cfg.schedule_k);
  ledger.note(kind == ScheduleKind::kDyadic ? "Q" : "Gamma", cs.gain,
              "derived");
  ledger.note("c3", cs.c3, "derived");

  json reports = json::array();
  for (const CostReport& r : cs.reports) reports.push_back(cost_report_json(r));

  json j;
  j["kind"] = "sweep";
  j["schedule"] = to_string(cs.kind);
  j["T_grid"] = cfg.T_grid;
  j["gamma_or_q"] = cs.gain;
  j["c3"] = cs.c3;
  j["fit"] = line_fit_json(cs.fit);
  j["slope_ok"] = cs.slope_ok;
  j["abscissae"] = cs.abscissae;
  j["log_costs"] = cs.log_costs;
  j["reports"] = reports;
  j["constants"] = constants_json(k);
  return j;
}

} // namespace

void pin_blas_threads() {
  setenv("OPENBLAS_NUM_THREADS", "1", 1);
  setenv("OMP_NUM_THREADS", "1", 1);
}

void run_experiment(const RunConfig& cfg,
                    const std::filesystem::path& out_dir) {
  pin_blas_threads();
  if (cfg.experiment_kind.empty())
    throw ConfigError("constraint violation: experiment.kind: required");
  std::filesystem::create_directories(out_dir);

  const Geometry g = make_geometry(cfg);
  ConstantsLedger ledger;

  json report;
  if (cfg.experiment_kind == "spectral") {
    report = run_spectral(cfg, g, ledger);
  } else if (cfg.experiment_kind == "rapid") {
    report = run_rapid(cfg, g, ledger, out_dir);
  } else if (cfg.experiment_kind == "null") {
    report = run_null(cfg, g, ledger, out_dir);
  } else if (cfg.experiment_kind == "finite") {
    report = run_finite(cfg, g, ledger, out_dir);
  } else if (cfg.experiment_kind == "sweep") {
    report = run_sweep(cfg, g, ledger);
  } else {
    throw ConfigError("constraint violation: experiment.kind: unknown kind " +
                      cfg.experiment_kind);
  }
  write_json(out_dir / "report.json", report);

  json manifest;
  manifest["artifact_version"] = kArtifactVersion;
  manifest["config"] = config_echo(cfg);
  manifest["constants"] = ledger.entries;
  manifest["wall_clock"] = now_utc();
  write_json(out_dir / "manifest.json", manifest);
}

} // namespace heatctl
