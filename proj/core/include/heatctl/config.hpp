#pragma once

#include "heatctl/types.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace heatctl {

// Flat typed key=value run description. Keys are dotted but the document is
// flat (no sections), '#' starts a comment, lists are comma separated.
// Unset optionals are 0 / empty; finalize_run_config applies the per-kind
// requirements once the experiment kind is known.
struct RunConfig {
  std::string domain_kind = "interval"; // "interval" | "box"
  std::vector<double> domain_lengths = {3.141592653589793};
  std::vector<double> omega_bounds = {1.0, 2.0}; // a1,b1 per axis
  int M = 256;

  std::string experiment_kind; // spectral | rapid | null | finite | sweep

  double lambda = 0.0;              // rapid target rate
  std::vector<double> lambda_grid;  // spectral fit grid
  double T = 0.0;                   // horizon / period
  std::vector<double> T_grid;       // sweep horizons
  double Lambda = 1.0;              // stabilized ball radius
  double eps_null = 1e-8;
  double eps_zero = 1e-6;
  std::string schedule_kind = "dyadic"; // poly4 | poly_k | dyadic
  int schedule_k = 0;                   // poly_k exponent
  std::uint64_t seed = 1;
  double c1_override = 0.0; // 0: fit from the geometry
  double c2_override = 0.0; // 0: derive from c1 over the run's range
};

// Parses and validates a config document. Errors carry the offending key:
// "unknown key: ...", "type mismatch: ...", "constraint violation: ...".
RunConfig parse_config(const std::string& text);

// Fills experiment.kind from the subcommand (rejecting a mismatch) and
// enforces the per-kind required keys (lambda for rapid, T for null/finite,
// T_grid for sweep). Defaults the spectral grid to the desk grid.
RunConfig finalize_run_config(RunConfig cfg, const std::string& subcommand);

} // namespace heatctl
