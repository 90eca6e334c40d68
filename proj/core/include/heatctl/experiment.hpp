#pragma once

#include "heatctl/config.hpp"

#include <filesystem>

namespace heatctl {

// Pins the BLAS thread count to one for run-to-run determinism. Must happen
// before the first eigensolve; run_experiment calls it itself, standalone
// drivers should call it at entry.
void pin_blas_threads();

// Executes one configured experiment and writes manifest.json, report.json
// and (for trajectory-producing kinds) trajectory.csv into out_dir. All
// outputs are deterministic for a given config apart from the manifest's
// wall_clock field. Throws ConfigError for bad configuration and
// NumericalError for runs the constants cannot certify; the CLI maps those
// to exit codes 2 and 3.
void run_experiment(const RunConfig& cfg,
                    const std::filesystem::path& out_dir);

} // namespace heatctl
