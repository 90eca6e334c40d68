// Command line driver: one subcommand per experiment kind, a config file in,
// a result directory out. Exit code 2 flags a configuration problem, 3 a
// numerical one, matching what scripted sweeps branch on.

#include "heatctl/experiment.hpp"

#include "CLI11.hpp"

#include <fstream>
#include <iostream>
#include <sstream>

namespace {

std::string slurp(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is)
    throw heatctl::ConfigError("cannot read config file " + path);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

} // namespace

int main(int argc, char** argv) {
  heatctl::pin_blas_threads();

  CLI::App app{"Spectral laboratory for interior-controlled heat equations"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::string chosen;
  for (const char* name : {"spectral", "rapid", "null", "finite", "sweep"}) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "run configuration file")
        ->required();
    sub->add_option("--out", out_dir, "output directory")->required();
    sub->callback([&chosen, name] { chosen = name; });
  }

  CLI11_PARSE(app, argc, argv);

  try {
    heatctl::RunConfig cfg =
        heatctl::finalize_run_config(heatctl::parse_config(slurp(config_path)),
                                     chosen);
    heatctl::run_experiment(cfg, out_dir);
  } catch (const heatctl::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const heatctl::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
