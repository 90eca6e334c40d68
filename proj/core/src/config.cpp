#include "heatctl/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <set>
#include <sstream>

namespace heatctl {

namespace {

std::string trim(const std::string& s) {
  size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

double parse_double(const std::string& key, const std::string& v) {
  const std::string t = trim(v);
  if (t.empty()) throw ConfigError("type mismatch: " + key + ": empty value");
  char* end = nullptr;
  const double x = std::strtod(t.c_str(), &end);
  if (end != t.c_str() + t.size())
    throw ConfigError("type mismatch: " + key + ": not a number: " + t);
  if (std::isnan(x))
    throw ConfigError("type mismatch: " + key + ": not a number: " + t);
  return x;
}

int parse_int(const std::string& key, const std::string& v) {
  const std::string t = trim(v);
  int x = 0;
  const auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), x);
  if (ec != std::errc() || p != t.data() + t.size())
    throw ConfigError("type mismatch: " + key + ": not an integer: " + t);
  return x;
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
  const std::string t = trim(v);
  std::uint64_t x = 0;
  const auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), x);
  if (ec != std::errc() || p != t.data() + t.size())
    throw ConfigError("type mismatch: " + key +
                      ": not an unsigned integer: " + t);
  return x;
}

std::vector<double> parse_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_double(key, item));
  if (out.empty())
    throw ConfigError("type mismatch: " + key + ": empty list");
  return out;
}

void check(bool ok, const std::string& key, const std::string& what) {
  if (!ok) throw ConfigError("constraint violation: " + key + ": " + what);
}

bool near_integer(double x, double* rounded) {
  *rounded = std::round(x);
  return *rounded >= 1.0 && std::abs(x - *rounded) <= 1e-9 * *rounded;
}

// Horizon admissibility per schedule family, checked as soon as the
// experiment kind is known so a bad horizon fails at parse time.
void check_horizon(const RunConfig& cfg, double T, const std::string& key) {
  const std::string& kind = cfg.experiment_kind;
  const double inv = 1.0 / T;
  double m = 0.0;
  if (kind == "finite") {
    check(near_integer(inv, &m), key, "horizon not admissible: 1/T not integer");
    return;
  }
  if (cfg.schedule_kind == "poly4") {
    check(near_integer(inv, &m), key, "horizon not admissible: 1/T not integer");
  } else if (cfg.schedule_kind == "poly_k") {
    if (cfg.schedule_k >= 1) {
      const bool ok = near_integer(std::pow(inv, 1.0 / cfg.schedule_k), &m) &&
                      std::abs(std::pow(m, cfg.schedule_k) - inv) <= 1e-6 * inv;
      check(ok, key, "horizon not admissible: 1/T not a k-th power");
    }
  } else if (cfg.schedule_kind == "dyadic") {
    const double n0 = std::round(std::log2(inv));
    check(n0 >= 0.0 && std::abs(std::exp2(n0) - inv) <= 1e-9 * inv, key,
          "horizon not admissible: 1/T not a power of two");
  }
}

void check_kind_horizons(const RunConfig& cfg) {
  const std::string& kind = cfg.experiment_kind;
  if (kind.empty()) return;
  if ((kind == "null" || kind == "finite") && cfg.T > 0.0)
    check_horizon(cfg, cfg.T, "T");
  if (kind == "sweep")
    for (double T : cfg.T_grid) check_horizon(cfg, T, "T_grid");
}

} // namespace

RunConfig parse_config(const std::string& text) {
  RunConfig cfg;
  std::set<std::string> seen;

  std::stringstream ss(text);
  std::string line;
  while (std::getline(ss, line)) {
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("type mismatch: " + line + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    if (!seen.insert(key).second)
      throw ConfigError("constraint violation: " + key + ": duplicate key");

    if (key == "domain.kind") {
      check(val == "interval" || val == "box", key,
            "must be interval or box, got " + val);
      cfg.domain_kind = val;
    } else if (key == "domain.lengths") {
      cfg.domain_lengths = parse_list(key, val);
    } else if (key == "omega.bounds") {
      cfg.omega_bounds = parse_list(key, val);
    } else if (key == "modes.M") {
      cfg.M = parse_int(key, val);
      check(cfg.M >= 1, key, "must be at least 1");
    } else if (key == "experiment.kind") {
      check(val == "spectral" || val == "rapid" || val == "null" ||
                val == "finite" || val == "sweep",
            key, "unknown experiment kind " + val);
      cfg.experiment_kind = val;
    } else if (key == "lambda") {
      cfg.lambda = parse_double(key, val);
      check(cfg.lambda > 0.0 && std::isfinite(cfg.lambda), key,
            "must be positive and finite");
    } else if (key == "lambda_grid") {
      cfg.lambda_grid = parse_list(key, val);
      for (double x : cfg.lambda_grid)
        check(x > 0.0 && std::isfinite(x), key, "entries must be positive");
      check(std::is_sorted(cfg.lambda_grid.begin(), cfg.lambda_grid.end()),
            key, "entries must be increasing");
      check(std::adjacent_find(cfg.lambda_grid.begin(),
                               cfg.lambda_grid.end()) == cfg.lambda_grid.end(),
            key, "entries must be distinct");
    } else if (key == "T") {
      cfg.T = parse_double(key, val);
      check(cfg.T > 0.0 && std::isfinite(cfg.T), key,
            "must be positive and finite");
    } else if (key == "T_grid") {
      cfg.T_grid = parse_list(key, val);
      for (double x : cfg.T_grid)
        check(x > 0.0 && std::isfinite(x), key, "entries must be positive");
    } else if (key == "Lambda") {
      cfg.Lambda = parse_double(key, val);
      check(cfg.Lambda >= 1.0, key, "must be at least 1");
    } else if (key == "eps_null") {
      cfg.eps_null = parse_double(key, val);
      check(cfg.eps_null > 0.0 && cfg.eps_null < 1.0, key,
            "must lie in (0, 1)");
    } else if (key == "eps_zero") {
      cfg.eps_zero = parse_double(key, val);
      check(cfg.eps_zero > 0.0 && cfg.eps_zero < 1.0, key,
            "must lie in (0, 1)");
    } else if (key == "schedule.kind") {
      check(val == "poly4" || val == "poly_k" || val == "dyadic", key,
            "must be poly4, poly_k or dyadic, got " + val);
      cfg.schedule_kind = val;
    } else if (key == "schedule.k") {
      cfg.schedule_k = parse_int(key, val);
      check(cfg.schedule_k >= 1, key, "must be at least 1");
    } else if (key == "seed") {
      cfg.seed = parse_u64(key, val);
    } else if (key == "c1_override") {
      cfg.c1_override = parse_double(key, val);
      check(cfg.c1_override >= 1.0, key, "must be at least 1");
    } else if (key == "c2_override") {
      cfg.c2_override = parse_double(key, val);
      check(cfg.c2_override > 0.0 && std::isfinite(cfg.c2_override), key,
            "must be positive and finite");
    } else {
      throw ConfigError("unknown key: " + key);
    }
  }

  // Cross-field geometry checks, each reported against its key.
  const size_t dim = cfg.domain_lengths.size();
  check(dim >= 1 && dim <= 3, "domain.lengths", "need 1 to 3 axes");
  for (double L : cfg.domain_lengths)
    check(L > 0.0 && std::isfinite(L), "domain.lengths",
          "lengths must be positive and finite");
  if (cfg.domain_kind == "interval")
    check(dim == 1, "domain.kind", "interval domain takes one length");
  check(cfg.omega_bounds.size() == 2 * dim, "omega.bounds",
        "need two bounds per axis");
  for (size_t a = 0; a < dim; ++a) {
    const double lo = cfg.omega_bounds[2 * a];
    const double hi = cfg.omega_bounds[2 * a + 1];
    check(lo >= 0.0 && hi > lo && hi <= cfg.domain_lengths[a], "omega.bounds",
          "each axis needs 0 <= a < b <= L");
  }
  if (cfg.c1_override > 0.0 && cfg.c2_override > 0.0)
    check(cfg.c2_override >= 2.0 * cfg.c1_override, "c2_override",
          "must be at least twice c1_override");
  check_kind_horizons(cfg);
  return cfg;
}

RunConfig finalize_run_config(RunConfig cfg, const std::string& subcommand) {
  if (!subcommand.empty()) {
    if (cfg.experiment_kind.empty()) {
      cfg.experiment_kind = subcommand;
    } else {
      check(cfg.experiment_kind == subcommand, "experiment.kind",
            "config says " + cfg.experiment_kind + " but the subcommand is " +
                subcommand);
    }
  }
  check(!cfg.experiment_kind.empty(), "experiment.kind", "required");

  const std::string& kind = cfg.experiment_kind;
  if (kind == "spectral") {
    if (cfg.lambda_grid.empty())
      cfg.lambda_grid = {25.0, 100.0, 400.0, 900.0, 1600.0, 2500.0};
  } else if (kind == "rapid") {
    check(cfg.lambda > 0.0, "lambda", "required for rapid runs");
    if (cfg.T == 0.0) cfg.T = 1.0;
  } else if (kind == "null") {
    check(cfg.T > 0.0, "T", "required for null runs");
  } else if (kind == "finite") {
    check(cfg.T > 0.0, "T", "required for finite runs");
  } else if (kind == "sweep") {
    check(cfg.T_grid.size() >= 3, "T_grid",
          "need at least three horizons for a sweep");
  }
  if (cfg.schedule_kind == "poly_k" && (kind == "null" || kind == "sweep"))
    check(cfg.schedule_k >= 1, "schedule.k", "required for poly_k schedules");
  check_kind_horizons(cfg);
  return cfg;
}

} // namespace heatctl
