#pragma once

#include "heatctl/types.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace heatctl {

// One sampled instant of a closed-loop run. Linear-scale fields can be inf
// on pieces whose gain exceeds double range; log_norm_u is always finite
// (or -inf for zero control) and is what cost extraction consumes.
struct Sample {
  double t = 0.0;
  double norm_y = 0.0;
  double norm_low = 0.0;  // first-N block
  double norm_tail = 0.0;
  double norm_u = 0.0;
  double V = 0.0;
  double V1 = 0.0;
  double log_norm_u = 0.0;
};

struct Checkpoint {
  double t = 0.0;
  Vector y;
};

struct Trajectory {
  std::vector<Sample> samples;
  std::vector<Checkpoint> checkpoints; // dense state at interval endpoints
};

// Shortest-round-trip decimal formatting; "inf"/"-inf"/"nan" pass through.
std::string format_double(double v);

// Exactly the columns t, norm_y, norm_low, norm_tail, norm_u, V, V1.
void write_trajectory_csv(std::ostream& os, const Trajectory& tr);
void write_trajectory_csv(const std::string& path, const Trajectory& tr);

} // namespace heatctl
