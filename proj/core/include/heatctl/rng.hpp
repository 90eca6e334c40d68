#pragma once

#include "heatctl/types.hpp"

#include <cstdint>
#include <random>

namespace heatctl {

// Deterministic random source. Gaussians use an explicit Box-Muller so the
// stream is identical across standard libraries (std::normal_distribution is
// implementation-defined).
class Rng {
public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  double uniform(); // [0, 1)
  double normal();
  Vector normal_vector(Index n);
  Vector unit_vector(Index n);

private:
  std::mt19937_64 eng_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

} // namespace heatctl
