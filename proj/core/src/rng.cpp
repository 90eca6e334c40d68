#include "heatctl/rng.hpp"

#include <cmath>
#include <numbers>

namespace heatctl {

double Rng::uniform() {
  return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
}

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1 = uniform();
  while (u1 == 0.0) u1 = uniform();
  const double u2 = uniform();
  const double m = std::sqrt(-2.0 * std::log(u1));
  const double a = 2.0 * std::numbers::pi * u2;
  spare_ = m * std::sin(a);
  has_spare_ = true;
  return m * std::cos(a);
}

Vector Rng::normal_vector(Index n) {
  Vector v(n);
  for (Index i = 0; i < n; ++i) v(i) = normal();
  return v;
}

Vector Rng::unit_vector(Index n) {
  Vector v = normal_vector(n);
  double nv = v.norm();
  while (nv == 0.0) { // probability zero, but keep the contract total
    v = normal_vector(n);
    nv = v.norm();
  }
  return v / nv;
}

} // namespace heatctl
