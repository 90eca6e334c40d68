#pragma once

#include "heatctl/types.hpp"

#include <vector>

namespace heatctl {

// Rectangular domain (0,L1) x ... x (0,Ld) with homogeneous Dirichlet walls.
struct Domain {
  std::vector<double> lengths;

  int dim() const { return static_cast<int>(lengths.size()); }
  double volume() const;
};

// Axis-aligned control region, a sub-box of the domain: prod_k (a_k, b_k).
struct Region {
  std::vector<double> lo;
  std::vector<double> hi;

  int dim() const { return static_cast<int>(lo.size()); }
  double volume() const;
};

Domain make_domain(const std::vector<double>& lengths);

// Validates strict containment 0 <= a_k < b_k <= L_k on every axis.
Region make_region(const Domain& domain, const std::vector<double>& lo,
                   const std::vector<double>& hi);

} // namespace heatctl
