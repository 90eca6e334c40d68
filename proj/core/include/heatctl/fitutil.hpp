#pragma once

#include "heatctl/types.hpp"

#include <vector>

namespace heatctl {

// Ordinary least squares y ~ intercept + slope * x with the usual r^2.
// Degenerate-flat data (total sum of squares at rounding level) reports
// slope 0, intercept mean(y), r^2 = 1: a constant is a perfect fit.
struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  int n = 0;
};

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

// Name used by the report plumbing: the scalings of interest are all fit in
// log coordinates, but the routine is plain OLS on whatever it is given.
inline LineFit fit_loglinear(const std::vector<double>& x,
                             const std::vector<double>& y) {
  return fit_line(x, y);
}

} // namespace heatctl
