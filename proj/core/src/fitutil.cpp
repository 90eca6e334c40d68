#include "heatctl/fitutil.hpp"

#include <cmath>

namespace heatctl {

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size())
    throw ConfigError("fit inputs must have equal length");
  const int n = static_cast<int>(x.size());
  if (n < 2) throw NumericalError("insufficient points for a line fit");

  double mx = 0.0, my = 0.0;
  for (int i = 0; i < n; ++i) {
    mx += x[static_cast<size_t>(i)];
    my += y[static_cast<size_t>(i)];
  }
  mx /= n;
  my /= n;

  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (int i = 0; i < n; ++i) {
    const double dx = x[static_cast<size_t>(i)] - mx;
    const double dy = y[static_cast<size_t>(i)] - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  if (sxx == 0.0) throw NumericalError("degenerate fit: all abscissae equal");

  LineFit f;
  f.n = n;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  const double scale = syy / n;
  if (scale <= 1e-24 * (1.0 + my * my)) {
    // Flat data: a constant explains everything.
    f.slope = 0.0;
    f.intercept = my;
    f.r2 = 1.0;
    return f;
  }
  const double ss_res = syy - sxy * sxy / sxx;
  f.r2 = 1.0 - ss_res / syy;
  return f;
}

} // namespace heatctl
