#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace heatctl {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

// Raised for malformed or inconsistent run configuration. The CLI maps this
// family to exit code 2.
class ConfigError : public std::runtime_error {
public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Raised when a numerical guard trips at run time (truncation too small,
// step rejection, unresolvable eigenvalue, ...). CLI exit code 3.
class NumericalError : public std::runtime_error {
public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace heatctl
