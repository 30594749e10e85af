#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace advaug {

struct DimensionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// The penalty weight does not dominate the loss curvature, so the inner
// problem is not strongly concave.
struct CurvatureError : std::domain_error {
  using std::domain_error::domain_error;
};

struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConvergenceError : std::runtime_error {
  ConvergenceError(const std::string& what, Eigen::VectorXd last)
      : std::runtime_error(what), last_iterate(std::move(last)) {}
  Eigen::VectorXd last_iterate;
};

struct FormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace advaug
