#pragma once

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace cqed {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;

inline constexpr double kTwoPi = 6.283185307179586476925286766559;
inline constexpr Complex kI{0.0, 1.0};

// Base of all library errors. The CLI maps the subclasses onto exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid parameters or configuration (CLI exit code 2).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// A numerical procedure did not converge or hit a tolerance violation
// (CLI exit code 3).
class ConvergenceError : public Error {
 public:
  using Error::Error;
};

// Input data does not satisfy an operation's precondition.
class DomainError : public Error {
 public:
  using Error::Error;
};

}  // namespace cqed
