#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace vbsde {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid parameters, malformed inputs, unreadable files.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Input outside the mathematical domain of an operation (e.g. a field
/// with nonzero mean handed to the Green solver).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Overflow, NaN, or a violated stability guard during a computation.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Picard iteration ran out of iterations. Carries the contraction ratios
/// recorded so far.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, std::vector<double> ratios)
      : Error(what), ratios_(std::move(ratios)) {}

  const std::vector<double>& ratios() const noexcept { return ratios_; }

 private:
  std::vector<double> ratios_;
};

}  // namespace vbsde
