#pragma once

#include <stdexcept>
#include <string>

namespace posred {

// Malformed input: shapes, partitions, config values. The CLI maps this to
// exit code 2.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A numerical procedure could not deliver a trustworthy answer. The CLI maps
// this to exit code 3.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised when a stability assumption does not hold.
class UnstableSystemError : public NumericalError {
 public:
  UnstableSystemError(const std::string& what, double abscissa)
      : NumericalError(what), abscissa_(abscissa) {}
  double abscissa() const noexcept { return abscissa_; }

 private:
  double abscissa_;
};

}  // namespace posred
