#pragma once

#include <complex>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace ab {

// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Shapes or variable counts do not line up.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// An operation's structural precondition is violated (non-square, not
// autonomous, not full row rank, k = 0 where controls are required, ...).
class PreconditionError : public Error {
 public:
  using Error::Error;
};

// Malformed serialized input (JSON syntax, schema, shapes).
class InputError : public Error {
 public:
  using Error::Error;
};

// The offset system R(sigma)w = c has no solution.
class EmptyBehaviorError : public Error {
 public:
  using Error::Error;
};

// Floating-point reduction blew up (degree cap, failed residual check).
class NumericalError : public Error {
 public:
  using Error::Error;
};

// Raised by certificate synthesis when det R has roots on or outside the
// unit circle. Carries the offending roots.
class NotContractiveError : public PreconditionError {
 public:
  NotContractiveError(const std::string& what, std::vector<std::complex<double>> roots)
      : PreconditionError(what), roots_(std::move(roots)) {}

  const std::vector<std::complex<double>>& roots() const noexcept { return roots_; }

 private:
  std::vector<std::complex<double>> roots_;
};

}  // namespace ab
