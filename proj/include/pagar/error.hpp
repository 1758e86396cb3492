#pragma once

#include <stdexcept>
#include <string>

namespace pagar {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input: shapes, probabilities, out-of-box parameters.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// An enumeration exceeded its configured size guard.
class GuardViolation : public Error {
 public:
  using Error::Error;
};

// Iterative solver stopped before reaching its tolerance.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double residual)
      : Error(what + " (residual " + std::to_string(residual) + ")"), residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

// Bad configuration file or command-line value.
class ConfigError : public Error {
 public:
  using Error::Error;
};

inline void require(bool ok, const std::string& msg) {
  if (!ok) throw InvalidArgument(msg);
}

}  // namespace pagar
