#pragma once

#include <stdexcept>
#include <string>

namespace tpp {

// Base for every failure raised by the library. The CLI maps the concrete
// type onto an exit code, so keep the hierarchy flat.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual const char* kind() const noexcept { return "error"; }
};

// Argument outside the domain an object is defined on.
class DomainError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "domain"; }
};

// Quadrature, root solve or integrator failed to reach its tolerance.
class NumericalError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "numerical"; }
};

class ConfigError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "config"; }
};

// A structural identity that must hold (index formula, no-coexistence, ...)
// was observed to fail at a confidently resolved point.
class InvariantViolation : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "invariant"; }
};

// Reading or writing a file failed.
class IoError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "io"; }
};

}  // namespace tpp
