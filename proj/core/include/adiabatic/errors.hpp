#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace adiabatic {

/// Base class of every failure raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad argument, out-of-range index, or inconsistent dimensions.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Two levels meet (or come within the crossing tolerance) somewhere on [0, 1].
class CrossingError : public Error {
 public:
  CrossingError(const std::string& what, double s) : Error(what), s_(s) {}
  double s() const noexcept { return s_; }

 private:
  double s_;
};

/// A band has no exterior states, so gaps and leakage are undefined.
class NoExteriorError : public Error {
 public:
  using Error::Error;
};

/// Step or quadrature-panel count below the resolution the problem needs.
class ResolutionError : public Error {
 public:
  ResolutionError(const std::string& what, std::size_t required)
      : Error(what), required_(required) {}
  std::size_t required() const noexcept { return required_; }

 private:
  std::size_t required_;
};

/// Iterative numerics (adaptive quadrature) failed to reach tolerance.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace adiabatic
