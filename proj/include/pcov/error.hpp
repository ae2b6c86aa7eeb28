#pragma once

#include <stdexcept>
#include <string>

namespace pcov {

/// Base class for every failure raised by the library. Maps to CLI exit code 1.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input data, invalid configuration or violated preconditions.
/// Maps to CLI exit code 2.
class InputError : public Error {
 public:
  using Error::Error;
};

/// An iterative routine stopped before reaching its tolerance.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, int iterations)
      : Error(what + " (after " + std::to_string(iterations) + " iterations)"),
        iterations_(iterations) {}

  int iterations() const noexcept { return iterations_; }

 private:
  int iterations_;
};

}  // namespace pcov
