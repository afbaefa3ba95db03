#pragma once

#include <stdexcept>
#include <string>

namespace socialtrack {

/// Base for every error raised by the library. `module()` names the module
/// that detected the problem so front ends can report it with context.
class Error : public std::runtime_error {
 public:
  Error(std::string module, const std::string& what)
      : std::runtime_error(what), module_(std::move(module)) {}

  const std::string& module() const noexcept { return module_; }

 private:
  std::string module_;
};

/// Input violates a documented precondition or range.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// The error system is not mean-square stable (rho(Q) >= 1, or a mode sits
/// too close to the stability boundary).
class InstabilityError : public Error {
 public:
  InstabilityError(std::string module, const std::string& what, int mode = -1)
      : Error(std::move(module), what), mode_(mode) {}

  /// Index of the offending eigenvalue, or -1 when not mode specific.
  int mode() const noexcept { return mode_; }

 private:
  int mode_;
};

/// An iterative numerical routine failed to meet its tolerance.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace socialtrack
