#pragma once

#include <stdexcept>
#include <string>

namespace bsnse {

/// Two fields (or a field and an operator) live on different mode sets.
class ModeSetMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Bad or unknown configuration input. Maps to CLI exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The super-parabolicity margin is not positive. Maps to CLI exit code 3.
class AdmissibilityError : public std::runtime_error {
 public:
  AdmissibilityError(const std::string& what, double margin)
      : std::runtime_error(what), margin_(margin) {}
  double margin() const noexcept { return margin_; }

 private:
  double margin_;
};

/// Solver divergence, Picard non-contraction, blow-up. Maps to CLI exit code 4.
class NumericalFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An operation was called on inputs that violate its documented precondition.
class PreconditionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace bsnse
