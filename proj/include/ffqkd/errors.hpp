#pragma once

#include <stdexcept>
#include <string>

namespace ffqkd {

/// Raised when a requested geometry or speed ratio admits no valid layout.
class InfeasibleError : public std::domain_error {
 public:
  explicit InfeasibleError(const std::string& what, double bound = 0.0)
      : std::domain_error(what), bound_(bound) {}
  /// The violated limit (e.g. the d2 upper bound in km), when one exists.
  double bound() const noexcept { return bound_; }

 private:
  double bound_;
};

/// Fock-space truncation dropped more weight than the configured tolerance.
class TruncationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A small-signal probability formula was pushed outside [0, 1].
class ProbabilityError : public std::range_error {
 public:
  using std::range_error::range_error;
};

/// Numerical failure in a linear-algebra step (non-PSD state, underflow, ...).
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace ffqkd
