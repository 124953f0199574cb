#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace sigmaflow {

/// Base class for every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Arguments outside an operation's domain (non-finite data, k out of range, ...).
class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// Evaluation at a coordinate singularity (r = 0 without center regularity).
class SingularityError : public Error {
 public:
  using Error::Error;
};

/// An eigenvalue tuple left the Garding cone where the operation requires it.
class ConeViolation : public Error {
 public:
  explicit ConeViolation(const std::string& what, std::ptrdiff_t node = -1)
      : Error(what), node_(node) {}
  /// Grid node index of the violation, or -1 when not tied to a grid.
  std::ptrdiff_t node() const noexcept { return node_; }

 private:
  std::ptrdiff_t node_;
};

/// A constructor (schedule, barrier) could not produce an object satisfying
/// its contract.
class ConstructionError : public Error {
 public:
  using Error::Error;
};

/// A run configuration failed to parse or validate.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Iterative solver failure: iteration cap, line-search stall, singular
/// Jacobian, time-step underflow.
class SolverError : public Error {
 public:
  enum class Kind { IterationCap, LineSearchStall, SingularJacobian, ConeCollapse, NonMonotone, InvalidState };

  SolverError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

}  // namespace sigmaflow
