#pragma once

#include <stdexcept>
#include <string>

namespace smoothq {

/// A caller broke a documented precondition (index out of range, wrong agent
/// kind, stepping a terminal state, ...).
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Malformed textual input: schedule/smoothing specs, environment JSON,
/// experiment configs.
class ParseError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A quantity that must stay finite did not.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Value iteration ran out of sweeps before reaching its tolerance.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, double last_residual)
      : std::runtime_error(what), last_residual_(last_residual) {}

  double last_residual() const noexcept { return last_residual_; }

 private:
  double last_residual_;
};

}  // namespace smoothq
