#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace smoothq {

enum class ScheduleKind { constant, hyperbolic, linear, exponential_decay };

/// Scalar schedule evaluated at a 1-based step index t.
///
///   constant(c)            : c
///   hyperbolic(c, k)       : c / (1 + k·t)
///   linear(c, m)           : c + m·(t − 1)
///   exponential-decay(k)   : exp(−k·t)
///
/// Text form: `const:C`, `hyperbolic:C:K`, `linear:C:M`, `exp:K`.
class Schedule {
 public:
  static Schedule constant(double value);
  static Schedule hyperbolic(double base, double rate);
  static Schedule linear(double base, double slope);
  static Schedule exponential_decay(double rate);

  static Schedule parse(std::string_view text);

  /// Raw value; throws ContractViolation for t == 0.
  double value(std::uint64_t t) const;

  /// value(t) clamped to [0, 1]; used where the schedule is a rate or a
  /// probability mass (α_t, δ_t).
  double rate(std::uint64_t t) const;

  ScheduleKind kind() const noexcept { return kind_; }
  double base() const noexcept { return base_; }
  double param() const noexcept { return param_; }

  std::string to_string() const;

  friend bool operator==(const Schedule&, const Schedule&) = default;

 private:
  Schedule(ScheduleKind kind, double base, double param);

  ScheduleKind kind_;
  double base_;
  double param_;
};

/// Finite-horizon look at the step-size conditions Σα = ∞ and Σα² < ∞.
/// Sums run over t = 1..horizon; the "tail" is t in (horizon/2, horizon].
/// This is a trend indicator at desk scale, not a proof.
struct RobbinsMonroReport {
  std::uint64_t horizon = 0;
  double partial_sum = 0.0;
  double partial_sum_squares = 0.0;
  double tail_sum = 0.0;
  double head_sq_sum = 0.0;
  double tail_sq_sum = 0.0;
  /// tail_sum > 1% of partial_sum: the series is still growing at the horizon.
  bool sum_diverges = false;
  /// tail_sq_sum <= 1% of partial_sum_squares and shrinking relative to the
  /// first half: the squared series has settled.
  bool squares_converge = false;

  bool satisfied() const noexcept { return sum_diverges && squares_converge; }
};

inline constexpr std::uint64_t kMinRobbinsMonroHorizon = 10'000;
inline constexpr double kRobbinsMonroTailFraction = 0.01;

/// Evaluates the schedule through rate() (the learning-rate view).
RobbinsMonroReport check_robbins_monro(const Schedule& schedule, std::uint64_t horizon);

}  // namespace smoothq
