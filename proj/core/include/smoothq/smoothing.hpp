#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "smoothq/schedules.hpp"

namespace smoothq {

/// Probabilities over the actions of one state. Non-negative, sums to 1.
struct ActionDistribution {
  std::vector<double> probs;
};

enum class SmoothingKind { hard_max, softmax, clipped_max };

/// Which bootstrap distribution replaces the hard max, and its schedule
/// (inverse temperature β_t for softmax, off-argmax mass δ_t for clipped max).
///
/// Text form: `max`, `softmax:<schedule>`, `clipped:<schedule>`, e.g.
/// `softmax:linear:0.1:0.1` or `clipped:exp:0.02`.
class SmoothingSpec {
 public:
  static SmoothingSpec hard_max();
  static SmoothingSpec softmax(Schedule beta);
  static SmoothingSpec clipped_max(Schedule delta);

  static SmoothingSpec parse(std::string_view text);
  std::string to_string() const;

  SmoothingKind kind() const noexcept { return kind_; }
  const std::optional<Schedule>& schedule() const noexcept { return schedule_; }

  /// β_t (softmax, raw schedule value, must be >= 0) or δ_t (clipped max,
  /// clamped to [0, 1]). Zero for hard max.
  double parameter(std::uint64_t t) const;

  friend bool operator==(const SmoothingSpec&, const SmoothingSpec&) = default;

 private:
  SmoothingSpec(SmoothingKind kind, std::optional<Schedule> schedule)
      : kind_(kind), schedule_(std::move(schedule)) {}

  SmoothingKind kind_;
  std::optional<Schedule> schedule_;
};

/// Lowest index among maximal entries.
std::size_t argmax_lowest(std::span<const double> row);

/// Writes q_t(·|s') for the given row into `out` (resized to row.size()).
/// Single-entry rows always yield {1}. Throws NumericError on non-finite input.
void smooth_into(const SmoothingSpec& spec, std::span<const double> q_row, std::uint64_t t,
                 std::vector<double>& out);

ActionDistribution smooth(const SmoothingSpec& spec, std::span<const double> q_row,
                          std::uint64_t t);

/// Σ_a probs[a]·q_row[a]; never exceeds max(q_row) beyond rounding.
double expected_value(std::span<const double> probs, std::span<const double> q_row);
double expected_value(const ActionDistribution& dist, std::span<const double> q_row);

/// Σ_a q_t(a|s')·q_row[a] without materializing the distribution.
double smoothed_value(const SmoothingSpec& spec, std::span<const double> q_row, std::uint64_t t);

}  // namespace smoothq

namespace smoothq {

/// Per-step slack of the smoothed bootstrap against the hard max:
///   γ·δ·(|max_a Q(s',a)| + |Q(s',b₋)|),
/// where δ = 1 − q_t(a*|s') is the mass placed off the (lowest-index) argmax
/// and b₋ is the smallest non-argmax entry. Zero for single-action rows.
double bootstrap_slack(const SmoothingSpec& spec, std::span<const double> q_row, std::uint64_t t,
                       double discount);

}  // namespace smoothq
