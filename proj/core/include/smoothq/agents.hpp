#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "smoothq/mdp.hpp"
#include "smoothq/rng.hpp"
#include "smoothq/smoothing.hpp"

namespace smoothq {

/// Dense (state, action) -> value table shaped like an MDP. Terminal states
/// own zero entries.
class QTable {
 public:
  QTable() = default;
  explicit QTable(std::span<const std::size_t> actions_per_state, double fill = 0.0);
  explicit QTable(const TabularMdp& mdp, double fill = 0.0);

  std::size_t num_states() const noexcept { return offsets_.empty() ? 0 : offsets_.size() - 1; }
  std::size_t num_actions(std::size_t state) const;
  std::size_t size() const noexcept { return values_.size(); }

  std::span<double> row(std::size_t state);
  std::span<const double> row(std::size_t state) const;

  double& at(std::size_t state, std::size_t action);
  double at(std::size_t state, std::size_t action) const;

  /// Position of (state, action) in values().
  std::size_t index(std::size_t state, std::size_t action) const;

  std::span<double> values() noexcept { return values_; }
  std::span<const double> values() const noexcept { return values_; }

  bool same_shape(const QTable& other) const noexcept { return offsets_ == other.offsets_; }

  friend bool operator==(const QTable&, const QTable&) = default;

 private:
  std::vector<std::size_t> offsets_;
  std::vector<double> values_;
};

enum class InitKind { zeros, constant, uniform };

/// Initial Q-values. Text form: `zeros`, `const:C`, `uniform:LO:HI`.
struct InitSpec {
  InitKind kind = InitKind::zeros;
  double lo = 0.0;
  double hi = 0.0;

  static InitSpec zeros() { return {}; }
  static InitSpec constant(double c);
  static InitSpec uniform(double lo, double hi);
  static InitSpec parse(std::string_view text);
  std::string to_string() const;

  /// max |Q_0| over the support.
  double magnitude() const noexcept;

  /// Uniform draws consume one RngStream::uniform() per entry, in row order.
  void apply(QTable& table, RngStream& rng) const;

  friend bool operator==(const InitSpec&, const InitSpec&) = default;
};

enum class AgentKind { q, double_q, smoothed_q, sarsa };

/// CLI names: `q`, `double-q`, `smoothed-q`, `sarsa`.
std::string_view agent_name(AgentKind kind) noexcept;
AgentKind parse_agent_kind(std::string_view name);
inline constexpr AgentKind kAllAgentKinds[] = {AgentKind::q, AgentKind::double_q,
                                               AgentKind::smoothed_q, AgentKind::sarsa};

/// R/(1−γ) + |Q_0|: no update with |reward| <= R can push an entry past this.
double q_value_bound(double reward_bound, double discount, double init_magnitude);

/// A tabular learner: plain Q-learning, double Q-learning, smoothed
/// Q-learning or SARSA.
///
/// Every update touches exactly one (state, action) entry of one table and
/// advances the step counter by one. Update targets break ties toward the
/// lowest action index; action selection breaks ties uniformly at random.
class Agent {
 public:
  Agent(AgentKind kind, const TabularMdp& mdp,
        SmoothingSpec smoothing = SmoothingSpec::hard_max());

  /// Re-initialises every table (double-q: A first, then B).
  void initialize(const InitSpec& init, RngStream& rng);

  /// Replaces the table(s); double-q copies `table` into both A and B.
  void set_table(const QTable& table);

  AgentKind kind() const noexcept { return kind_; }
  double discount() const noexcept { return discount_; }
  std::uint64_t steps() const noexcept { return steps_; }
  const SmoothingSpec& smoothing() const noexcept { return smoothing_; }

  /// Q (or Q̃, or Q_A for double-q).
  const QTable& table() const noexcept { return primary_; }
  /// Q_B; present only for double-q.
  const std::optional<QTable>& secondary() const noexcept { return secondary_; }
  /// The reported estimate: (Q_A + Q_B)/2 for double-q, the table otherwise.
  QTable estimate() const;

  /// ε-greedy over the evaluation table (Q_A + Q_B for double-q). Always
  /// draws one uniform for the ε coin, then one index draw if exploring or
  /// if the greedy set has more than one member.
  std::size_t select_action(std::size_t state, double epsilon, RngStream& rng) const;

  /// r + γ·max_a' Q(s', a'); r alone when s' is terminal.
  double q_target(const Transition& tr) const;
  /// r + γ·Σ_a' q_t(a'|s')·Q̃(s', a').
  double smoothed_target(const Transition& tr, std::uint64_t t) const;
  /// r + γ·Q(s', a'). `next_action` is required when s' is non-terminal.
  double sarsa_target(const Transition& tr, std::optional<std::size_t> next_action) const;

  void q_update(const Transition& tr, double alpha);
  /// Smoothing evaluated at t = steps() + 1.
  void smoothed_q_update(const Transition& tr, double alpha);
  /// Smoothing evaluated at an explicit schedule index (per-visit/per-episode
  /// clocks).
  void smoothed_q_update(const Transition& tr, double alpha, std::uint64_t t);
  /// Fair coin from `rng`: heads updates A against B's value at A's argmax,
  /// tails the mirror image.
  void double_q_update(const Transition& tr, double alpha, RngStream& rng);
  /// Same as above with the coin already drawn (true = update A).
  void double_q_update(const Transition& tr, double alpha, bool update_a);
  void sarsa_update(const Transition& tr, std::optional<std::size_t> next_action, double alpha);

 private:
  void require_kind(AgentKind expected, const char* op) const;
  void check_transition(const Transition& tr) const;
  void apply(QTable& table, const Transition& tr, double alpha, double target);

  AgentKind kind_;
  double discount_;
  SmoothingSpec smoothing_;
  QTable primary_;
  std::optional<QTable> secondary_;
  std::uint64_t steps_ = 0;
};

}  // namespace smoothq
