#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "smoothq/rng.hpp"

namespace smoothq {

enum class RewardKind { constant, gaussian };

/// Reward attached to one (state, action, next_state) outcome.
/// Invariant: stddev == 0 iff kind == constant.
struct RewardDist {
  RewardKind kind = RewardKind::constant;
  double mean = 0.0;
  double stddev = 0.0;

  static RewardDist constant(double value);
  static RewardDist gaussian(double mean, double stddev);

  /// Constant rewards do not touch the stream; Gaussian rewards draw one
  /// RngStream::normal() variate.
  double sample(RngStream& rng) const;
};

/// One entry of a (state, action) categorical row.
struct Outcome {
  std::size_t next_state = 0;
  double probability = 0.0;
  RewardDist reward;
};

struct ActionSpec {
  std::string label;
  std::vector<Outcome> outcomes;
};

struct StateSpec {
  std::string label;
  bool terminal = false;
  std::vector<ActionSpec> actions;
};

struct Transition {
  std::size_t state = 0;
  std::size_t action = 0;
  double reward = 0.0;
  std::size_t next_state = 0;
  bool is_terminal = false;
};

/// Finite MDP with dense 0-based state and action indices. Immutable after
/// construction; safe to share across threads.
///
/// Terminal states carry no actions. Every non-terminal state has at least
/// one action, and every action row is a categorical distribution whose
/// probabilities sum to 1 within 1e-12.
class TabularMdp {
 public:
  TabularMdp(std::vector<StateSpec> states, std::size_t start_state, double discount,
             std::optional<std::size_t> tracked_action = std::nullopt);

  std::size_t num_states() const noexcept { return states_.size(); }
  std::size_t num_actions(std::size_t state) const;
  std::vector<std::size_t> actions_per_state() const;
  bool is_terminal(std::size_t state) const;
  std::size_t start_state() const noexcept { return start_state_; }
  double discount() const noexcept { return discount_; }

  /// Action at the start state whose selection frequency the harness
  /// reports (Left in `max-bias`). Unset means "let the harness decide".
  std::optional<std::size_t> tracked_action() const noexcept { return tracked_action_; }

  std::span<const Outcome> outcomes(std::size_t state, std::size_t action) const;
  const std::string& state_label(std::size_t state) const;
  const std::string& action_label(std::size_t state, std::size_t action) const;

  /// r̄(s, a) = Σ_{s'} p(s'|s,a) · mean reward.
  double expected_reward(std::size_t state, std::size_t action) const;

  /// Largest |mean| or |mean| + 6·stddev over all outcomes; a practical bound
  /// for Gaussian rewards, exact for constant ones.
  double reward_magnitude_bound() const;

  /// Same MDP with another discount factor.
  TabularMdp with_discount(double discount) const;

  const std::vector<StateSpec>& states() const noexcept { return states_; }

 private:
  void check_state(std::size_t state) const;
  void check_action(std::size_t state, std::size_t action) const;

  std::vector<StateSpec> states_;
  std::vector<std::vector<std::vector<double>>> cumulative_;
  std::size_t start_state_;
  double discount_;
  std::optional<std::size_t> tracked_action_;

  friend Transition step(const TabularMdp&, std::size_t, std::size_t, RngStream&);
};

/// Samples one transition. The next state is drawn by inverse CDF from a
/// single RngStream::uniform(), then the reward of that outcome is sampled.
Transition step(const TabularMdp& mdp, std::size_t state, std::size_t action,
                RngStream& rng);

namespace max_bias {
inline constexpr std::size_t kStateA = 0;
inline constexpr std::size_t kStateB = 1;
inline constexpr std::size_t kStateC = 2;
inline constexpr std::size_t kStateD = 3;
inline constexpr std::size_t kLeft = 0;
inline constexpr std::size_t kRight = 1;
inline constexpr std::size_t kActionsFromB = 8;
inline constexpr double kRewardMeanB = -0.1;
inline constexpr double kRewardStdB = 1.0;
}  // namespace max_bias

/// The four-state maximization-bias environment: A --Right--> C (terminal,
/// reward 0), A --Left--> B (reward 0), and each of B's eight actions ends
/// in D with a N(-0.1, 1) reward.
TabularMdp make_max_bias_env(double discount = 0.99);

/// Environment JSON:
///   {
///     "start_state": 0, "discount": 0.9, "tracked_action": 0,
///     "states": [
///       {"label": "A", "terminal": false,
///        "actions": [{"label": "go", "transitions": [
///            {"next": 1, "prob": 1.0,
///             "reward": {"kind": "gaussian", "mean": 0.0, "std": 1.0}}]}]},
///       {"label": "T", "terminal": true}
///     ]
///   }
/// `discount`, `tracked_action`, labels and `start_state` (default 0) are
/// optional; a bare number is accepted as a constant reward.
TabularMdp mdp_from_json(const nlohmann::json& doc, std::optional<double> discount_override = std::nullopt);
nlohmann::json mdp_to_json(const TabularMdp& mdp);

inline constexpr std::string_view kMaxBiasEnvName = "max-bias";

/// Built-in name (`max-bias`) or a path to an environment JSON file.
TabularMdp load_environment(std::string_view name_or_path, double discount);

}  // namespace smoothq
