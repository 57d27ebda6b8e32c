#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "smoothq/agents.hpp"
#include "smoothq/mdp.hpp"
#include "smoothq/oracle.hpp"
#include "smoothq/schedules.hpp"
#include "smoothq/smoothing.hpp"

namespace smoothq {

/// Which counter feeds the α, β and δ schedules.
enum class ClockMode {
  global_step,  ///< environment steps since the start of the run
  per_visit,    ///< visits to the (state, action) being updated
  per_episode,  ///< 1-based episode index
};

std::string_view clock_name(ClockMode mode) noexcept;
ClockMode parse_clock_mode(std::string_view name);

inline constexpr std::string_view kThreadsEnvVar = "SMOOTHQ_THREADS";

struct ExperimentConfig {
  std::string env{kMaxBiasEnvName};
  AgentKind agent = AgentKind::q;
  SmoothingSpec smoothing = SmoothingSpec::clipped_max(Schedule::exponential_decay(0.02));
  Schedule alpha = Schedule::hyperbolic(0.1, 0.001);
  double epsilon = 0.1;
  double gamma = 0.99;
  InitSpec init = InitSpec::zeros();
  std::size_t episodes = 300;
  std::size_t runs = 10'000;
  std::uint64_t seed = 0;
  ClockMode clock = ClockMode::global_step;
  /// 0 = $SMOOTHQ_THREADS, else hardware concurrency.
  std::size_t threads = 0;
  /// Episodes that have not terminated after this many steps are cut off.
  std::size_t max_episode_steps = 100'000;
  std::string output;

  /// Throws ContractViolation when an invariant is broken.
  void validate() const;
};

nlohmann::json config_to_json(const ExperimentConfig& config);
/// Missing keys keep the values already in `base`.
ExperimentConfig config_from_json(const nlohmann::json& doc, ExperimentConfig base = {});
ExperimentConfig load_config_file(const std::filesystem::path& path, ExperimentConfig base = {});

/// Everything a run needs that does not depend on the run index.
struct ExperimentContext {
  TabularMdp mdp;
  OptimalQ optimal;
  /// Action at the start state whose first-choice frequency is reported.
  std::size_t tracked_action = 0;
};

/// Loads the environment, solves for Q* and resolves the tracked action
/// (the environment's designation, otherwise the start-state action with the
/// lowest Q*, lowest index on ties).
ExperimentContext prepare_experiment(const ExperimentConfig& config);

struct RunTrace {
  /// Action taken from the start state, per episode.
  std::vector<std::size_t> first_action;
  /// q_distance of the agent's estimate after each episode.
  std::vector<double> q_distance;
  /// Per-step bootstrap slack, recorded only when requested and only for
  /// steps into a non-terminal state.
  std::vector<double> slack;
};

struct RunOptions {
  bool record_slack = false;
};

/// One independent run. Its RNG stream is RngStream::for_run(seed, run_index);
/// table initialisation draws from a child stream split off it.
RunTrace run_single(const ExperimentConfig& config, std::size_t run_index);
RunTrace run_single(const ExperimentContext& ctx, const ExperimentConfig& config,
                    std::size_t run_index, RunOptions options = {});

/// Runs `config.episodes` episodes with a caller-provided agent (e.g. one
/// seeded with Q*). The agent must have been built on ctx.mdp.
RunTrace run_with_agent(const ExperimentContext& ctx, const ExperimentConfig& config,
                        Agent& agent, RngStream& rng, RunOptions options = {});

struct AggregateSeries {
  /// Per episode: fraction of runs whose first action was the tracked one.
  std::vector<double> left_fraction;
  /// Per episode: mean q_distance over runs.
  std::vector<double> q_distance;
  std::size_t runs = 0;
  std::size_t tracked_action = 0;
  std::string tracked_label;
  ExperimentConfig config;

  std::size_t episodes() const noexcept { return left_fraction.size(); }
};

/// Aggregation from per-run traces, reduced in run-index order.
AggregateSeries aggregate(std::span<const RunTrace> traces, const ExperimentContext& ctx,
                          const ExperimentConfig& config);

/// Runs every run (in parallel when threads > 1) and aggregates. The result
/// does not depend on the thread count.
AggregateSeries run_experiment(const ExperimentConfig& config);
AggregateSeries run_experiment(const ExperimentContext& ctx, const ExperimentConfig& config);

std::size_t resolve_thread_count(std::size_t requested);

/// Sibling metadata path: `fig2.csv` -> `fig2.meta.json`.
std::filesystem::path metadata_path(const std::filesystem::path& csv_path);

/// Writes `episode,left_fraction,q_distance` rows (17 significant digits)
/// plus the JSON metadata sibling. Throws std::runtime_error naming the path
/// on IO failure.
void emit_csv(const AggregateSeries& series, const std::filesystem::path& path);

nlohmann::json series_metadata(const AggregateSeries& series);

/// Parses a file written by emit_csv (metadata is not read).
AggregateSeries read_series_csv(const std::filesystem::path& path);

/// Runs all four agents with one configuration (agent field ignored).
std::map<AgentKind, AggregateSeries> run_comparison(const ExperimentConfig& config);

/// `<stem>_<agent>.csv` next to `combined`.
std::filesystem::path agent_csv_path(const std::filesystem::path& combined, AgentKind kind);

/// One CSV per agent plus a wide CSV
/// `episode,<agent>_left_fraction,<agent>_q_distance,...` at `combined`.
void emit_comparison(const std::map<AgentKind, AggregateSeries>& results,
                     const std::filesystem::path& combined);

}  // namespace smoothq
