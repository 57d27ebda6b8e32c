#include "smoothq/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <exception>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "smoothq/errors.hpp"

namespace smoothq {

// ---------------------------------------------------------------- config

std::string_view clock_name(ClockMode mode) noexcept {
  switch (mode) {
    case ClockMode::global_step:
      return "global-step";
    case ClockMode::per_visit:
      return "per-visit";
    case ClockMode::per_episode:
      return "per-episode";
  }
  return "?";
}

ClockMode parse_clock_mode(std::string_view name) {
  for (ClockMode m : {ClockMode::global_step, ClockMode::per_visit, ClockMode::per_episode}) {
    if (clock_name(m) == name) {
      return m;
    }
  }
  throw ParseError("unknown clock mode '" + std::string(name) +
                   "' (expected global-step, per-visit or per-episode)");
}

void ExperimentConfig::validate() const {
  if (runs < 1) {
    throw ContractViolation("runs must be >= 1");
  }
  if (episodes < 1) {
    throw ContractViolation("episodes must be >= 1");
  }
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) {
    throw ContractViolation("epsilon must lie in [0, 1]");
  }
  if (!(gamma >= 0.0 && gamma < 1.0)) {
    throw ContractViolation("gamma must lie in [0, 1)");
  }
  if (max_episode_steps < 1) {
    throw ContractViolation("max_episode_steps must be >= 1");
  }
}

nlohmann::json config_to_json(const ExperimentConfig& c) {
  return {
      {"env", c.env},
      {"agent", agent_name(c.agent)},
      {"smoothing", c.smoothing.to_string()},
      {"alpha", c.alpha.to_string()},
      {"epsilon", c.epsilon},
      {"gamma", c.gamma},
      {"init", c.init.to_string()},
      {"episodes", c.episodes},
      {"runs", c.runs},
      {"seed", c.seed},
      {"clock", clock_name(c.clock)},
      {"max_episode_steps", c.max_episode_steps},
      {"out", c.output},
  };
}

ExperimentConfig config_from_json(const nlohmann::json& doc, ExperimentConfig c) {
  try {
    if (!doc.is_object()) {
      throw ParseError("experiment config must be a JSON object");
    }
    for (const auto& [key, value] : doc.items()) {
      if (key == "env") {
        c.env = value.get<std::string>();
      } else if (key == "agent") {
        c.agent = parse_agent_kind(value.get<std::string>());
      } else if (key == "smoothing") {
        c.smoothing = SmoothingSpec::parse(value.get<std::string>());
      } else if (key == "alpha") {
        c.alpha = Schedule::parse(value.get<std::string>());
      } else if (key == "epsilon") {
        c.epsilon = value.get<double>();
      } else if (key == "gamma") {
        c.gamma = value.get<double>();
      } else if (key == "init") {
        c.init = InitSpec::parse(value.get<std::string>());
      } else if (key == "episodes") {
        c.episodes = value.get<std::size_t>();
      } else if (key == "runs") {
        c.runs = value.get<std::size_t>();
      } else if (key == "seed") {
        c.seed = value.get<std::uint64_t>();
      } else if (key == "clock") {
        c.clock = parse_clock_mode(value.get<std::string>());
      } else if (key == "threads") {
        c.threads = value.get<std::size_t>();
      } else if (key == "max_episode_steps") {
        c.max_episode_steps = value.get<std::size_t>();
      } else if (key == "out") {
        c.output = value.get<std::string>();
      } else {
        throw ParseError("unknown config key '" + key + "'");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("experiment config: ") + e.what());
  }
  return c;
}

ExperimentConfig load_config_file(const std::filesystem::path& path, ExperimentConfig base) {
  std::ifstream in(path);
  if (!in) {
    throw ParseError("cannot read config file " + path.string());
  }
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  return config_from_json(doc, std::move(base));
}

// ---------------------------------------------------------------- runs

ExperimentContext prepare_experiment(const ExperimentConfig& config) {
  config.validate();
  TabularMdp mdp = load_environment(config.env, config.gamma);
  OptimalQ optimal = value_iteration(mdp, 1e-12);
  std::size_t tracked = 0;
  if (mdp.tracked_action()) {
    tracked = *mdp.tracked_action();
  } else {
    const auto row = optimal.values.row(mdp.start_state());
    tracked = static_cast<std::size_t>(std::min_element(row.begin(), row.end()) - row.begin());
  }
  return ExperimentContext{std::move(mdp), std::move(optimal), tracked};
}

namespace {

void apply_update(Agent& agent, const Transition& tr, double alpha, std::uint64_t t,
                  std::optional<std::size_t> next_action, RngStream& rng) {
  switch (agent.kind()) {
    case AgentKind::q:
      agent.q_update(tr, alpha);
      return;
    case AgentKind::smoothed_q:
      agent.smoothed_q_update(tr, alpha, t);
      return;
    case AgentKind::double_q:
      agent.double_q_update(tr, alpha, rng);
      return;
    case AgentKind::sarsa:
      agent.sarsa_update(tr, next_action, alpha);
      return;
  }
}

}  // namespace

RunTrace run_with_agent(const ExperimentContext& ctx, const ExperimentConfig& config,
                        Agent& agent, RngStream& rng, RunOptions options) {
  const TabularMdp& mdp = ctx.mdp;
  RunTrace trace;
  trace.first_action.reserve(config.episodes);
  trace.q_distance.reserve(config.episodes);

  std::vector<std::uint64_t> visits;
  if (config.clock == ClockMode::per_visit) {
    visits.assign(agent.table().size(), 0);
  }
  const bool on_policy = agent.kind() == AgentKind::sarsa;
  std::uint64_t global_step = 0;

  for (std::size_t episode = 1; episode <= config.episodes; ++episode) {
    std::size_t state = mdp.start_state();
    std::size_t action = agent.select_action(state, config.epsilon, rng);
    trace.first_action.push_back(action);

    for (std::size_t steps = 0; steps < config.max_episode_steps; ++steps) {
      const Transition tr = step(mdp, state, action, rng);
      ++global_step;

      std::uint64_t clock = global_step;
      if (config.clock == ClockMode::per_visit) {
        clock = ++visits[agent.table().index(tr.state, tr.action)];
      } else if (config.clock == ClockMode::per_episode) {
        clock = episode;
      }

      if (options.record_slack && !tr.is_terminal && agent.kind() == AgentKind::smoothed_q) {
        trace.slack.push_back(bootstrap_slack(agent.smoothing(), agent.table().row(tr.next_state),
                                              clock, mdp.discount()));
      }

      std::optional<std::size_t> next_action;
      if (on_policy && !tr.is_terminal) {
        next_action = agent.select_action(tr.next_state, config.epsilon, rng);
      }
      apply_update(agent, tr, config.alpha.rate(clock), clock, next_action, rng);

      if (tr.is_terminal) {
        break;
      }
      state = tr.next_state;
      action = next_action ? *next_action : agent.select_action(state, config.epsilon, rng);
    }
    trace.q_distance.push_back(q_distance(agent.estimate(), ctx.optimal));
  }
  return trace;
}

RunTrace run_single(const ExperimentContext& ctx, const ExperimentConfig& config,
                    std::size_t run_index, RunOptions options) {
  RngStream rng = RngStream::for_run(config.seed, run_index);
  Agent agent(config.agent, ctx.mdp, config.smoothing);
  RngStream init_rng = rng.split(0);
  agent.initialize(config.init, init_rng);
  return run_with_agent(ctx, config, agent, rng, options);
}

RunTrace run_single(const ExperimentConfig& config, std::size_t run_index) {
  const ExperimentContext ctx = prepare_experiment(config);
  return run_single(ctx, config, run_index);
}

AggregateSeries aggregate(std::span<const RunTrace> traces, const ExperimentContext& ctx,
                          const ExperimentConfig& config) {
  AggregateSeries out;
  out.runs = traces.size();
  out.tracked_action = ctx.tracked_action;
  out.tracked_label = ctx.mdp.action_label(ctx.mdp.start_state(), ctx.tracked_action);
  out.config = config;
  const std::size_t episodes = config.episodes;
  std::vector<std::size_t> hits(episodes, 0);
  out.q_distance.assign(episodes, 0.0);
  for (const RunTrace& tr : traces) {
    if (tr.first_action.size() != episodes || tr.q_distance.size() != episodes) {
      throw ContractViolation("aggregate: trace length does not match episode count");
    }
    for (std::size_t e = 0; e < episodes; ++e) {
      hits[e] += tr.first_action[e] == ctx.tracked_action ? 1 : 0;
      out.q_distance[e] += tr.q_distance[e];
    }
  }
  const double n = static_cast<double>(traces.size());
  out.left_fraction.resize(episodes);
  for (std::size_t e = 0; e < episodes; ++e) {
    out.left_fraction[e] = static_cast<double>(hits[e]) / n;
    out.q_distance[e] /= n;
  }
  return out;
}

std::size_t resolve_thread_count(std::size_t requested) {
  if (requested > 0) {
    return requested;
  }
  if (const char* env = std::getenv(std::string(kThreadsEnvVar).c_str())) {
    std::size_t n = 0;
    const auto* end = env + std::strlen(env);
    const auto [ptr, ec] = std::from_chars(env, end, n);
    if (ec == std::errc{} && ptr == end && n > 0) {
      return n;
    }
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

AggregateSeries run_experiment(const ExperimentContext& ctx, const ExperimentConfig& config) {
  config.validate();
  std::vector<RunTrace> traces(config.runs);
  const std::size_t threads = std::min(resolve_thread_count(config.threads), config.runs);

  if (threads <= 1) {
    for (std::size_t r = 0; r < config.runs; ++r) {
      traces[r] = run_single(ctx, config, r);
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
      for (std::size_t r = next++; r < config.runs; r = next++) {
        try {
          traces[r] = run_single(ctx, config, r);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) {
            failure = std::current_exception();
          }
          next = config.runs;
        }
      }
    };
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (std::size_t i = 0; i < threads; ++i) {
      pool.emplace_back(worker);
    }
    pool.clear();
    if (failure) {
      std::rethrow_exception(failure);
    }
  }
  return aggregate(traces, ctx, config);
}

AggregateSeries run_experiment(const ExperimentConfig& config) {
  const ExperimentContext ctx = prepare_experiment(config);
  return run_experiment(ctx, config);
}

// ---------------------------------------------------------------- output

namespace {

std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%#.17g", v);
  return buf;
}

std::ofstream open_for_write(const std::filesystem::path& path) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw std::runtime_error("cannot open " + path.string() + " for writing: " +
                             std::strerror(errno));
  }
  return out;
}

void finish_write(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) {
    throw std::runtime_error("write to " + path.string() + " failed");
  }
}

}  // namespace

std::filesystem::path metadata_path(const std::filesystem::path& csv_path) {
  std::filesystem::path p = csv_path;
  p.replace_extension(".meta.json");
  return p;
}

nlohmann::json series_metadata(const AggregateSeries& series) {
  nlohmann::json meta;
  meta["config"] = config_to_json(series.config);
  meta["base_seed"] = series.config.seed;
  meta["runs"] = series.runs;
  meta["episodes"] = series.episodes();
  meta["columns"] = {"episode", "left_fraction", "q_distance"};
  meta["left_fraction"] = {
      {"tracked_action", series.tracked_action},
      {"tracked_label", series.tracked_label},
      {"measured_on", "first action of each episode, taken at the start state"}};
  meta["q_distance"] = {
      {"averaged_over", "non-terminal (state, action) pairs; terminal states excluded"},
      {"estimate", series.config.agent == AgentKind::double_q ? "(Q_A + Q_B) / 2" : "Q"},
      {"sampled", "once per episode end"}};
  meta["rng"] = {{"engine", "mt19937_64"},
                 {"run_seed", "splitmix64(splitmix64(base_seed) ^ splitmix64(run_index + golden))"},
                 {"normal", "marsaglia-polar"}};
  return meta;
}

void emit_csv(const AggregateSeries& series, const std::filesystem::path& path) {
  {
    std::ofstream out = open_for_write(path);
    out << "episode,left_fraction,q_distance\n";
    for (std::size_t e = 0; e < series.episodes(); ++e) {
      out << (e + 1) << ',' << fmt17(series.left_fraction[e]) << ','
          << fmt17(series.q_distance[e]) << '\n';
    }
    finish_write(out, path);
  }
  const auto meta_path = metadata_path(path);
  std::ofstream meta = open_for_write(meta_path);
  meta << series_metadata(series).dump(2) << '\n';
  finish_write(meta, meta_path);
}

AggregateSeries read_series_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open " + path.string());
  }
  std::string line;
  if (!std::getline(in, line) || line != "episode,left_fraction,q_distance") {
    throw ParseError(path.string() + ": unexpected CSV header");
  }
  AggregateSeries out;
  std::size_t expected_episode = 1;
  while (std::getline(in, line)) {
    if (line.empty()) {
      continue;
    }
    std::istringstream row(line);
    std::string f_ep, f_left, f_dist;
    if (!std::getline(row, f_ep, ',') || !std::getline(row, f_left, ',') ||
        !std::getline(row, f_dist)) {
      throw ParseError(path.string() + ": malformed row '" + line + "'");
    }
    if (std::stoull(f_ep) != expected_episode++) {
      throw ParseError(path.string() + ": episodes out of order");
    }
    out.left_fraction.push_back(std::strtod(f_left.c_str(), nullptr));
    out.q_distance.push_back(std::strtod(f_dist.c_str(), nullptr));
  }
  return out;
}

std::map<AgentKind, AggregateSeries> run_comparison(const ExperimentConfig& config) {
  const ExperimentContext ctx = prepare_experiment(config);
  std::map<AgentKind, AggregateSeries> results;
  for (AgentKind kind : kAllAgentKinds) {
    ExperimentConfig c = config;
    c.agent = kind;
    results.emplace(kind, run_experiment(ctx, c));
  }
  return results;
}

std::filesystem::path agent_csv_path(const std::filesystem::path& combined, AgentKind kind) {
  std::filesystem::path p = combined;
  p.replace_filename(combined.stem().string() + "_" + std::string(agent_name(kind)) + ".csv");
  return p;
}

void emit_comparison(const std::map<AgentKind, AggregateSeries>& results,
                     const std::filesystem::path& combined) {
  if (results.empty()) {
    throw ContractViolation("emit_comparison: no results");
  }
  for (const auto& [kind, series] : results) {
    emit_csv(series, agent_csv_path(combined, kind));
  }
  const std::size_t episodes = results.begin()->second.episodes();
  std::ofstream out = open_for_write(combined);
  out << "episode";
  for (const auto& [kind, series] : results) {
    if (series.episodes() != episodes) {
      throw ContractViolation("emit_comparison: series lengths differ");
    }
    out << ',' << agent_name(kind) << "_left_fraction," << agent_name(kind) << "_q_distance";
  }
  out << '\n';
  for (std::size_t e = 0; e < episodes; ++e) {
    out << (e + 1);
    for (const auto& [kind, series] : results) {
      out << ',' << fmt17(series.left_fraction[e]) << ',' << fmt17(series.q_distance[e]);
    }
    out << '\n';
  }
  finish_write(out, combined);
}

}  // namespace smoothq
