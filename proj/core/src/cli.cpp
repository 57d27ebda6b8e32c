#include "smoothq/cli.hpp"

#include <cstdio>
#include <iostream>
#include <optional>
#include <vector>

#include <CLI11.hpp>

#include "smoothq/errors.hpp"
#include "smoothq/harness.hpp"
#include "smoothq/oracle.hpp"
#include "smoothq/schedules.hpp"

namespace smoothq {

namespace {

/// Raw flag values; applied on top of defaults and an optional --config file.
struct ExperimentFlags {
  std::string config_file;
  std::string env, agent, smoothing, alpha, init, clock, out;
  double epsilon = 0.0, gamma = 0.0;
  std::size_t episodes = 0, runs = 0, threads = 0, max_episode_steps = 0;
  std::uint64_t seed = 0;

  CLI::Option* o_epsilon = nullptr;
  CLI::Option* o_gamma = nullptr;
  CLI::Option* o_episodes = nullptr;
  CLI::Option* o_runs = nullptr;
  CLI::Option* o_seed = nullptr;
  CLI::Option* o_threads = nullptr;
  CLI::Option* o_max_steps = nullptr;

  void attach(CLI::App& cmd, bool with_agent) {
    cmd.add_option("--config", config_file, "Experiment config JSON; flags override it")
        ->check(CLI::ExistingFile);
    cmd.add_option("--env", env, "Environment: built-in name (max-bias) or JSON file");
    if (with_agent) {
      cmd.add_option("--agent", agent, "q | double-q | smoothed-q | sarsa");
    }
    cmd.add_option("--smoothing", smoothing,
                   "max | softmax:<schedule> | clipped:<schedule> (smoothed-q)");
    cmd.add_option("--alpha", alpha, "Learning-rate schedule, e.g. hyperbolic:0.1:0.001");
    o_epsilon = cmd.add_option("--epsilon", epsilon, "Exploration rate in [0, 1]");
    o_gamma = cmd.add_option("--gamma", gamma, "Discount in [0, 1)");
    cmd.add_option("--init", init, "Initial Q-values: zeros | const:C | uniform:LO:HI");
    o_episodes = cmd.add_option("--episodes", episodes, "Episodes per run");
    o_runs = cmd.add_option("--runs", runs, "Independent runs");
    o_seed = cmd.add_option("--seed", seed, "Base seed");
    cmd.add_option("--clock", clock, "Schedule clock: global-step | per-visit | per-episode");
    o_threads = cmd.add_option("--threads", threads,
                               "Worker threads (default: $SMOOTHQ_THREADS or all cores)");
    o_max_steps = cmd.add_option("--max-episode-steps", max_episode_steps,
                                 "Cut episodes off after this many steps");
    cmd.add_option("--out", out, "Output CSV path");
  }

  ExperimentConfig resolve() const {
    ExperimentConfig c;
    if (!config_file.empty()) {
      c = load_config_file(config_file, c);
    }
    if (!env.empty()) c.env = env;
    if (!agent.empty()) c.agent = parse_agent_kind(agent);
    if (!smoothing.empty()) c.smoothing = SmoothingSpec::parse(smoothing);
    if (!alpha.empty()) c.alpha = Schedule::parse(alpha);
    if (!init.empty()) c.init = InitSpec::parse(init);
    if (!clock.empty()) c.clock = parse_clock_mode(clock);
    if (!out.empty()) c.output = out;
    if (o_epsilon->count() > 0) c.epsilon = epsilon;
    if (o_gamma->count() > 0) c.gamma = gamma;
    if (o_episodes->count() > 0) c.episodes = episodes;
    if (o_runs->count() > 0) c.runs = runs;
    if (o_seed->count() > 0) c.seed = seed;
    if (o_threads->count() > 0) c.threads = threads;
    if (o_max_steps->count() > 0) c.max_episode_steps = max_episode_steps;
    try {
      c.validate();
    } catch (const ContractViolation& e) {
      throw ParseError(e.what());
    }
    return c;
  }
};

std::string fmt12(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

int usage_error(const std::string& message, const CLI::App& app, std::ostream& err) {
  err << "error: " << message << "\n\n" << app.help();
  return kExitUsageError;
}

}  // namespace

int cli_main(std::span<const std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Tabular Q-learning variants on the maximization-bias benchmark", "smoothq"};
  app.require_subcommand(1);

  ExperimentFlags run_flags;
  CLI::App* run_cmd = app.add_subcommand("run", "Run one agent for many seeds and write a CSV");
  run_flags.attach(*run_cmd, true);

  ExperimentFlags cmp_flags;
  CLI::App* cmp_cmd = app.add_subcommand(
      "compare", "Run all four agents; per-agent CSVs plus one wide CSV at --out");
  cmp_flags.attach(*cmp_cmd, false);

  std::string oracle_env{kMaxBiasEnvName};
  double oracle_gamma = 0.99;
  double oracle_tol = 1e-12;
  std::size_t oracle_iters = 100'000;
  CLI::App* oracle_cmd = app.add_subcommand("oracle", "Print Q* (value iteration) as CSV");
  oracle_cmd->add_option("--env", oracle_env, "Built-in name or environment JSON");
  oracle_cmd->add_option("--gamma", oracle_gamma, "Discount in [0, 1)");
  oracle_cmd->add_option("--tol", oracle_tol, "Sup-norm stopping tolerance");
  oracle_cmd->add_option("--max-iters", oracle_iters, "Sweep limit");

  std::vector<std::string> schedules;
  std::uint64_t horizon = 1'000'000;
  CLI::App* sched_cmd =
      app.add_subcommand("check-schedules", "Finite-horizon step-size (Robbins-Monro) report");
  sched_cmd->add_option("--schedule", schedules, "Schedule(s) to check (repeatable)");
  sched_cmd->add_option("--horizon", horizon, "Number of steps to sum (>= 10000)");

  std::vector<const char*> argv;
  argv.push_back("smoothq");
  for (const auto& a : args) {
    argv.push_back(a.c_str());
  }

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    const CLI::App* sub = nullptr;
    for (const CLI::App* s : app.get_subcommands()) {
      sub = s;
    }
    return usage_error(e.what(), sub ? *sub : app, err);
  }

  try {
    if (run_cmd->parsed()) {
      ExperimentConfig config;
      try {
        if (run_flags.config_file.empty() && (run_flags.agent.empty() || run_flags.out.empty())) {
          throw ParseError("run needs --agent and --out (or a --config providing them)");
        }
        config = run_flags.resolve();
        if (config.output.empty()) {
          throw ParseError("no output path: pass --out");
        }
      } catch (const ParseError& e) {
        return usage_error(e.what(), *run_cmd, err);
      }
      const AggregateSeries series = run_experiment(config);
      emit_csv(series, config.output);
      out << "wrote " << config.output << " and " << metadata_path(config.output).string()
          << " (" << series.runs << " runs x " << series.episodes() << " episodes)\n";
      return kExitOk;
    }

    if (cmp_cmd->parsed()) {
      ExperimentConfig config;
      try {
        config = cmp_flags.resolve();
        if (config.output.empty()) {
          throw ParseError("compare needs --out (or a --config providing it)");
        }
      } catch (const ParseError& e) {
        return usage_error(e.what(), *cmp_cmd, err);
      }
      const auto results = run_comparison(config);
      emit_comparison(results, config.output);
      for (const auto& [kind, series] : results) {
        out << "wrote " << agent_csv_path(config.output, kind).string() << '\n';
      }
      out << "wrote " << config.output << '\n';
      return kExitOk;
    }

    if (oracle_cmd->parsed()) {
      TabularMdp mdp = [&] {
        try {
          return load_environment(oracle_env, oracle_gamma);
        } catch (const std::logic_error& e) {
          throw ParseError(e.what());
        }
      }();
      const OptimalQ opt = value_iteration(mdp, oracle_tol, oracle_iters);
      out << "state,action,q_star\n";
      for (std::size_t s = 0; s < mdp.num_states(); ++s) {
        for (std::size_t a = 0; a < mdp.num_actions(s); ++a) {
          out << mdp.state_label(s) << ',' << mdp.action_label(s, a) << ','
              << fmt12(opt.values.at(s, a)) << '\n';
        }
      }
      err << "# value iteration: " << opt.iterations << " sweeps, residual " << opt.residual
          << "; terminal states have no entries\n";
      return kExitOk;
    }

    if (sched_cmd->parsed()) {
      if (schedules.empty()) {
        schedules = {"hyperbolic:0.1:0.001", "linear:0.1:0.1", "exp:0.02"};
      }
      std::vector<Schedule> parsed;
      try {
        if (horizon < kMinRobbinsMonroHorizon) {
          throw ParseError("--horizon must be >= 10000");
        }
        for (const auto& s : schedules) {
          parsed.push_back(Schedule::parse(s));
        }
      } catch (const ParseError& e) {
        return usage_error(e.what(), *sched_cmd, err);
      }
      out << "schedule,horizon,partial_sum,partial_sum_squares,tail_sum,head_sq_sum,"
             "tail_sq_sum,sum_diverges,squares_converge\n";
      for (const Schedule& s : parsed) {
        const auto rep = check_robbins_monro(s, horizon);
        out << s.to_string() << ',' << rep.horizon << ',' << fmt12(rep.partial_sum) << ','
            << fmt12(rep.partial_sum_squares) << ',' << fmt12(rep.tail_sum) << ','
            << fmt12(rep.head_sq_sum) << ',' << fmt12(rep.tail_sq_sum) << ','
            << (rep.sum_diverges ? "yes" : "no") << ',' << (rep.squares_converge ? "yes" : "no")
            << '\n';
      }
      return kExitOk;
    }
  } catch (const ParseError& e) {
    return usage_error(e.what(), app, err);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntimeError;
  }
  return usage_error("no subcommand", app, err);
}

int cli_main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return cli_main(args, std::cout, std::cerr);
}

}  // namespace smoothq
