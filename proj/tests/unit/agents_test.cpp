#include "smoothq/agents.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <random>

#include <gtest/gtest.h>

#include "smoothq/errors.hpp"
#include "support/oracles.hpp"

namespace smoothq {
namespace {

using namespace max_bias;

/// State 0 has one action into state 1; state 1 has `next_actions` actions
/// into terminal state 2.
TabularMdp chain(std::size_t next_actions, double gamma = 0.99) {
  std::vector<StateSpec> states(3);
  states[0].actions.push_back({"go", {{1, 1.0, RewardDist::constant(0.0)}}});
  for (std::size_t a = 0; a < next_actions; ++a) {
    states[1].actions.push_back({"", {{2, 1.0, RewardDist::constant(0.0)}}});
  }
  states[2].terminal = true;
  return TabularMdp(states, 0, gamma);
}

void set_row(QTable& t, std::size_t s, std::vector<double> values) {
  auto row = t.row(s);
  ASSERT_EQ(row.size(), values.size());
  std::copy(values.begin(), values.end(), row.begin());
}

Transition into(std::size_t next, double reward, bool terminal = false) {
  return Transition{0, 0, reward, next, terminal};
}

// ---------------------------------------------------------------- selection

TEST(SelectAction, FullExplorationIsUniform) {
  const auto mdp = make_max_bias_env();
  Agent agent(AgentKind::q, mdp);
  QTable t(mdp);
  set_row(t, kStateB, {5, 0, 0, 0, 0, 0, 0, 0});
  agent.set_table(t);
  RngStream rng(10);
  const int n = 100000;
  std::vector<int> counts(8, 0);
  for (int i = 0; i < n; ++i) {
    ++counts[agent.select_action(kStateB, 1.0, rng)];
  }
  const double se = testing::binomial_se(1.0 / 8, n);
  for (int c : counts) {
    EXPECT_NEAR(c / double(n), 1.0 / 8, 3 * se);
  }
}

TEST(SelectAction, GreedyPicksStrictArgmax) {
  const auto mdp = chain(3);
  Agent agent(AgentKind::q, mdp);
  QTable t(mdp);
  set_row(t, 1, {0, 3, 1});
  agent.set_table(t);
  RngStream rng(11);
  for (int i = 0; i < 1000; ++i) {
    ASSERT_EQ(agent.select_action(1, 0.0, rng), 1u);
  }
}

TEST(SelectAction, TiesSplitEvenly) {
  const auto mdp = make_max_bias_env();
  Agent agent(AgentKind::q, mdp);
  RngStream rng(12);
  const int n = 100000;
  int left = 0;
  for (int i = 0; i < n; ++i) {
    left += agent.select_action(kStateA, 0.1, rng) == kLeft ? 1 : 0;
  }
  EXPECT_NEAR(left / double(n), 0.5, 0.01);
}

TEST(SelectAction, DoubleQEvaluatesSumOfTables) {
  const auto mdp = chain(2);
  Agent agent(AgentKind::double_q, mdp);
  // A alone prefers action 0, B alone prefers 1, but A + B prefers 1.
  agent.set_table(QTable(mdp));
  for (int i = 0; i < 3; ++i) {
    agent.double_q_update({1, 0, 1.0, 2, true}, 1.0, true);   // Q_A(1,0) = 1
    agent.double_q_update({1, 1, 3.0, 2, true}, 1.0, false);  // Q_B(1,1) = 3
  }
  RngStream rng(13);
  for (int i = 0; i < 100; ++i) {
    ASSERT_EQ(agent.select_action(1, 0.0, rng), 1u);
  }
}

TEST(SelectAction, Errors) {
  const auto mdp = make_max_bias_env();
  Agent agent(AgentKind::q, mdp);
  RngStream rng(14);
  EXPECT_THROW(agent.select_action(kStateC, 0.1, rng), ContractViolation);
  EXPECT_THROW(agent.select_action(kStateA, 1.5, rng), ContractViolation);
  EXPECT_THROW(agent.select_action(9, 0.1, rng), ContractViolation);
}

// ---------------------------------------------------------------- q-learning

TEST(QUpdate, ZeroBootstrap) {
  const auto mdp = chain(2);
  Agent agent(AgentKind::q, mdp);
  agent.q_update(into(1, 1.0), 0.1);
  EXPECT_NEAR(agent.table().at(0, 0), 0.1, 1e-15);
  EXPECT_EQ(agent.steps(), 1u);
}

TEST(QUpdate, HandArithmetic) {
  const auto mdp = chain(2);
  Agent agent(AgentKind::q, mdp);
  QTable t(mdp);
  t.at(0, 0) = 0.5;
  set_row(t, 1, {1.0, 0.25});
  agent.set_table(t);
  agent.q_update(into(1, 0.0), 0.1);
  EXPECT_NEAR(agent.table().at(0, 0), 0.549, 1e-15);
}

TEST(QUpdate, TerminalTargetIsReward) {
  const auto mdp = chain(2);
  Agent agent(AgentKind::q, mdp);
  QTable t(mdp);
  t.at(1, 0) = 0.5;
  agent.set_table(t);
  agent.q_update({1, 0, 0.0, 2, true}, 0.1);
  EXPECT_NEAR(agent.table().at(1, 0), 0.45, 1e-15);
}

TEST(QUpdate, Errors) {
  const auto mdp = chain(2);
  Agent agent(AgentKind::q, mdp);
  EXPECT_THROW(agent.q_update(into(1, 0.0), 0.0), ContractViolation);
  EXPECT_THROW(agent.q_update(into(1, 0.0), 1.5), ContractViolation);
  EXPECT_THROW(agent.q_update(into(1, std::nan("")), 0.5), NumericError);
  EXPECT_THROW(agent.q_update({0, 3, 0.0, 1, false}, 0.5), ContractViolation);
  // non-terminal transition into the terminal state is inconsistent
  EXPECT_THROW(agent.q_update({1, 0, 0.0, 2, false}, 0.5), ContractViolation);
  EXPECT_THROW(agent.smoothed_q_update(into(1, 0.0), 0.5), ContractViolation);
  EXPECT_THROW(agent.sarsa_update(into(1, 0.0), 0, 0.5), ContractViolation);
  RngStream rng(1);
  EXPECT_THROW(agent.double_q_update(into(1, 0.0), 0.5, rng), ContractViolation);
  EXPECT_EQ(agent.steps(), 0u);
}

// ---------------------------------------------------------------- smoothed

TEST(SmoothedQUpdate, HardMaxIsBitEqualToQLearning) {
  const auto mdp = chain(5);
  std::mt19937_64 gen(20);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int trial = 0; trial < 200; ++trial) {
    QTable t(mdp);
    for (double& v : t.values()) {
      v = u(gen);
    }
    Agent q(AgentKind::q, mdp);
    Agent sq(AgentKind::smoothed_q, mdp, SmoothingSpec::hard_max());
    q.set_table(t);
    sq.set_table(t);
    const Transition tr = into(1, u(gen));
    const double alpha = 0.05 + 0.9 * std::abs(u(gen)) / 3.0;
    q.q_update(tr, alpha);
    sq.smoothed_q_update(tr, alpha);
    ASSERT_EQ(std::memcmp(q.table().values().data(), sq.table().values().data(),
                          sizeof(double) * t.size()),
              0);
  }
}

TEST(SmoothedQUpdate, ClippedExample) {
  const auto mdp = chain(3);
  Agent agent(AgentKind::smoothed_q, mdp, SmoothingSpec::clipped_max(Schedule::constant(0.3)));
  QTable t(mdp);
  set_row(t, 1, {0.2, 0.9, 0.1});
  agent.set_table(t);
  agent.smoothed_q_update(into(1, 0.0), 0.1);
  // 0.1 * 0.99 * (0.15*0.2 + 0.7*0.9 + 0.15*0.1)
  EXPECT_NEAR(agent.table().at(0, 0), 0.0668250, 1e-15);
}

TEST(SmoothedQUpdate, UsesStepCounterAsClock) {
  const auto mdp = chain(3);
  const auto spec = SmoothingSpec::clipped_max(Schedule::exponential_decay(0.02));
  Agent agent(AgentKind::smoothed_q, mdp, spec);
  QTable t(mdp);
  set_row(t, 1, {0.2, 0.9, 0.1});
  agent.set_table(t);
  for (int i = 0; i < 5; ++i) {
    agent.smoothed_q_update(into(1, 0.0), 0.1);
  }
  Agent implicit = agent, explicit_next = agent, explicit_first = agent;
  implicit.smoothed_q_update(into(1, 0.0), 0.1);
  explicit_next.smoothed_q_update(into(1, 0.0), 0.1, 6);
  explicit_first.smoothed_q_update(into(1, 0.0), 0.1, 1);
  EXPECT_EQ(implicit.table(), explicit_next.table());
  EXPECT_NE(implicit.table(), explicit_first.table());
  EXPECT_EQ(implicit.steps(), 6u);
}

TEST(SmoothedQUpdate, TargetNeverExceedsQTarget) {
  const auto mdp = chain(6);
  std::mt19937_64 gen(21);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 20000; ++trial) {
    QTable t(mdp);
    for (double& v : t.values()) {
      v = u(gen);
    }
    const SmoothingSpec spec = trial % 2 == 0
                                   ? SmoothingSpec::clipped_max(Schedule::constant(unit(gen)))
                                   : SmoothingSpec::softmax(Schedule::constant(10 * unit(gen)));
    Agent sq(AgentKind::smoothed_q, mdp, spec);
    Agent q(AgentKind::q, mdp);
    sq.set_table(t);
    q.set_table(t);
    const Transition tr = into(1, u(gen));
    ASSERT_LE(sq.smoothed_target(tr, 1 + trial), q.q_target(tr) + 1e-12);
  }
}

TEST(SmoothedQUpdate, EmpiricalMeanTargetMatchesExpectation) {
  const TabularMdp mdp = load_environment(SMOOTHQ_TEST_DATA_DIR "/three_way.json", 0.9);
  const double beta = 2.0;
  Agent agent(AgentKind::smoothed_q, mdp, SmoothingSpec::softmax(Schedule::constant(beta)));
  RngStream init(30);
  agent.initialize(InitSpec::uniform(-2.0, 2.0), init);

  const long double expected = testing::expected_target(mdp, 0, 0, [&](std::size_t next) {
    const auto row = agent.table().row(next);
    const auto p = testing::softmax_ld(row, beta);
    long double v = 0.0L;
    for (std::size_t i = 0; i < row.size(); ++i) {
      v += p[i] * row[i];
    }
    return v;
  });

  RngStream rng(31);
  const int n = 100000;
  double sum = 0.0, sum2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double y = agent.smoothed_target(step(mdp, 0, 0, rng), 1);
    sum += y;
    sum2 += y * y;
  }
  const double mean = sum / n;
  const double se = std::sqrt((sum2 / n - mean * mean) / n);
  EXPECT_NEAR(mean, static_cast<double>(expected), 3 * se);
}

// ---------------------------------------------------------------- double-q

TEST(DoubleQUpdate, IdenticalTablesReduceToQLearning) {
  const auto mdp = chain(4);
  QTable t(mdp);
  set_row(t, 1, {0.3, -0.2, 0.8, 0.1});
  t.at(0, 0) = 0.25;
  for (bool update_a : {true, false}) {
    Agent dq(AgentKind::double_q, mdp);
    Agent q(AgentKind::q, mdp);
    dq.set_table(t);
    q.set_table(t);
    dq.double_q_update(into(1, 0.7), 0.3, update_a);
    q.q_update(into(1, 0.7), 0.3);
    const QTable& learner = update_a ? dq.table() : *dq.secondary();
    const QTable& other = update_a ? *dq.secondary() : dq.table();
    EXPECT_EQ(learner.at(0, 0), q.table().at(0, 0));
    EXPECT_EQ(other, t);
  }
}

TEST(DoubleQUpdate, CrossEvaluation) {
  const auto mdp = chain(2);
  Agent agent(AgentKind::double_q, mdp);
  // Q_A(s',.) = [1, 0], Q_B(s',.) = [0, 1]
  agent.double_q_update({1, 0, 1.0, 2, true}, 1.0, true);
  agent.double_q_update({1, 1, 1.0, 2, true}, 1.0, false);
  ASSERT_EQ(agent.table().at(1, 0), 1.0);
  ASSERT_EQ(agent.secondary()->at(1, 1), 1.0);
  agent.double_q_update(into(1, 0.0), 1.0, true);
  EXPECT_EQ(agent.table().at(0, 0), 0.0);
  // Mirror branch: B picks its argmax (1) and is evaluated by A (0).
  agent.double_q_update(into(1, 0.0), 1.0, false);
  EXPECT_EQ(agent.secondary()->at(0, 0), 0.0);
}

TEST(DoubleQUpdate, TerminalHasNoBootstrap) {
  const auto mdp = chain(2);
  for (bool update_a : {true, false}) {
    Agent agent(AgentKind::double_q, mdp);
    QTable t(mdp, 0.5);
    agent.set_table(t);
    agent.double_q_update({1, 1, 0.2, 2, true}, 0.5, update_a);
    const QTable& learner = update_a ? agent.table() : *agent.secondary();
    EXPECT_NEAR(learner.at(1, 1), 0.5 + 0.5 * (0.2 - 0.5), 1e-15);
  }
}

TEST(DoubleQUpdate, CoinIsFair) {
  const auto mdp = chain(2);
  Agent agent(AgentKind::double_q, mdp);
  RngStream rng(40);
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    agent.double_q_update({1, 0, 1.0, 2, true}, 1.0 / (1 + i), rng);
  }
  // Each table moves only on its own branch; count via a fresh pass.
  RngStream replay(40);
  int heads = 0;
  for (int i = 0; i < n; ++i) {
    heads += replay.coin() ? 1 : 0;
  }
  EXPECT_NEAR(heads / double(n), 0.5, 3 * testing::binomial_se(0.5, n));
  EXPECT_EQ(agent.steps(), static_cast<std::uint64_t>(n));
}

TEST(Agent, EstimateAveragesDoubleTables) {
  const auto mdp = chain(2);
  Agent agent(AgentKind::double_q, mdp);
  agent.double_q_update({1, 0, 1.0, 2, true}, 1.0, true);
  agent.double_q_update({1, 0, 3.0, 2, true}, 1.0, false);
  EXPECT_EQ(agent.estimate().at(1, 0), 2.0);
  Agent q(AgentKind::q, mdp);
  EXPECT_EQ(q.estimate(), q.table());
  EXPECT_FALSE(q.secondary().has_value());
}

// ---------------------------------------------------------------- sarsa

TEST(SarsaUpdate, HandArithmetic) {
  const auto mdp = chain(2);
  Agent agent(AgentKind::sarsa, mdp);
  QTable t(mdp);
  t.at(1, 1) = 0.5;
  agent.set_table(t);
  agent.sarsa_update(into(1, 1.0), 1, 0.1);
  EXPECT_NEAR(agent.table().at(0, 0), 0.1495, 1e-15);
}

TEST(SarsaUpdate, GreedyNextActionMatchesQLearning) {
  const auto mdp = chain(3);
  QTable t(mdp);
  set_row(t, 1, {0.1, 0.7, -0.3});
  Agent s(AgentKind::sarsa, mdp);
  Agent q(AgentKind::q, mdp);
  s.set_table(t);
  q.set_table(t);
  RngStream rng(50);
  const auto greedy = s.select_action(1, 0.0, rng);
  s.sarsa_update(into(1, 0.4), greedy, 0.2);
  q.q_update(into(1, 0.4), 0.2);
  EXPECT_EQ(s.table(), q.table());
}

TEST(SarsaUpdate, TerminalAndMissingNextAction) {
  const auto mdp = chain(2);
  Agent agent(AgentKind::sarsa, mdp);
  QTable t(mdp);
  t.at(1, 0) = 0.5;
  agent.set_table(t);
  agent.sarsa_update({1, 0, 0.0, 2, true}, std::nullopt, 0.1);
  EXPECT_NEAR(agent.table().at(1, 0), 0.45, 1e-15);
  EXPECT_THROW(agent.sarsa_update(into(1, 0.0), std::nullopt, 0.1), ContractViolation);
}

// ---------------------------------------------------------------- invariants

TabularMdp dense_mdp(std::size_t n_states, std::size_t n_actions, double gamma) {
  std::vector<StateSpec> states(n_states + 1);
  for (std::size_t s = 0; s < n_states; ++s) {
    for (std::size_t a = 0; a < n_actions; ++a) {
      states[s].actions.push_back({"", {{n_states, 1.0, RewardDist::constant(0.0)}}});
    }
  }
  states[n_states].terminal = true;
  return TabularMdp(states, 0, gamma);
}

struct RandomUpdater {
  const TabularMdp& mdp;
  std::mt19937_64 gen;
  double reward_bound;

  Transition transition() {
    const std::size_t n = mdp.num_states() - 1;
    std::uniform_int_distribution<std::size_t> s(0, n - 1), a(0, mdp.num_actions(0) - 1),
        next(0, n);
    std::uniform_real_distribution<double> r(-reward_bound, reward_bound);
    const std::size_t ns = next(gen);
    return Transition{s(gen), a(gen), r(gen), ns, mdp.is_terminal(ns)};
  }

  void update(Agent& agent, RngStream& rng) {
    const Transition tr = transition();
    std::uniform_real_distribution<double> alpha(1e-3, 1.0);
    const double lr = alpha(gen);
    switch (agent.kind()) {
      case AgentKind::q:
        agent.q_update(tr, lr);
        break;
      case AgentKind::smoothed_q:
        agent.smoothed_q_update(tr, lr);
        break;
      case AgentKind::double_q:
        agent.double_q_update(tr, lr, rng);
        break;
      case AgentKind::sarsa: {
        std::optional<std::size_t> next;
        if (!tr.is_terminal) {
          next = agent.select_action(tr.next_state, 0.3, rng);
        }
        agent.sarsa_update(tr, next, lr);
        break;
      }
    }
  }
};

TEST(AgentInvariants, ExactlyOneEntryChangesPerUpdate) {
  const auto mdp = dense_mdp(4, 3, 0.9);
  for (AgentKind kind : kAllAgentKinds) {
    Agent agent(kind, mdp, SmoothingSpec::softmax(Schedule::linear(0.1, 0.1)));
    RngStream rng(60);
    agent.initialize(InitSpec::uniform(-1, 1), rng);
    RandomUpdater up{mdp, std::mt19937_64(61), 2.0};
    for (int i = 0; i < 2000; ++i) {
      const QTable a_before = agent.table();
      const std::optional<QTable> b_before = agent.secondary();
      up.update(agent, rng);
      std::size_t changed = 0;
      for (std::size_t k = 0; k < a_before.size(); ++k) {
        changed += a_before.values()[k] != agent.table().values()[k];
        if (b_before) {
          changed += b_before->values()[k] != agent.secondary()->values()[k];
        }
      }
      ASSERT_LE(changed, 1u) << agent_name(kind);
    }
    EXPECT_EQ(agent.steps(), 2000u);
  }
}

TEST(AgentInvariants, TablesStayBounded) {
  const double gamma = 0.9;
  const double reward_bound = 1.0;
  const auto mdp = dense_mdp(5, 4, gamma);
  const InitSpec init = InitSpec::uniform(-2.0, 2.0);
  const double bound = q_value_bound(reward_bound, gamma, init.magnitude()) + 1e-9;
  for (AgentKind kind : kAllAgentKinds) {
    Agent agent(kind, mdp, SmoothingSpec::clipped_max(Schedule::exponential_decay(1e-5)));
    RngStream rng(70);
    agent.initialize(init, rng);
    RandomUpdater up{mdp, std::mt19937_64(71), reward_bound};
    for (int i = 0; i < 1'000'000; ++i) {
      up.update(agent, rng);
    }
    for (double v : agent.table().values()) {
      ASSERT_LE(std::abs(v), bound) << agent_name(kind);
    }
    if (agent.secondary()) {
      for (double v : agent.secondary()->values()) {
        ASSERT_LE(std::abs(v), bound);
      }
    }
  }
}

TEST(AgentInvariants, ReplayReductionHardMax) {
  const auto mdp = dense_mdp(6, 3, 0.95);
  RandomUpdater up{mdp, std::mt19937_64(80), 1.0};
  std::vector<Transition> log;
  for (int i = 0; i < 10000; ++i) {
    log.push_back(up.transition());
  }
  Agent q(AgentKind::q, mdp);
  Agent sq(AgentKind::smoothed_q, mdp, SmoothingSpec::hard_max());
  for (std::size_t i = 0; i < log.size(); ++i) {
    const double alpha = 0.1 / (1 + 0.001 * static_cast<double>(i + 1));
    q.q_update(log[i], alpha);
    sq.smoothed_q_update(log[i], alpha);
  }
  ASSERT_EQ(q.table().size(), sq.table().size());
  EXPECT_EQ(std::memcmp(q.table().values().data(), sq.table().values().data(),
                        sizeof(double) * q.table().size()),
            0);
}

TEST(InitSpec, ParseApplyFormat) {
  EXPECT_EQ(InitSpec::parse("zeros"), InitSpec::zeros());
  EXPECT_EQ(InitSpec::parse("const:1.5"), InitSpec::constant(1.5));
  EXPECT_EQ(InitSpec::parse("uniform:-1:2"), InitSpec::uniform(-1, 2));
  EXPECT_EQ(InitSpec::parse(InitSpec::uniform(-1, 2).to_string()), InitSpec::uniform(-1, 2));
  EXPECT_THROW(InitSpec::parse("uniform:2:-1"), ParseError);
  EXPECT_THROW(InitSpec::parse("gaussian"), ParseError);
  EXPECT_EQ(InitSpec::uniform(-3, 2).magnitude(), 3.0);

  const auto mdp = make_max_bias_env();
  QTable t(mdp);
  RngStream rng(90);
  InitSpec::uniform(-1, 1).apply(t, rng);
  for (double v : t.values()) {
    EXPECT_GE(v, -1.0);
    EXPECT_LT(v, 1.0);
  }
  InitSpec::constant(0.25).apply(t, rng);
  for (double v : t.values()) {
    EXPECT_EQ(v, 0.25);
  }
}

TEST(AgentKindNames, RoundTrip) {
  for (AgentKind k : kAllAgentKinds) {
    EXPECT_EQ(parse_agent_kind(agent_name(k)), k);
  }
  EXPECT_THROW(parse_agent_kind("expected-sarsa"), ParseError);
}

}  // namespace
}  // namespace smoothq
