#include "smoothq/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <string>

#include <nlohmann/json.hpp>

#include "smoothq/errors.hpp"

namespace smoothq {

namespace {

constexpr double kRowSumTolerance = 1e-12;

std::string index_str(std::size_t s, std::size_t a) {
  return "(" + std::to_string(s) + ", " + std::to_string(a) + ")";
}

}  // namespace

RewardDist RewardDist::constant(double value) {
  if (!std::isfinite(value)) {
    throw ContractViolation("constant reward must be finite");
  }
  return RewardDist{RewardKind::constant, value, 0.0};
}

RewardDist RewardDist::gaussian(double mean, double stddev) {
  if (!std::isfinite(mean) || !std::isfinite(stddev) || stddev <= 0.0) {
    throw ContractViolation("gaussian reward needs a finite mean and a finite stddev > 0");
  }
  return RewardDist{RewardKind::gaussian, mean, stddev};
}

double RewardDist::sample(RngStream& rng) const {
  if (kind == RewardKind::constant) {
    return mean;
  }
  return mean + stddev * rng.normal();
}

TabularMdp::TabularMdp(std::vector<StateSpec> states, std::size_t start_state, double discount,
                       std::optional<std::size_t> tracked_action)
    : states_(std::move(states)),
      start_state_(start_state),
      discount_(discount),
      tracked_action_(tracked_action) {
  if (states_.empty()) {
    throw ContractViolation("MDP needs at least one state");
  }
  if (!(discount_ >= 0.0 && discount_ < 1.0)) {
    throw ContractViolation("discount must lie in [0, 1), got " + std::to_string(discount_));
  }
  if (start_state_ >= states_.size()) {
    throw ContractViolation("start state out of range");
  }
  if (states_[start_state_].terminal) {
    throw ContractViolation("start state must not be terminal");
  }
  if (tracked_action_ && *tracked_action_ >= states_[start_state_].actions.size()) {
    throw ContractViolation("tracked action out of range for the start state");
  }

  cumulative_.resize(states_.size());
  for (std::size_t s = 0; s < states_.size(); ++s) {
    StateSpec& st = states_[s];
    if (st.label.empty()) {
      st.label = std::to_string(s);
    }
    if (st.terminal && !st.actions.empty()) {
      throw ContractViolation("terminal state " + st.label + " must not declare actions");
    }
    if (!st.terminal && st.actions.empty()) {
      throw ContractViolation("non-terminal state " + st.label + " has no actions");
    }
    cumulative_[s].resize(st.actions.size());
    for (std::size_t a = 0; a < st.actions.size(); ++a) {
      ActionSpec& act = st.actions[a];
      if (act.label.empty()) {
        act.label = std::to_string(a);
      }
      if (act.outcomes.empty()) {
        throw ContractViolation("empty transition row at " + index_str(s, a));
      }
      std::set<std::size_t> seen;
      double sum = 0.0;
      auto& cum = cumulative_[s][a];
      cum.reserve(act.outcomes.size());
      for (const Outcome& o : act.outcomes) {
        if (o.next_state >= states_.size()) {
          throw ContractViolation("next state out of range at " + index_str(s, a));
        }
        if (!seen.insert(o.next_state).second) {
          throw ContractViolation("duplicate next state in row " + index_str(s, a));
        }
        if (!(o.probability >= 0.0) || !std::isfinite(o.probability)) {
          throw ContractViolation("negative or non-finite probability at " + index_str(s, a));
        }
        const bool constant = o.reward.kind == RewardKind::constant;
        if (!std::isfinite(o.reward.mean) || !std::isfinite(o.reward.stddev) ||
            constant != (o.reward.stddev == 0.0) || o.reward.stddev < 0.0) {
          throw ContractViolation("invalid reward specification at " + index_str(s, a));
        }
        sum += o.probability;
        cum.push_back(sum);
      }
      if (std::abs(sum - 1.0) > kRowSumTolerance) {
        throw ContractViolation("transition row " + index_str(s, a) + " sums to " +
                                std::to_string(sum));
      }
    }
  }
}

void TabularMdp::check_state(std::size_t state) const {
  if (state >= states_.size()) {
    throw ContractViolation("state " + std::to_string(state) + " out of range");
  }
}

void TabularMdp::check_action(std::size_t state, std::size_t action) const {
  check_state(state);
  if (action >= states_[state].actions.size()) {
    throw ContractViolation("action " + std::to_string(action) + " out of range for state " +
                            states_[state].label);
  }
}

std::size_t TabularMdp::num_actions(std::size_t state) const {
  check_state(state);
  return states_[state].actions.size();
}

std::vector<std::size_t> TabularMdp::actions_per_state() const {
  std::vector<std::size_t> out;
  out.reserve(states_.size());
  for (const auto& st : states_) {
    out.push_back(st.actions.size());
  }
  return out;
}

bool TabularMdp::is_terminal(std::size_t state) const {
  check_state(state);
  return states_[state].terminal;
}

std::span<const Outcome> TabularMdp::outcomes(std::size_t state, std::size_t action) const {
  check_action(state, action);
  return states_[state].actions[action].outcomes;
}

const std::string& TabularMdp::state_label(std::size_t state) const {
  check_state(state);
  return states_[state].label;
}

const std::string& TabularMdp::action_label(std::size_t state, std::size_t action) const {
  check_action(state, action);
  return states_[state].actions[action].label;
}

double TabularMdp::expected_reward(std::size_t state, std::size_t action) const {
  double r = 0.0;
  for (const Outcome& o : outcomes(state, action)) {
    r += o.probability * o.reward.mean;
  }
  return r;
}

double TabularMdp::reward_magnitude_bound() const {
  double bound = 0.0;
  for (const auto& st : states_) {
    for (const auto& act : st.actions) {
      for (const auto& o : act.outcomes) {
        bound = std::max(bound, std::abs(o.reward.mean) + 6.0 * o.reward.stddev);
      }
    }
  }
  return bound;
}

TabularMdp TabularMdp::with_discount(double discount) const {
  return TabularMdp(states_, start_state_, discount, tracked_action_);
}

Transition step(const TabularMdp& mdp, std::size_t state, std::size_t action, RngStream& rng) {
  mdp.check_action(state, action);
  if (mdp.states_[state].terminal) {
    throw ContractViolation("cannot step terminal state " + mdp.states_[state].label);
  }
  const auto& outs = mdp.states_[state].actions[action].outcomes;
  const auto& cum = mdp.cumulative_[state][action];

  const double u = rng.uniform();
  // Rounding can leave the last cumulative entry a hair below u; fall back to
  // the last outcome with positive mass.
  std::size_t pick = outs.size();
  for (std::size_t i = 0; i < cum.size(); ++i) {
    if (u < cum[i]) {
      pick = i;
      break;
    }
  }
  if (pick == outs.size()) {
    pick = outs.size() - 1;
    while (pick > 0 && outs[pick].probability == 0.0) {
      --pick;
    }
  }

  const Outcome& o = outs[pick];
  Transition tr;
  tr.state = state;
  tr.action = action;
  tr.next_state = o.next_state;
  tr.reward = o.reward.sample(rng);
  tr.is_terminal = mdp.states_[o.next_state].terminal;
  return tr;
}

TabularMdp make_max_bias_env(double discount) {
  using namespace max_bias;
  std::vector<StateSpec> states(4);

  states[kStateA].label = "A";
  states[kStateA].actions.resize(2);
  states[kStateA].actions[kLeft] = {"Left", {{kStateB, 1.0, RewardDist::constant(0.0)}}};
  states[kStateA].actions[kRight] = {"Right", {{kStateC, 1.0, RewardDist::constant(0.0)}}};

  states[kStateB].label = "B";
  for (std::size_t a = 0; a < kActionsFromB; ++a) {
    states[kStateB].actions.push_back(
        {"b" + std::to_string(a),
         {{kStateD, 1.0, RewardDist::gaussian(kRewardMeanB, kRewardStdB)}}});
  }

  states[kStateC] = {"C", true, {}};
  states[kStateD] = {"D", true, {}};

  return TabularMdp(std::move(states), kStateA, discount, kLeft);
}

namespace {

RewardDist reward_from_json(const nlohmann::json& j) {
  if (j.is_number()) {
    return RewardDist::constant(j.get<double>());
  }
  const std::string kind = j.value("kind", std::string("constant"));
  const double mean = j.value("mean", 0.0);
  const double sd = j.value("std", 0.0);
  if (kind == "constant") {
    if (sd != 0.0) {
      throw ParseError("constant reward must not carry a std");
    }
    return RewardDist::constant(mean);
  }
  if (kind == "gaussian") {
    return RewardDist::gaussian(mean, sd);
  }
  throw ParseError("unknown reward kind '" + kind + "'");
}

nlohmann::json reward_to_json(const RewardDist& r) {
  if (r.kind == RewardKind::constant) {
    return {{"kind", "constant"}, {"mean", r.mean}};
  }
  return {{"kind", "gaussian"}, {"mean", r.mean}, {"std", r.stddev}};
}

}  // namespace

TabularMdp mdp_from_json(const nlohmann::json& doc, std::optional<double> discount_override) {
  try {
    std::vector<StateSpec> states;
    for (const auto& js : doc.at("states")) {
      StateSpec st;
      st.label = js.value("label", std::string{});
      st.terminal = js.value("terminal", false);
      if (js.contains("actions")) {
        for (const auto& ja : js.at("actions")) {
          ActionSpec act;
          act.label = ja.value("label", std::string{});
          for (const auto& jt : ja.at("transitions")) {
            Outcome o;
            o.next_state = jt.at("next").get<std::size_t>();
            o.probability = jt.value("prob", 1.0);
            o.reward = jt.contains("reward") ? reward_from_json(jt.at("reward"))
                                             : RewardDist::constant(0.0);
            act.outcomes.push_back(o);
          }
          st.actions.push_back(std::move(act));
        }
      }
      states.push_back(std::move(st));
    }
    const auto start = doc.value("start_state", std::size_t{0});
    const double discount = discount_override ? *discount_override : doc.value("discount", 0.99);
    std::optional<std::size_t> tracked;
    if (doc.contains("tracked_action")) {
      tracked = doc.at("tracked_action").get<std::size_t>();
    }
    return TabularMdp(std::move(states), start, discount, tracked);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("environment JSON: ") + e.what());
  } catch (const ContractViolation& e) {
    throw ParseError(std::string("environment JSON: ") + e.what());
  }
}

nlohmann::json mdp_to_json(const TabularMdp& mdp) {
  nlohmann::json doc;
  doc["start_state"] = mdp.start_state();
  doc["discount"] = mdp.discount();
  if (mdp.tracked_action()) {
    doc["tracked_action"] = *mdp.tracked_action();
  }
  auto& jstates = doc["states"] = nlohmann::json::array();
  for (const auto& st : mdp.states()) {
    nlohmann::json js{{"label", st.label}, {"terminal", st.terminal}};
    if (!st.terminal) {
      auto& jactions = js["actions"] = nlohmann::json::array();
      for (const auto& act : st.actions) {
        nlohmann::json jt = nlohmann::json::array();
        for (const auto& o : act.outcomes) {
          jt.push_back({{"next", o.next_state},
                        {"prob", o.probability},
                        {"reward", reward_to_json(o.reward)}});
        }
        jactions.push_back({{"label", act.label}, {"transitions", std::move(jt)}});
      }
    }
    jstates.push_back(std::move(js));
  }
  return doc;
}

TabularMdp load_environment(std::string_view name_or_path, double discount) {
  if (name_or_path == kMaxBiasEnvName) {
    return make_max_bias_env(discount);
  }
  const std::filesystem::path path{std::string(name_or_path)};
  std::ifstream in(path);
  if (!in) {
    throw ParseError("unknown environment '" + std::string(name_or_path) +
                     "' (not a built-in name and not a readable file)");
  }
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  return mdp_from_json(doc, discount);
}

}  // namespace smoothq
