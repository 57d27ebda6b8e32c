#include "smoothq/agents.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <string>

#include "smoothq/errors.hpp"

namespace smoothq {

// ---------------------------------------------------------------- QTable

QTable::QTable(std::span<const std::size_t> actions_per_state, double fill) {
  offsets_.reserve(actions_per_state.size() + 1);
  offsets_.push_back(0);
  for (std::size_t n : actions_per_state) {
    offsets_.push_back(offsets_.back() + n);
  }
  values_.assign(offsets_.back(), fill);
}

QTable::QTable(const TabularMdp& mdp, double fill) : QTable(mdp.actions_per_state(), fill) {}

std::size_t QTable::num_actions(std::size_t state) const {
  if (state >= num_states()) {
    throw ContractViolation("QTable: state " + std::to_string(state) + " out of range");
  }
  return offsets_[state + 1] - offsets_[state];
}

std::span<double> QTable::row(std::size_t state) {
  const std::size_t n = num_actions(state);
  return {values_.data() + offsets_[state], n};
}

std::span<const double> QTable::row(std::size_t state) const {
  const std::size_t n = num_actions(state);
  return {values_.data() + offsets_[state], n};
}

double& QTable::at(std::size_t state, std::size_t action) {
  if (action >= num_actions(state)) {
    throw ContractViolation("QTable: action " + std::to_string(action) + " out of range");
  }
  return values_[offsets_[state] + action];
}

double QTable::at(std::size_t state, std::size_t action) const {
  if (action >= num_actions(state)) {
    throw ContractViolation("QTable: action " + std::to_string(action) + " out of range");
  }
  return values_[offsets_[state] + action];
}

std::size_t QTable::index(std::size_t state, std::size_t action) const {
  if (action >= num_actions(state)) {
    throw ContractViolation("QTable: action " + std::to_string(action) + " out of range");
  }
  return offsets_[state] + action;
}

// ---------------------------------------------------------------- InitSpec

InitSpec InitSpec::constant(double c) {
  if (!std::isfinite(c)) {
    throw ContractViolation("constant initial value must be finite");
  }
  return {InitKind::constant, c, c};
}

InitSpec InitSpec::uniform(double lo, double hi) {
  if (!std::isfinite(lo) || !std::isfinite(hi) || lo > hi) {
    throw ContractViolation("uniform init needs finite lo <= hi");
  }
  return {InitKind::uniform, lo, hi};
}

namespace {

double parse_double(std::string_view s, std::string_view whole) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw ParseError("bad number in init spec '" + std::string(whole) + "'");
  }
  return v;
}

// Shortest representation that parses back to the same double.
std::string fmt17(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace

InitSpec InitSpec::parse(std::string_view text) {
  try {
    if (text == "zeros" || text == "zero") {
      return zeros();
    }
    if (text.starts_with("const:")) {
      return constant(parse_double(text.substr(6), text));
    }
    if (text.starts_with("uniform:")) {
      const auto rest = text.substr(8);
      const auto colon = rest.find(':');
      if (colon == std::string_view::npos) {
        throw ParseError("uniform init expects uniform:LO:HI");
      }
      return uniform(parse_double(rest.substr(0, colon), text),
                     parse_double(rest.substr(colon + 1), text));
    }
  } catch (const ContractViolation& e) {
    throw ParseError(e.what());
  }
  throw ParseError("unknown init spec '" + std::string(text) + "'");
}

std::string InitSpec::to_string() const {
  switch (kind) {
    case InitKind::zeros:
      return "zeros";
    case InitKind::constant:
      return "const:" + fmt17(lo);
    case InitKind::uniform:
      return "uniform:" + fmt17(lo) + ":" + fmt17(hi);
  }
  return {};
}

double InitSpec::magnitude() const noexcept { return std::max(std::abs(lo), std::abs(hi)); }

void InitSpec::apply(QTable& table, RngStream& rng) const {
  auto values = table.values();
  switch (kind) {
    case InitKind::zeros:
      std::fill(values.begin(), values.end(), 0.0);
      return;
    case InitKind::constant:
      std::fill(values.begin(), values.end(), lo);
      return;
    case InitKind::uniform:
      for (double& v : values) {
        v = lo + (hi - lo) * rng.uniform();
      }
      return;
  }
}

// ---------------------------------------------------------------- names

std::string_view agent_name(AgentKind kind) noexcept {
  switch (kind) {
    case AgentKind::q:
      return "q";
    case AgentKind::double_q:
      return "double-q";
    case AgentKind::smoothed_q:
      return "smoothed-q";
    case AgentKind::sarsa:
      return "sarsa";
  }
  return "?";
}

AgentKind parse_agent_kind(std::string_view name) {
  for (AgentKind k : kAllAgentKinds) {
    if (agent_name(k) == name) {
      return k;
    }
  }
  throw ParseError("unknown agent '" + std::string(name) +
                   "' (expected q, double-q, smoothed-q or sarsa)");
}

double q_value_bound(double reward_bound, double discount, double init_magnitude) {
  return reward_bound / (1.0 - discount) + init_magnitude;
}

// ---------------------------------------------------------------- Agent

Agent::Agent(AgentKind kind, const TabularMdp& mdp, SmoothingSpec smoothing)
    : kind_(kind),
      discount_(mdp.discount()),
      smoothing_(std::move(smoothing)),
      primary_(mdp) {
  if (kind_ == AgentKind::double_q) {
    secondary_.emplace(mdp);
  }
}

void Agent::initialize(const InitSpec& init, RngStream& rng) {
  init.apply(primary_, rng);
  if (secondary_) {
    init.apply(*secondary_, rng);
  }
}

void Agent::set_table(const QTable& table) {
  if (!table.same_shape(primary_)) {
    throw ContractViolation("set_table: shape mismatch");
  }
  primary_ = table;
  if (secondary_) {
    *secondary_ = table;
  }
}

QTable Agent::estimate() const {
  if (!secondary_) {
    return primary_;
  }
  QTable avg = primary_;
  auto out = avg.values();
  auto b = secondary_->values();
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = 0.5 * (out[i] + b[i]);
  }
  return avg;
}

std::size_t Agent::select_action(std::size_t state, double epsilon, RngStream& rng) const {
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) {
    throw ContractViolation("epsilon must lie in [0, 1]");
  }
  const std::size_t n = primary_.num_actions(state);
  if (n == 0) {
    throw ContractViolation("select_action on a state without actions (terminal)");
  }
  if (rng.uniform() < epsilon) {
    return rng.uniform_index(n);
  }

  const auto a_row = primary_.row(state);
  auto eval = [&](std::size_t a) {
    return secondary_ ? a_row[a] + secondary_->row(state)[a] : a_row[a];
  };
  double best = eval(0);
  std::size_t count = 1;
  for (std::size_t a = 1; a < n; ++a) {
    const double v = eval(a);
    if (v > best) {
      best = v;
      count = 1;
    } else if (v == best) {
      ++count;
    }
  }
  std::size_t pick = count == 1 ? 0 : rng.uniform_index(count);
  for (std::size_t a = 0; a < n; ++a) {
    if (eval(a) == best) {
      if (pick == 0) {
        return a;
      }
      --pick;
    }
  }
  return n - 1;  // unreachable
}

void Agent::require_kind(AgentKind expected, const char* op) const {
  if (kind_ != expected) {
    throw ContractViolation(std::string(op) + " requires a " + std::string(agent_name(expected)) +
                            " agent, got " + std::string(agent_name(kind_)));
  }
}

void Agent::check_transition(const Transition& tr) const {
  if (tr.action >= primary_.num_actions(tr.state)) {
    throw ContractViolation("transition (state, action) out of range");
  }
  const std::size_t next_actions = primary_.num_actions(tr.next_state);
  if (!tr.is_terminal && next_actions == 0) {
    throw ContractViolation("non-terminal transition into a state without actions");
  }
  if (!std::isfinite(tr.reward)) {
    throw NumericError("non-finite reward");
  }
}

void Agent::apply(QTable& table, const Transition& tr, double alpha, double target) {
  if (!(alpha > 0.0 && alpha <= 1.0)) {
    throw ContractViolation("learning rate must lie in (0, 1]");
  }
  double& q = table.at(tr.state, tr.action);
  const double updated = q + alpha * (target - q);
  if (!std::isfinite(updated)) {
    throw NumericError("update produced a non-finite Q-value");
  }
  q = updated;
  ++steps_;
}

double Agent::q_target(const Transition& tr) const {
  check_transition(tr);
  if (tr.is_terminal) {
    return tr.reward;
  }
  const auto next = primary_.row(tr.next_state);
  return tr.reward + discount_ * next[argmax_lowest(next)];
}

double Agent::smoothed_target(const Transition& tr, std::uint64_t t) const {
  check_transition(tr);
  if (tr.is_terminal) {
    return tr.reward;
  }
  return tr.reward + discount_ * smoothed_value(smoothing_, primary_.row(tr.next_state), t);
}

double Agent::sarsa_target(const Transition& tr, std::optional<std::size_t> next_action) const {
  check_transition(tr);
  if (tr.is_terminal) {
    return tr.reward;
  }
  if (!next_action) {
    throw ContractViolation("SARSA needs the next action at a non-terminal next state");
  }
  return tr.reward + discount_ * primary_.at(tr.next_state, *next_action);
}

void Agent::q_update(const Transition& tr, double alpha) {
  require_kind(AgentKind::q, "q_update");
  apply(primary_, tr, alpha, q_target(tr));
}

void Agent::smoothed_q_update(const Transition& tr, double alpha) {
  smoothed_q_update(tr, alpha, steps_ + 1);
}

void Agent::smoothed_q_update(const Transition& tr, double alpha, std::uint64_t t) {
  require_kind(AgentKind::smoothed_q, "smoothed_q_update");
  apply(primary_, tr, alpha, smoothed_target(tr, t));
}

void Agent::double_q_update(const Transition& tr, double alpha, RngStream& rng) {
  double_q_update(tr, alpha, rng.coin());
}

void Agent::double_q_update(const Transition& tr, double alpha, bool update_a) {
  require_kind(AgentKind::double_q, "double_q_update");
  check_transition(tr);
  QTable& learner = update_a ? primary_ : *secondary_;
  const QTable& evaluator = update_a ? *secondary_ : primary_;
  double target = tr.reward;
  if (!tr.is_terminal) {
    const std::size_t best = argmax_lowest(learner.row(tr.next_state));
    target += discount_ * evaluator.at(tr.next_state, best);
  }
  apply(learner, tr, alpha, target);
}

void Agent::sarsa_update(const Transition& tr, std::optional<std::size_t> next_action,
                         double alpha) {
  require_kind(AgentKind::sarsa, "sarsa_update");
  apply(primary_, tr, alpha, sarsa_target(tr, next_action));
}

}  // namespace smoothq
