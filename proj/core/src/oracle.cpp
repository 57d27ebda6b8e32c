#include "smoothq/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "smoothq/errors.hpp"

namespace smoothq {

namespace {

double row_max(std::span<const double> row) {
  return row.empty() ? 0.0 : *std::max_element(row.begin(), row.end());
}

}  // namespace

double OptimalQ::state_value(std::size_t state) const { return row_max(values.row(state)); }

QTable bellman_optimality(const TabularMdp& mdp, const QTable& q) {
  QTable out = q;
  const double gamma = mdp.discount();
  for (std::size_t s = 0; s < mdp.num_states(); ++s) {
    if (mdp.is_terminal(s)) {
      continue;
    }
    for (std::size_t a = 0; a < mdp.num_actions(s); ++a) {
      double v = 0.0;
      for (const Outcome& o : mdp.outcomes(s, a)) {
        const double bootstrap = mdp.is_terminal(o.next_state) ? 0.0 : row_max(q.row(o.next_state));
        v += o.probability * (o.reward.mean + gamma * bootstrap);
      }
      out.at(s, a) = v;
    }
  }
  return out;
}

double bellman_residual(const TabularMdp& mdp, const QTable& q) {
  const QTable tq = bellman_optimality(mdp, q);
  double r = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    r = std::max(r, std::abs(tq.values()[i] - q.values()[i]));
  }
  return r;
}

OptimalQ value_iteration(const TabularMdp& mdp, double tolerance, std::size_t max_iters) {
  if (!(tolerance > 0.0)) {
    throw ContractViolation("value_iteration: tolerance must be > 0");
  }
  OptimalQ result;
  result.values = QTable(mdp);
  double change = 0.0;
  for (std::size_t it = 1; it <= max_iters; ++it) {
    QTable next = bellman_optimality(mdp, result.values);
    change = 0.0;
    for (std::size_t i = 0; i < next.size(); ++i) {
      change = std::max(change, std::abs(next.values()[i] - result.values.values()[i]));
    }
    result.values = std::move(next);
    result.sweep_changes.push_back(change);
    result.iterations = it;
    result.residual = change;
    if (change <= tolerance) {
      return result;
    }
  }
  throw ConvergenceError("value_iteration: no convergence after " + std::to_string(max_iters) +
                             " sweeps (last change " + std::to_string(change) + ")",
                         change);
}

double q_distance(const QTable& table, const QTable& optimal) {
  if (!table.same_shape(optimal)) {
    throw ContractViolation("q_distance: table shapes differ");
  }
  // Terminal states own no entries, so every stored entry is a learnable pair.
  const auto a = table.values();
  const auto b = optimal.values();
  if (a.empty()) {
    return 0.0;
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sum += std::abs(a[i] - b[i]);
  }
  return sum / static_cast<double>(a.size());
}

double q_distance(const QTable& table, const OptimalQ& optimal) {
  return q_distance(table, optimal.values);
}

}  // namespace smoothq
