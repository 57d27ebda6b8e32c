#pragma once

#include <cstddef>
#include <vector>

#include "smoothq/agents.hpp"
#include "smoothq/mdp.hpp"

namespace smoothq {

/// Q* of an MDP computed from expected rewards.
struct OptimalQ {
  QTable values;
  /// Sup-norm change of the last sweep.
  double residual = 0.0;
  std::size_t iterations = 0;
  /// Sup-norm change of every sweep, in order.
  std::vector<double> sweep_changes;

  /// max_a Q*(s, a); 0 for terminal states.
  double state_value(std::size_t state) const;
};

/// One application of the Bellman optimality operator with expected rewards:
/// (T Q)(s,a) = Σ_{s'} p(s'|s,a)·[r̄(s'|s,a) + γ·max_{a'} Q(s',a')], where the
/// bootstrap is 0 for terminal s'.
QTable bellman_optimality(const TabularMdp& mdp, const QTable& q);

/// sup |T Q − Q|.
double bellman_residual(const TabularMdp& mdp, const QTable& q);

/// Jacobi value iteration from Q ≡ 0 until the sup-norm change of a sweep is
/// <= tolerance. Throws ConvergenceError (carrying the last change) when
/// `max_iters` sweeps are not enough.
OptimalQ value_iteration(const TabularMdp& mdp, double tolerance = 1e-12,
                         std::size_t max_iters = 100'000);

/// Mean |Q(s,a) − Q*(s,a)| over all non-terminal (state, action) pairs.
double q_distance(const QTable& table, const OptimalQ& optimal);
double q_distance(const QTable& table, const QTable& optimal);

}  // namespace smoothq
