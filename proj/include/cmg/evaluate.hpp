#ifndef CMG_EVALUATE_HPP
#define CMG_EVALUATE_HPP

#include <Eigen/Dense>
#include <span>
#include <stdexcept>
#include <vector>

#include "cmg/game.hpp"
#include "cmg/policy.hpp"

namespace cmg {

// Raised when a chain has more than one recurrent class, so no single
// stationary distribution describes long-run behaviour.  Names one state from
// each of two distinct recurrent classes.
struct MultichainError : std::runtime_error {
  MultichainError(int a, int b)
      : std::runtime_error("chain has multiple recurrent classes; states " +
                           std::to_string(a) + " and " + std::to_string(b) +
                           " belong to different closed classes"),
        state_a(a),
        state_b(b) {}
  int state_a;
  int state_b;
};

// Row-stochastic state transition matrix induced by playing a product policy:
// rows marginalize the kernel over the policy's joint-action distribution.
Eigen::MatrixXd induced_chain(const ConstrainedMarkovGame& game, const ProductPolicy& policy);

// Stationary distribution of a unichain row-stochastic matrix, via a direct
// linear solve on the damped matrix (1 - damping) * chain + damping * uniform.
// Damping keeps the computation well-posed for periodic chains at O(damping)
// distortion; transient states receive mass of the same order.  Throws
// MultichainError when the chain's support graph has two or more closed
// communicating classes, and std::invalid_argument for malformed inputs.
Eigen::VectorXd stationary_distribution(const Eigen::MatrixXd& chain, double damping = 1e-8);

// Long-run averages of a stationary product policy, all derived from the
// stationary distribution and therefore independent of the initial state.
struct StationaryEvaluation {
  Eigen::VectorXd state_distribution;     // over states
  std::vector<double> occupation;         // over (state, joint action), flat s*JA + a
  std::vector<double> gains;              // per-agent average reward
  std::vector<double> constraint_values;  // per-constraint average cost
};

// state_bonus, when non-empty, is a per-state reward adjustment applied
// identically to every agent (its stationary average is added to each gain);
// used for control-cost shaping that depends on the state only.
StationaryEvaluation evaluate_stationary(const ConstrainedMarkovGame& game,
                                         const ProductPolicy& policy,
                                         std::span<const double> state_bonus = {},
                                         double damping = 1e-8);

// Long-run averages of the trajectory started at initial_state: the induced
// chain is restricted to the states reachable from initial_state (a closed
// set) and the stationary solve runs on that restriction.  Equals
// evaluate_stationary whenever the full chain is unichain, but stays defined
// when unreachable parts of the state space hold further recurrent classes —
// the situation in the grid world, where the two agents' cell parities move
// in lockstep and split the joint space into two closed halves.  Throws
// MultichainError when the restriction itself contains two recurrent classes
// (the trajectory average is then genuinely random).  state_distribution
// comes back full-sized with zero mass outside the reachable set.
StationaryEvaluation evaluate_from(const ConstrainedMarkovGame& game,
                                   const ProductPolicy& policy, int initial_state,
                                   std::span<const double> state_bonus = {},
                                   double damping = 1e-8);

}  // namespace cmg

#endif  // CMG_EVALUATE_HPP
