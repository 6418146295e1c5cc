#ifndef CMG_LAGRANGIAN_HPP
#define CMG_LAGRANGIAN_HPP

#include <span>
#include <vector>

#include "cmg/game.hpp"

namespace cmg {

// Non-negative constraint multipliers together with the dual step size.
struct Multipliers {
  std::vector<double> values;
  double step_size = 0.0;
};

// One projected dual-descent update from an epoch of sampled costs:
//
//   lambda_j <- max(0, lambda_j - step_size * (mean_t c_j(t) - b_j))
//
// epoch_costs is row-major over steps: entry t*m + j is constraint j's cost
// at step t.  The mean over the epoch estimates the constraint value, so a
// satisfied constraint (mean >= b_j) pushes the multiplier down and a violated
// one pushes it up.
Multipliers dual_descent_step(const Multipliers& multipliers,
                              std::span<const double> epoch_costs,
                              std::span<const double> thresholds);

// Unconstrained game obtained by folding the constraints into every agent's
// reward at fixed multipliers:
//
//   r'_i(s,a) = r_i(s,a) + state_bonus(s) + sum_j lambda_j * (c_j(s,a) - b_j)
//
// By linearity of long-run averages, a policy's value in this game equals its
// base value plus lambda' (U - b) (plus the stationary average of the bonus),
// so per-step shaping and value-level shaping agree exactly.  state_bonus is
// an optional per-state, agent-independent adjustment (e.g. a control cost).
struct LagrangianGame {
  const ConstrainedMarkovGame* base = nullptr;
  std::vector<double> lambda;
  std::vector<double> state_bonus;  // empty or one entry per state
  std::vector<double> augmented;    // same layout as base->reward

  double augmented_at(int agent, int state, int ja) const {
    return augmented[(static_cast<std::size_t>(agent) * base->num_states + state) *
                         base->num_joint_actions() +
                     ja];
  }
};

LagrangianGame build_lagrangian_game(const ConstrainedMarkovGame& game,
                                     std::span<const double> lambda,
                                     std::span<const double> state_bonus = {});

}  // namespace cmg

#endif  // CMG_LAGRANGIAN_HPP
