#include "cmg/lagrangian.hpp"

#include <cmath>
#include <stdexcept>

namespace cmg {

Multipliers dual_descent_step(const Multipliers& multipliers,
                              std::span<const double> epoch_costs,
                              std::span<const double> thresholds) {
  const std::size_t m = multipliers.values.size();
  if (thresholds.size() != m)
    throw std::invalid_argument("dual_descent_step: threshold count does not match multipliers");
  if (!(multipliers.step_size > 0.0))
    throw std::invalid_argument("dual_descent_step: step size must be positive");
  if (m == 0) return multipliers;
  if (epoch_costs.empty() || epoch_costs.size() % m != 0)
    throw std::invalid_argument("dual_descent_step: epoch costs must be a non-empty multiple of"
                                " the constraint count");
  for (double v : multipliers.values)
    if (!(v >= 0.0))
      throw std::invalid_argument("dual_descent_step: multipliers must be non-negative");

  const std::size_t steps = epoch_costs.size() / m;
  Multipliers next = multipliers;
  for (std::size_t j = 0; j < m; ++j) {
    double sum = 0.0;
    for (std::size_t t = 0; t < steps; ++t) sum += epoch_costs[t * m + j];
    const double mean_gap = sum / static_cast<double>(steps) - thresholds[j];
    next.values[j] = std::max(0.0, multipliers.values[j] - multipliers.step_size * mean_gap);
  }
  return next;
}

LagrangianGame build_lagrangian_game(const ConstrainedMarkovGame& game,
                                     std::span<const double> lambda,
                                     std::span<const double> state_bonus) {
  if (lambda.size() != static_cast<std::size_t>(game.num_constraints()))
    throw std::invalid_argument("build_lagrangian_game: multiplier count does not match"
                                " constraints");
  for (double v : lambda)
    if (!(v >= 0.0) || !std::isfinite(v))
      throw std::invalid_argument("build_lagrangian_game: multipliers must be non-negative and"
                                  " finite");
  if (!state_bonus.empty() && state_bonus.size() != static_cast<std::size_t>(game.num_states))
    throw std::invalid_argument("build_lagrangian_game: state_bonus size must match num_states");

  LagrangianGame lg;
  lg.base = &game;
  lg.lambda.assign(lambda.begin(), lambda.end());
  lg.state_bonus.assign(state_bonus.begin(), state_bonus.end());
  lg.augmented = game.reward;

  const int ja_count = game.num_joint_actions();
  for (int s = 0; s < game.num_states; ++s) {
    for (int a = 0; a < ja_count; ++a) {
      double shift = state_bonus.empty() ? 0.0 : state_bonus[s];
      for (int j = 0; j < game.num_constraints(); ++j)
        shift += lambda[j] * (game.cost_at(j, s, a) - game.thresholds[j]);
      if (shift == 0.0) continue;
      for (int i = 0; i < game.num_agents; ++i) {
        lg.augmented[(static_cast<std::size_t>(i) * game.num_states + s) * ja_count + a] +=
            shift;
      }
    }
  }
  return lg;
}

}  // namespace cmg
