#ifndef CMG_TESTS_FIXTURES_HPP
#define CMG_TESTS_FIXTURES_HPP

#include <utility>
#include <vector>

#include "cmg/game.hpp"

namespace cmg::tests {

// Single-agent, single-action chain with an explicit dense transition matrix;
// rewards and costs depend on the state only.
inline ConstrainedMarkovGame chain_from_matrix(const std::vector<std::vector<double>>& rows,
                                               const std::vector<double>& state_reward,
                                               const std::vector<double>& state_cost = {},
                                               double threshold = 0.0) {
  const int n = static_cast<int>(rows.size());
  ConstrainedMarkovGame game = make_game(n, {1}, state_cost.empty() ? 0 : 1);
  if (!state_cost.empty()) game.thresholds = {threshold};
  for (int s = 0; s < n; ++s) {
    game.reward_at(0, s, 0) = state_reward[s];
    if (!state_cost.empty()) game.cost_at(0, s, 0) = state_cost[s];
    for (int t = 0; t < n; ++t)
      if (rows[s][t] > 0.0) game.kernel_row(s, 0).push_back({t, rows[s][t]});
  }
  return game;
}

// Single agent, two actions: action 0 stays put, action 1 steps to the next
// state cyclically.  Reward depends on (state, action).
inline ConstrainedMarkovGame stay_or_step_game(int num_states,
                                               const std::vector<std::vector<double>>& reward,
                                               const std::vector<std::vector<double>>& cost = {},
                                               double threshold = 0.0) {
  ConstrainedMarkovGame game = make_game(num_states, {2}, cost.empty() ? 0 : 1);
  if (!cost.empty()) game.thresholds = {threshold};
  for (int s = 0; s < num_states; ++s) {
    for (int a = 0; a < 2; ++a) {
      game.reward_at(0, s, a) = reward[s][a];
      if (!cost.empty()) game.cost_at(0, s, a) = cost[s][a];
      const int next = a == 0 ? s : (s + 1) % num_states;
      game.kernel_row(s, a).push_back({next, 1.0});
    }
  }
  return game;
}

// One-state, two-agent game from explicit per-joint-action reward tables
// (row = agent 0's action, column = agent 1's action); self-looping kernel.
inline ConstrainedMarkovGame matrix_game(const std::vector<std::vector<double>>& reward0,
                                         const std::vector<std::vector<double>>& reward1) {
  const int a0 = static_cast<int>(reward0.size());
  const int a1 = static_cast<int>(reward0[0].size());
  ConstrainedMarkovGame game = make_game(1, {a0, a1}, 0);
  for (int i = 0; i < a0; ++i)
    for (int j = 0; j < a1; ++j) {
      const int ja = i * a1 + j;
      game.reward_at(0, 0, ja) = reward0[i][j];
      game.reward_at(1, 0, ja) = reward1[i][j];
      game.kernel_row(0, ja).push_back({0, 1.0});
    }
  return game;
}

}  // namespace cmg::tests

#endif  // CMG_TESTS_FIXTURES_HPP
