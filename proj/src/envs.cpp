#include "cmg/envs.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "cmg/evaluate.hpp"
#include "cmg/rng.hpp"

namespace cmg::envs {

namespace {

// Actions: 0 = up (towards row 0), 1 = down, 2 = left, 3 = right.
constexpr int kNumMoves = 4;
constexpr int kRowDelta[kNumMoves] = {-1, 1, 0, 0};
constexpr int kColDelta[kNumMoves] = {0, 0, -1, 1};

void check_config(const ShrConfig& config) {
  if (config.grid_side < 2)
    throw std::invalid_argument("build_shr: grid side must be at least 2");
  const int cells = config.grid_side * config.grid_side;
  auto check_cell = [cells](int cell, const char* what) {
    if (cell < 1 || cell > cells)
      throw std::invalid_argument(std::string("build_shr: ") + what + " cell out of range");
  };
  check_cell(config.stag_cell, "stag");
  check_cell(config.rest_cell, "rest");
  for (int cell : config.hare_cells) check_cell(cell, "hare");
  if (!(config.natural_stay_prob > 0.0) || !(config.natural_stay_prob < 1.0))
    throw std::invalid_argument("build_shr: natural_stay_prob must lie in (0, 1)");
  if (!(config.control_cost_weight >= 0.0))
    throw std::invalid_argument("build_shr: control_cost_weight must be non-negative");
}

bool move_valid(const ShrConfig& config, int cell, int action) {
  const int row = (cell - 1) / config.grid_side + kRowDelta[action];
  const int col = (cell - 1) % config.grid_side + kColDelta[action];
  return row >= 0 && row < config.grid_side && col >= 0 && col < config.grid_side;
}

// Destination cell; invalid moves stay put (they are masked off, but kernel
// rows behind the mask must still be well-formed).
int move_cell(const ShrConfig& config, int cell, int action) {
  if (!move_valid(config, cell, action)) return cell;
  const int row = (cell - 1) / config.grid_side + kRowDelta[action];
  const int col = (cell - 1) % config.grid_side + kColDelta[action];
  return row * config.grid_side + col + 1;
}

}  // namespace

int shr_num_cells(const ShrConfig& config) { return config.grid_side * config.grid_side; }

int shr_joint_state(const ShrConfig& config, int cell_a, int cell_b) {
  return (cell_a - 1) * shr_num_cells(config) + (cell_b - 1);
}

std::pair<int, int> shr_cells_of_state(const ShrConfig& config, int state) {
  const int cells = shr_num_cells(config);
  return {state / cells + 1, state % cells + 1};
}

std::vector<int> shr_neighbors(const ShrConfig& config, int cell) {
  std::vector<int> out;
  for (int a = 0; a < kNumMoves; ++a)
    if (move_valid(config, cell, a)) out.push_back(move_cell(config, cell, a));
  return out;
}

std::vector<int> shr_aligned_states(const ShrConfig& config) {
  const int cells = shr_num_cells(config);
  const auto parity = [&](int cell) {
    return ((cell - 1) / config.grid_side + (cell - 1) % config.grid_side) % 2;
  };
  std::vector<int> out;
  for (int a = 1; a <= cells; ++a)
    for (int b = 1; b <= cells; ++b)
      if (parity(a) == parity(b)) out.push_back(shr_joint_state(config, a, b));
  return out;
}

std::vector<double> natural_next_cell_dist(const ShrConfig& config, int cell) {
  const std::vector<int> neighbors = shr_neighbors(config, cell);
  std::vector<double> dist(shr_num_cells(config), 0.0);
  const double per_neighbor =
      (1.0 - config.natural_stay_prob) / static_cast<double>(neighbors.size());
  double neighbor_mass = 0.0;
  for (int n : neighbors) {
    dist[n - 1] += per_neighbor;
    neighbor_mass += per_neighbor;
  }
  dist[cell - 1] = 1.0 - neighbor_mass;  // exact complement => sums to 1 bit-exactly
  return dist;
}

double kl_control_cost(std::span<const double> policy_dist,
                       std::span<const double> natural_dist) {
  if (policy_dist.size() != natural_dist.size())
    throw std::invalid_argument("kl_control_cost: distribution sizes differ");
  double kl = 0.0;
  for (std::size_t x = 0; x < policy_dist.size(); ++x) {
    const double p = policy_dist[x];
    if (p == 0.0) continue;
    if (!(p > 0.0))
      throw std::invalid_argument("kl_control_cost: negative probability");
    const double q = natural_dist[x];
    if (q <= 0.0)
      throw std::invalid_argument("kl_control_cost: policy mass outside natural support at"
                                  " index " + std::to_string(x));
    kl += p * std::log(p / q);
  }
  return kl;
}

ShrGame build_shr(const ShrConfig& config) {
  check_config(config);
  ShrGame shr;
  shr.config = config;
  const int cells = shr_num_cells(config);
  const int num_states = cells * cells;
  shr.game = make_game(num_states, {kNumMoves, kNumMoves}, 1);
  ConstrainedMarkovGame& g = shr.game;
  g.thresholds[0] = config.rest_threshold;

  auto is_hare = [&config](int cell) {
    return std::find(config.hare_cells.begin(), config.hare_cells.end(), cell) !=
           config.hare_cells.end();
  };

  const int ja_count = g.num_joint_actions();
  shr.control_cost.assign(num_states, 0.0);
  shr.solver_state_bonus.assign(num_states, 0.0);
  const double sign = (config.control_cost_sign == ControlCostSign::penalty) ? -1.0 : 1.0;

  std::vector<int> moves(2);
  for (int s = 0; s < num_states; ++s) {
    const auto [cell_a, cell_b] = shr_cells_of_state(config, s);
    const int cell_of[2] = {cell_a, cell_b};

    for (int i = 0; i < 2; ++i)
      for (int a = 0; a < kNumMoves; ++a)
        g.set_action_allowed(s, i, a, move_valid(config, cell_of[i], a));

    const double reward =
        config.stag_reward * ((cell_a == config.stag_cell && cell_b == config.stag_cell) ? 1.0
                                                                                         : 0.0) +
        config.hare_reward * ((is_hare(cell_a) ? 1.0 : 0.0) + (is_hare(cell_b) ? 1.0 : 0.0));
    const double cost = (cell_a == config.rest_cell ? 1.0 : 0.0) +
                        (cell_b == config.rest_cell ? 1.0 : 0.0);

    for (int a = 0; a < ja_count; ++a) {
      g.decode_joint(a, moves);
      const int next = shr_joint_state(config, move_cell(config, cell_a, moves[0]),
                                       move_cell(config, cell_b, moves[1]));
      g.kernel_row(s, a) = {{next, 1.0}};
      for (int i = 0; i < 2; ++i) g.reward_at(i, s, a) = reward;
      g.cost_at(0, s, a) = cost;
    }

    // Any deterministic move from a cell lands on a neighbor, each of which
    // carries natural mass (1 - stay)/|neighbors|, so the per-agent control
    // cost is a function of the cell alone.
    double state_cost = 0.0;
    for (int cell : cell_of) {
      const double per_neighbor = (1.0 - config.natural_stay_prob) /
                                  static_cast<double>(shr_neighbors(config, cell).size());
      state_cost += -std::log(per_neighbor);
    }
    shr.control_cost[s] = state_cost;
    shr.solver_state_bonus[s] = sign * config.control_cost_weight * state_cost;
  }
  return shr;
}

std::vector<double> policy_next_cell_dist(const ShrGame& shr, const ProductPolicy& policy,
                                          int state, int agent) {
  if (agent < 0 || agent >= 2)
    throw std::invalid_argument("policy_next_cell_dist: agent index out of range");
  const auto [cell_a, cell_b] = shr_cells_of_state(shr.config, state);
  const int cell = (agent == 0) ? cell_a : cell_b;
  std::vector<double> dist(shr_num_cells(shr.config), 0.0);
  for (int a = 0; a < kNumMoves; ++a) {
    const double p = policy.prob(agent, state, a);
    if (p > 0.0) dist[move_cell(shr.config, cell, a) - 1] += p;
  }
  return dist;
}

std::vector<double> control_cost_under_policy(const ShrGame& shr, const ProductPolicy& policy) {
  validate_policy(policy, shr.game);
  std::vector<double> out(shr.game.num_states, 0.0);
  for (int s = 0; s < shr.game.num_states; ++s) {
    const auto [cell_a, cell_b] = shr_cells_of_state(shr.config, s);
    const int cell_of[2] = {cell_a, cell_b};
    double total = 0.0;
    for (int i = 0; i < 2; ++i)
      total += kl_control_cost(policy_next_cell_dist(shr, policy, s, i),
                               natural_next_cell_dist(shr.config, cell_of[i]));
    out[s] = total;
  }
  return out;
}

std::vector<std::vector<long long>> shr_cell_counts(const ShrConfig& config,
                                                    std::span<const int> states) {
  std::vector<std::vector<long long>> counts(2,
                                             std::vector<long long>(shr_num_cells(config), 0));
  for (int s : states) {
    const auto [cell_a, cell_b] = shr_cells_of_state(config, s);
    ++counts[0][cell_a - 1];
    ++counts[1][cell_b - 1];
  }
  return counts;
}

ConstrainedMarkovGame build_chain_game(const ChainGameConfig& config) {
  if (config.num_states < 1)
    throw std::invalid_argument("build_chain_game: need at least one state");
  if (!(config.slater_margin >= 0.0))
    throw std::invalid_argument("build_chain_game: slater_margin must be non-negative");
  ConstrainedMarkovGame g =
      make_game(config.num_states, config.action_counts, config.num_constraints);

  // Keep the fixture inside the brute-force enumeration budget.
  double policies = 1.0;
  for (int s = 0; s < g.num_states; ++s) policies *= g.num_joint_actions();
  if (policies > 1e6)
    throw std::invalid_argument("build_chain_game: joint policy space exceeds the enumeration"
                                " budget");

  Rng rng(config.seed);
  const int ja_count = g.num_joint_actions();

  // Strictly positive kernel rows: every stationary policy induces an
  // irreducible aperiodic chain, which the solver cross-checks rely on.
  for (int s = 0; s < g.num_states; ++s) {
    for (int a = 0; a < ja_count; ++a) {
      auto& row = g.kernel_row(s, a);
      double total = 0.0;
      std::vector<double> raw(g.num_states);
      for (int next = 0; next < g.num_states; ++next) {
        raw[next] = 0.05 + rng.next_double();
        total += raw[next];
      }
      for (int next = 0; next < g.num_states; ++next) row.emplace_back(next, raw[next] / total);
    }
  }

  for (int s = 0; s < g.num_states; ++s)
    for (int a = 0; a < ja_count; ++a) {
      if (config.identical_interest) {
        const double r = rng.uniform(-1.0, 1.0);
        for (int i = 0; i < g.num_agents; ++i) g.reward_at(i, s, a) = r;
      } else {
        for (int i = 0; i < g.num_agents; ++i) g.reward_at(i, s, a) = rng.uniform(-1.0, 1.0);
      }
    }

  for (int j = 0; j < g.num_constraints(); ++j)
    for (int s = 0; s < g.num_states; ++s)
      for (int a = 0; a < ja_count; ++a) g.cost_at(j, s, a) = rng.uniform(-1.0, 1.0);

  // Plant Slater feasibility: the uniform policy's constraint values sit
  // slater_margin above the thresholds by construction.
  const StationaryEvaluation eval = evaluate_stationary(g, make_uniform_policy(g));
  for (int j = 0; j < g.num_constraints(); ++j)
    g.thresholds[j] = eval.constraint_values[j] - config.slater_margin;
  return g;
}

}  // namespace cmg::envs
