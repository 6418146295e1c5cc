#ifndef CMG_ENVS_HPP
#define CMG_ENVS_HPP

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "cmg/game.hpp"
#include "cmg/policy.hpp"

namespace cmg::envs {

enum class ControlCostSign { penalty, bonus };

// Two-agent grid world: both agents move on an n x n grid (1-based, row-major
// cells; row 0 at the top).  Catching the stag together pays stag_reward to
// each agent, standing on a hare cell pays hare_reward per agent on one, and
// the single constraint asks the long-run average number of agents on the
// rest cell to reach rest_threshold.  Moves are deterministic; edges mask
// away off-grid actions.
//
// Motion is additionally charged a control cost: the KL divergence between
// the move distribution an agent's policy induces and a lazy "natural" drift
// that stays put with probability natural_stay_prob and spreads the rest
// uniformly over adjacent cells.  The cost enters the solver as a per-state
// reward adjustment with weight control_cost_weight; `penalty` subtracts it
// (deliberate motion is costly), `bonus` adds it.
struct ShrConfig {
  int grid_side = 5;
  std::vector<int> hare_cells = {1, 5, 21, 25};
  int stag_cell = 13;
  int rest_cell = 2;
  double stag_reward = 20.0;
  double hare_reward = 2.0;
  double rest_threshold = 0.5;
  double control_cost_weight = 2.5;
  ControlCostSign control_cost_sign = ControlCostSign::penalty;
  double natural_stay_prob = 0.9;
};

// Joint-state helpers; cells are 1-based, joint states 0-based with agent 0's
// cell as the most significant digit.
int shr_num_cells(const ShrConfig& config);
int shr_joint_state(const ShrConfig& config, int cell_a, int cell_b);
std::pair<int, int> shr_cells_of_state(const ShrConfig& config, int state);
std::vector<int> shr_neighbors(const ShrConfig& config, int cell);

// Every move flips a cell's checkerboard parity, so whether the two agents'
// parities agree is invariant under play and the joint space splits into two
// closed halves.  These are the states of the aligned half (equal parities),
// ascending — the only half containing co-located pairs such as both-on-stag
// and both-on-rest.
std::vector<int> shr_aligned_states(const ShrConfig& config);

struct ShrGame {
  ShrConfig config;
  ConstrainedMarkovGame game;
  // Per joint state: summed per-agent control cost of any deterministic move
  // policy (the natural distribution weights all neighbors of a cell equally,
  // so the cost depends on the state alone), unweighted and unsigned.
  std::vector<double> control_cost;
  // sign * control_cost_weight * control_cost; feed this to the solver as its
  // per-state reward adjustment.
  std::vector<double> solver_state_bonus;
};

ShrGame build_shr(const ShrConfig& config = {});

// Natural next-cell distribution from `cell` (index c-1 holds cell c's mass).
// The stay mass is defined as 1 minus the exact sum of the neighbor masses so
// the vector sums to 1.0 bit-exactly.
std::vector<double> natural_next_cell_dist(const ShrConfig& config, int cell);

// Next-cell distribution that `policy` induces for one agent at a joint
// state, in the same layout as natural_next_cell_dist.
std::vector<double> policy_next_cell_dist(const ShrGame& shr, const ProductPolicy& policy,
                                          int state, int agent);

// KL divergence sum_x p(x) ln(p(x)/q(x)) with 0 ln(0/q) = 0.  Throws
// std::invalid_argument if p puts mass where q has none.
double kl_control_cost(std::span<const double> policy_dist,
                       std::span<const double> natural_dist);

// Exact per-joint-state control cost of an arbitrary (possibly mixed) product
// policy: per-agent KL against the natural drift, summed over agents.
// Deterministic policies reproduce ShrGame::control_cost.
std::vector<double> control_cost_under_policy(const ShrGame& shr, const ProductPolicy& policy);

// Per-agent visit counts over grid cells from a joint-state visit sequence
// (used for occupancy reports); counts[agent][cell - 1].
std::vector<std::vector<long long>> shr_cell_counts(const ShrConfig& config,
                                                    std::span<const int> states);

// Random dense-kernel game for solver cross-checks: every kernel row is
// strictly positive (so every stationary policy is unichain and aperiodic),
// rewards and costs lie in [-1, 1], and thresholds are planted slater_margin
// below the constraint value of a reference mixed policy so strictly feasible
// policies are guaranteed to exist.
struct ChainGameConfig {
  int num_states = 4;
  std::vector<int> action_counts = {3, 3};
  int num_constraints = 1;
  bool identical_interest = true;
  double slater_margin = 0.1;
  std::uint64_t seed = 0;
};

ConstrainedMarkovGame build_chain_game(const ChainGameConfig& config);

}  // namespace cmg::envs

#endif  // CMG_ENVS_HPP
