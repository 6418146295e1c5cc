#ifndef CMG_GAME_HPP
#define CMG_GAME_HPP

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace cmg {

// Tabular constrained Markov game: finite states, a finite action set per
// agent, one shared transition kernel over joint actions, one reward table
// per agent, and one cost table per constraint with a threshold b_j that the
// long-run average cost must meet or exceed (U_j >= b_j).
//
// All tables are rectangular over the full joint-action grid; availability is
// expressed with a per-(state, agent) mask rather than by deleting actions,
// so joint-action enumeration stays a plain product loop.  Entries behind the
// mask must still be well-formed (rows sum to 1) but are never selected by
// policies or solvers.
struct ConstrainedMarkovGame {
  int num_states = 0;
  int num_agents = 0;
  std::vector<int> action_counts;   // |A_i| per agent
  std::vector<double> thresholds;   // b_j, one per constraint

  // reward[(agent*S + s)*JA + ja]; cost[(constraint*S + s)*JA + ja].
  std::vector<double> reward;
  std::vector<double> cost;

  // kernel[s*JA + ja] -> sparse list of (next state, probability).
  std::vector<std::vector<std::pair<int, double>>> kernel;

  // allowed_bits[s*num_agents + agent]: bit a set iff action a is available.
  // Limits per-agent action counts to 32, far above anything tabular we run.
  std::vector<std::uint32_t> allowed_bits;

  int num_constraints() const { return static_cast<int>(thresholds.size()); }

  int num_joint_actions() const {
    int n = 1;
    for (int c : action_counts) n *= c;
    return n;
  }

  // Joint action index with agent 0 as the most significant digit.
  int joint_index(std::span<const int> actions) const {
    int ja = 0;
    for (int i = 0; i < num_agents; ++i) ja = ja * action_counts[i] + actions[i];
    return ja;
  }

  void decode_joint(int ja, std::span<int> actions) const {
    for (int i = num_agents - 1; i >= 0; --i) {
      actions[i] = ja % action_counts[i];
      ja /= action_counts[i];
    }
  }

  double reward_at(int agent, int state, int ja) const {
    return reward[(static_cast<std::size_t>(agent) * num_states + state) * num_joint_actions() + ja];
  }
  double& reward_at(int agent, int state, int ja) {
    return reward[(static_cast<std::size_t>(agent) * num_states + state) * num_joint_actions() + ja];
  }
  double cost_at(int constraint, int state, int ja) const {
    return cost[(static_cast<std::size_t>(constraint) * num_states + state) * num_joint_actions() + ja];
  }
  double& cost_at(int constraint, int state, int ja) {
    return cost[(static_cast<std::size_t>(constraint) * num_states + state) * num_joint_actions() + ja];
  }

  const std::vector<std::pair<int, double>>& kernel_row(int state, int ja) const {
    return kernel[static_cast<std::size_t>(state) * num_joint_actions() + ja];
  }
  std::vector<std::pair<int, double>>& kernel_row(int state, int ja) {
    return kernel[static_cast<std::size_t>(state) * num_joint_actions() + ja];
  }

  bool action_allowed(int state, int agent, int action) const {
    return (allowed_bits[static_cast<std::size_t>(state) * num_agents + agent] >> action) & 1u;
  }
  void set_action_allowed(int state, int agent, int action, bool allowed) {
    auto& bits = allowed_bits[static_cast<std::size_t>(state) * num_agents + agent];
    if (allowed)
      bits |= (1u << action);
    else
      bits &= ~(1u << action);
  }

  bool joint_action_allowed(int state, int ja) const {
    for (int i = num_agents - 1; i >= 0; --i) {
      const int a = ja % action_counts[i];
      ja /= action_counts[i];
      if (!action_allowed(state, i, a)) return false;
    }
    return true;
  }

  std::vector<int> allowed_actions(int state, int agent) const {
    std::vector<int> out;
    for (int a = 0; a < action_counts[agent]; ++a)
      if (action_allowed(state, agent, a)) out.push_back(a);
    return out;
  }
};

// Zero-initialized game with every action allowed and empty kernel rows.
ConstrainedMarkovGame make_game(int num_states, std::vector<int> action_counts,
                                int num_constraints);

// Magnitude bounds used by step-size and drift arguments: reward_bound is
// max |r_i(s,a)| and cost_gap_bound is max_j max_{s,a} |c_j(s,a) - b_j|.
struct GameBounds {
  double reward_bound = 0.0;
  double cost_gap_bound = 0.0;
  std::vector<double> per_constraint_gap;
};

GameBounds compute_bounds(const ConstrainedMarkovGame& game);

struct ValidationReport {
  std::vector<std::string> violations;
  GameBounds bounds;
  bool ok() const { return violations.empty(); }
};

// Structural checks: table shapes, kernel rows summing to 1 (within tol) with
// valid targets, non-empty allowed-action sets, finite entries.  Violation
// messages name the offending (state, joint action) pair.
ValidationReport validate_game(const ConstrainedMarkovGame& game, double tol = 1e-9);

// JSON (de)serialization.  The kernel may be stored dense (one full row per
// (state, joint action)), sparse (lists of [next, prob] pairs), or in compact
// deterministic form (one successor per entry); save_game picks deterministic
// when exact, otherwise sparse.  Values round-trip bit-exactly.
void save_game(const ConstrainedMarkovGame& game, const std::string& path);
ConstrainedMarkovGame load_game(const std::string& path);

}  // namespace cmg

#endif  // CMG_GAME_HPP
