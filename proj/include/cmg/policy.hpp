#ifndef CMG_POLICY_HPP
#define CMG_POLICY_HPP

#include <span>
#include <vector>

#include "cmg/game.hpp"
#include "cmg/rng.hpp"

namespace cmg {

// Stationary product policy: one independent per-state action distribution
// per agent.  probs[i][s * action_counts[i] + a] is agent i's probability of
// action a in state s.  Disallowed actions must carry zero mass.
struct ProductPolicy {
  int num_states = 0;
  std::vector<int> action_counts;
  std::vector<std::vector<double>> probs;

  double prob(int agent, int state, int action) const {
    return probs[agent][static_cast<std::size_t>(state) * action_counts[agent] + action];
  }
  double& prob(int agent, int state, int action) {
    return probs[agent][static_cast<std::size_t>(state) * action_counts[agent] + action];
  }
  std::span<const double> dist(int agent, int state) const {
    return {probs[agent].data() + static_cast<std::size_t>(state) * action_counts[agent],
            static_cast<std::size_t>(action_counts[agent])};
  }
};

// Uniform over each agent's allowed actions.
ProductPolicy make_uniform_policy(const ConstrainedMarkovGame& game);

// Deterministic policy from explicit choices: actions[i][s] is agent i's
// action in state s.
ProductPolicy make_deterministic_policy(const ConstrainedMarkovGame& game,
                                        const std::vector<std::vector<int>>& actions);

// Throws std::invalid_argument if the policy does not match the game's shape,
// has negative entries, puts mass on a disallowed action, or has a per-state
// distribution that does not sum to 1 within tol.
void validate_policy(const ProductPolicy& policy, const ConstrainedMarkovGame& game,
                     double tol = 1e-9);

// Probability of a full joint action (product across agents).
double joint_action_prob(const ProductPolicy& policy, const ConstrainedMarkovGame& game,
                         int state, int joint_action);

// Sample a joint action by drawing each agent's action in agent order.
int sample_joint_action(const ProductPolicy& policy, const ConstrainedMarkovGame& game,
                        int state, Rng& rng);

// The product of every agent's per-state distribution except one.  The
// excluded agent's factor is dropped, not renormalized, so composing it back
// with any policy for that agent reconstructs a full product policy; with the
// original factor the round-trip is exact.
struct MarginalPolicy {
  int excluded_agent = -1;
  int num_states = 0;
  std::vector<int> agent_ids;            // remaining agents, ascending
  std::vector<int> action_counts;        // counts for remaining agents
  std::vector<std::vector<double>> factors;  // per remaining agent, as in ProductPolicy

  double prob(int slot, int state, int action) const {
    return factors[slot][static_cast<std::size_t>(state) * action_counts[slot] + action];
  }
};

MarginalPolicy marginal_without(const ProductPolicy& policy, int agent);

// Inverse of marginal_without: insert agent_probs (laid out as
// ProductPolicy::probs[agent]) at the excluded slot.
ProductPolicy compose(const MarginalPolicy& others, const std::vector<double>& agent_probs,
                      int agent_action_count);

// Policies played across an episode: policy k is in force for steps
// [k*epoch_length, (k+1)*epoch_length).  Steps beyond the last epoch map to
// the final policy.
struct EpochPolicySequence {
  int epoch_length = 0;
  std::vector<ProductPolicy> policies;

  int num_epochs() const { return static_cast<int>(policies.size()); }

  const ProductPolicy& at_epoch(int k) const { return policies.at(k); }

  const ProductPolicy& at_step(long long t) const {
    long long k = t / epoch_length;
    if (k >= num_epochs()) k = num_epochs() - 1;
    return policies[static_cast<std::size_t>(k)];
  }
};

}  // namespace cmg

#endif  // CMG_POLICY_HPP
