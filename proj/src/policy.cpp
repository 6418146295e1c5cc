#include "cmg/policy.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace cmg {

ProductPolicy make_uniform_policy(const ConstrainedMarkovGame& game) {
  ProductPolicy pi;
  pi.num_states = game.num_states;
  pi.action_counts = game.action_counts;
  pi.probs.resize(game.num_agents);
  for (int i = 0; i < game.num_agents; ++i) {
    pi.probs[i].assign(static_cast<std::size_t>(game.num_states) * game.action_counts[i], 0.0);
    for (int s = 0; s < game.num_states; ++s) {
      const auto allowed = game.allowed_actions(s, i);
      const double p = 1.0 / static_cast<double>(allowed.size());
      for (int a : allowed) pi.prob(i, s, a) = p;
    }
  }
  return pi;
}

ProductPolicy make_deterministic_policy(const ConstrainedMarkovGame& game,
                                        const std::vector<std::vector<int>>& actions) {
  if (static_cast<int>(actions.size()) != game.num_agents)
    throw std::invalid_argument("make_deterministic_policy: one action row per agent required");
  ProductPolicy pi;
  pi.num_states = game.num_states;
  pi.action_counts = game.action_counts;
  pi.probs.resize(game.num_agents);
  for (int i = 0; i < game.num_agents; ++i) {
    if (static_cast<int>(actions[i].size()) != game.num_states)
      throw std::invalid_argument("make_deterministic_policy: one action per state required");
    pi.probs[i].assign(static_cast<std::size_t>(game.num_states) * game.action_counts[i], 0.0);
    for (int s = 0; s < game.num_states; ++s) {
      const int a = actions[i][s];
      if (a < 0 || a >= game.action_counts[i] || !game.action_allowed(s, i, a))
        throw std::invalid_argument("make_deterministic_policy: action " + std::to_string(a) +
                                    " not allowed for agent " + std::to_string(i) +
                                    " in state " + std::to_string(s));
      pi.prob(i, s, a) = 1.0;
    }
  }
  return pi;
}

void validate_policy(const ProductPolicy& policy, const ConstrainedMarkovGame& game,
                     double tol) {
  if (policy.num_states != game.num_states ||
      policy.action_counts != game.action_counts ||
      static_cast<int>(policy.probs.size()) != game.num_agents)
    throw std::invalid_argument("validate_policy: policy shape does not match game");
  for (int i = 0; i < game.num_agents; ++i) {
    if (policy.probs[i].size() !=
        static_cast<std::size_t>(game.num_states) * game.action_counts[i])
      throw std::invalid_argument("validate_policy: agent " + std::to_string(i) +
                                  " has a mis-sized table");
    for (int s = 0; s < game.num_states; ++s) {
      double sum = 0.0;
      for (int a = 0; a < game.action_counts[i]; ++a) {
        const double p = policy.prob(i, s, a);
        if (!(p >= 0.0) || !std::isfinite(p))
          throw std::invalid_argument("validate_policy: negative or non-finite probability for"
                                      " agent " + std::to_string(i) + " in state " +
                                      std::to_string(s));
        if (p > 0.0 && !game.action_allowed(s, i, a))
          throw std::invalid_argument("validate_policy: agent " + std::to_string(i) +
                                      " puts mass on disallowed action " + std::to_string(a) +
                                      " in state " + std::to_string(s));
        sum += p;
      }
      if (std::abs(sum - 1.0) > tol)
        throw std::invalid_argument("validate_policy: agent " + std::to_string(i) +
                                    " distribution in state " + std::to_string(s) +
                                    " sums to " + std::to_string(sum));
    }
  }
}

double joint_action_prob(const ProductPolicy& policy, const ConstrainedMarkovGame& game,
                         int state, int joint_action) {
  double p = 1.0;
  for (int i = game.num_agents - 1; i >= 0; --i) {
    const int a = joint_action % game.action_counts[i];
    joint_action /= game.action_counts[i];
    p *= policy.prob(i, state, a);
    if (p == 0.0) return 0.0;
  }
  return p;
}

int sample_joint_action(const ProductPolicy& policy, const ConstrainedMarkovGame& game,
                        int state, Rng& rng) {
  int ja = 0;
  for (int i = 0; i < game.num_agents; ++i)
    ja = ja * game.action_counts[i] + rng.categorical(policy.dist(i, state));
  return ja;
}

MarginalPolicy marginal_without(const ProductPolicy& policy, int agent) {
  const int num_agents = static_cast<int>(policy.probs.size());
  if (agent < 0 || agent >= num_agents)
    throw std::invalid_argument("marginal_without: agent index out of range");
  MarginalPolicy m;
  m.excluded_agent = agent;
  m.num_states = policy.num_states;
  for (int i = 0; i < num_agents; ++i) {
    if (i == agent) continue;
    m.agent_ids.push_back(i);
    m.action_counts.push_back(policy.action_counts[i]);
    m.factors.push_back(policy.probs[i]);
  }
  return m;
}

ProductPolicy compose(const MarginalPolicy& others, const std::vector<double>& agent_probs,
                      int agent_action_count) {
  if (agent_probs.size() !=
      static_cast<std::size_t>(others.num_states) * agent_action_count)
    throw std::invalid_argument("compose: agent table size does not match state count");
  ProductPolicy pi;
  pi.num_states = others.num_states;
  const int num_agents = static_cast<int>(others.agent_ids.size()) + 1;
  pi.action_counts.assign(num_agents, 0);
  pi.probs.resize(num_agents);
  for (std::size_t slot = 0; slot < others.agent_ids.size(); ++slot) {
    pi.action_counts[others.agent_ids[slot]] = others.action_counts[slot];
    pi.probs[others.agent_ids[slot]] = others.factors[slot];
  }
  pi.action_counts[others.excluded_agent] = agent_action_count;
  pi.probs[others.excluded_agent] = agent_probs;
  return pi;
}

}  // namespace cmg
