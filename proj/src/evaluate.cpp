#include "cmg/evaluate.hpp"

#include <cmath>
#include <utility>

#include "cmg/graph.hpp"

namespace cmg {

namespace {

std::vector<std::vector<int>> support_graph(const Eigen::MatrixXd& chain) {
  const int n = static_cast<int>(chain.rows());
  std::vector<std::vector<int>> adj(n);
  for (int s = 0; s < n; ++s)
    for (int t = 0; t < n; ++t)
      if (chain(s, t) > 0.0) adj[s].push_back(t);
  return adj;
}

// Occupation measure and long-run averages once the state distribution is
// known; shared by the whole-chain and reachable-restriction entry points.
StationaryEvaluation finish_evaluation(const ConstrainedMarkovGame& game,
                                       const ProductPolicy& policy,
                                       std::span<const double> state_bonus,
                                       Eigen::VectorXd state_distribution) {
  StationaryEvaluation eval;
  eval.state_distribution = std::move(state_distribution);

  const int n = game.num_states;
  const int ja_count = game.num_joint_actions();
  eval.occupation.assign(static_cast<std::size_t>(n) * ja_count, 0.0);
  for (int s = 0; s < n; ++s) {
    const double mu = eval.state_distribution(s);
    if (mu == 0.0) continue;
    for (int a = 0; a < ja_count; ++a)
      eval.occupation[static_cast<std::size_t>(s) * ja_count + a] =
          mu * joint_action_prob(policy, game, s, a);
  }

  eval.gains.assign(game.num_agents, 0.0);
  eval.constraint_values.assign(game.num_constraints(), 0.0);
  for (int s = 0; s < n; ++s) {
    for (int a = 0; a < ja_count; ++a) {
      const double w = eval.occupation[static_cast<std::size_t>(s) * ja_count + a];
      if (w == 0.0) continue;
      for (int i = 0; i < game.num_agents; ++i) eval.gains[i] += w * game.reward_at(i, s, a);
      for (int j = 0; j < game.num_constraints(); ++j)
        eval.constraint_values[j] += w * game.cost_at(j, s, a);
    }
  }
  if (!state_bonus.empty()) {
    double bonus = 0.0;
    for (int s = 0; s < n; ++s) bonus += eval.state_distribution(s) * state_bonus[s];
    for (double& g : eval.gains) g += bonus;
  }
  return eval;
}

}  // namespace

Eigen::MatrixXd induced_chain(const ConstrainedMarkovGame& game, const ProductPolicy& policy) {
  validate_policy(policy, game);
  const int n = game.num_states;
  const int ja_count = game.num_joint_actions();
  Eigen::MatrixXd chain = Eigen::MatrixXd::Zero(n, n);
  for (int s = 0; s < n; ++s) {
    for (int a = 0; a < ja_count; ++a) {
      const double p = joint_action_prob(policy, game, s, a);
      if (p == 0.0) continue;
      for (const auto& [next, prob] : game.kernel_row(s, a)) chain(s, next) += p * prob;
    }
  }
  return chain;
}

Eigen::VectorXd stationary_distribution(const Eigen::MatrixXd& chain, double damping) {
  const int n = static_cast<int>(chain.rows());
  if (n == 0 || chain.cols() != n)
    throw std::invalid_argument("stationary_distribution: chain must be square and non-empty");
  if (!(damping >= 0.0) || damping >= 1.0)
    throw std::invalid_argument("stationary_distribution: damping must lie in [0, 1)");
  for (int s = 0; s < n; ++s) {
    double sum = 0.0;
    for (int t = 0; t < n; ++t) {
      const double p = chain(s, t);
      if (!(p >= -1e-12) || !std::isfinite(p))
        throw std::invalid_argument("stationary_distribution: negative or non-finite entry in"
                                    " row " + std::to_string(s));
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9)
      throw std::invalid_argument("stationary_distribution: row " + std::to_string(s) +
                                  " sums to " + std::to_string(sum));
  }

  // Reject chains with two closed communicating classes before solving: the
  // linear system below would silently blend them.
  const std::vector<std::vector<int>> adj = support_graph(chain);
  int num_components = 0;
  const std::vector<int> component = strongly_connected_components(adj, num_components);
  const std::vector<char> closed = closed_components(adj, component, num_components);
  int first_closed_state = -1;
  int first_closed_component = -1;
  for (int s = 0; s < n; ++s) {
    const int c = component[s];
    if (!closed[c]) continue;
    if (first_closed_state < 0) {
      first_closed_state = s;
      first_closed_component = c;
    } else if (c != first_closed_component) {
      throw MultichainError(first_closed_state, s);
    }
  }

  const double uniform = damping / static_cast<double>(n);
  Eigen::MatrixXd system = (1.0 - damping) * chain.transpose();
  system.array() += uniform;
  system -= Eigen::MatrixXd::Identity(n, n);
  system.row(0).setOnes();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
  rhs(0) = 1.0;
  Eigen::VectorXd mu = system.partialPivLu().solve(rhs);

  for (int s = 0; s < n; ++s)
    if (mu(s) < 0.0) mu(s) = 0.0;  // numerical dust on transient states
  const double total = mu.sum();
  if (!(total > 0.0) || !std::isfinite(total))
    throw std::runtime_error("stationary_distribution: linear solve failed");
  return mu / total;
}

StationaryEvaluation evaluate_stationary(const ConstrainedMarkovGame& game,
                                         const ProductPolicy& policy,
                                         std::span<const double> state_bonus,
                                         double damping) {
  if (!state_bonus.empty() && state_bonus.size() != static_cast<std::size_t>(game.num_states))
    throw std::invalid_argument("evaluate_stationary: state_bonus size must match num_states");
  return finish_evaluation(game, policy, state_bonus,
                           stationary_distribution(induced_chain(game, policy), damping));
}

StationaryEvaluation evaluate_from(const ConstrainedMarkovGame& game,
                                   const ProductPolicy& policy, int initial_state,
                                   std::span<const double> state_bonus, double damping) {
  if (initial_state < 0 || initial_state >= game.num_states)
    throw std::invalid_argument("evaluate_from: initial_state out of range");
  if (!state_bonus.empty() && state_bonus.size() != static_cast<std::size_t>(game.num_states))
    throw std::invalid_argument("evaluate_from: state_bonus size must match num_states");

  const Eigen::MatrixXd chain = induced_chain(game, policy);
  const std::vector<int> states = reachable_nodes(support_graph(chain), initial_state);
  const int m = static_cast<int>(states.size());

  // The reachable set is closed by construction, so restricted rows still sum
  // to one and the restriction is itself a Markov chain.
  Eigen::MatrixXd restricted(m, m);
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b) restricted(a, b) = chain(states[a], states[b]);
  const Eigen::VectorXd mu = stationary_distribution(restricted, damping);

  Eigen::VectorXd full = Eigen::VectorXd::Zero(game.num_states);
  for (int a = 0; a < m; ++a) full(states[a]) = mu(a);
  return finish_evaluation(game, policy, state_bonus, std::move(full));
}

}  // namespace cmg
