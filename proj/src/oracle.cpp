#include "cmg/oracle.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "cmg/graph.hpp"

namespace cmg {

namespace {

// Single-decision-maker view shared by the joint-action solve (actions =
// joint actions) and the best-response solve (actions = one agent's actions).
// Transition rows are borrowed when a caller already stores them in the same
// layout, so building the joint view per epoch costs one reward copy.
struct DenseMdp {
  int num_states = 0;
  int num_actions = 0;
  std::vector<std::vector<int>> allowed;  // per state, ascending
  std::vector<double> reward;             // s * num_actions + a
  const std::vector<std::vector<std::pair<int, double>>>* transitions = nullptr;
  std::vector<std::vector<std::pair<int, double>>> owned_transitions;

  const std::vector<std::pair<int, double>>& row(int s, int a) const {
    return (*transitions)[static_cast<std::size_t>(s) * num_actions + a];
  }
};

// Strongly-connected components of the union-over-actions support graph.
// The closed ones are the sets no policy can leave; states outside them can
// recur under some policies but never under all, so value iteration has no
// single gain to converge to there.
struct SupportClasses {
  std::vector<int> class_of;               // component id per state
  std::vector<char> closed;                // per component
  std::vector<std::vector<int>> members;   // per component, ascending state ids
  bool all_closed = true;
};

SupportClasses decompose(const DenseMdp& mdp) {
  const int n = mdp.num_states;
  std::vector<std::vector<int>> adj(n);
  for (int s = 0; s < n; ++s) {
    for (int a : mdp.allowed[s])
      for (const auto& [next, prob] : mdp.row(s, a))
        if (prob > 0.0) adj[s].push_back(next);
    std::sort(adj[s].begin(), adj[s].end());
    adj[s].erase(std::unique(adj[s].begin(), adj[s].end()), adj[s].end());
  }

  SupportClasses out;
  int num_components = 0;
  out.class_of = strongly_connected_components(adj, num_components);
  out.closed = closed_components(adj, out.class_of, num_components);
  out.members.resize(num_components);
  for (int s = 0; s < n; ++s) {
    out.members[out.class_of[s]].push_back(s);
    if (!out.closed[out.class_of[s]]) out.all_closed = false;
  }
  return out;
}

struct RviOutcome {
  std::vector<double> h;
  std::vector<int> greedy;
  std::vector<double> state_gain;
  double gain = 0.0;  // state_gain at the configured reference state
  double residual = std::numeric_limits<double>::infinity();
  int iterations = 0;
  bool converged = false;
};

double backed_up_value(const DenseMdp& mdp, const std::vector<double>& h, double tau, int s,
                       int a) {
  double future = 0.0;
  for (const auto& [next, prob] : mdp.row(s, a)) future += prob * h[next];
  return mdp.reward[static_cast<std::size_t>(s) * mdp.num_actions + a] +
         (1.0 - tau) * h[s] + tau * future;
}

void check_oracle_config(const OracleConfig& config, int num_states) {
  if (config.ref_state < 0 || config.ref_state >= num_states)
    throw std::invalid_argument("oracle: reference state out of range");
  if (!(config.aperiodicity_tau > 0.0) || config.aperiodicity_tau > 1.0)
    throw std::invalid_argument("oracle: aperiodicity_tau must lie in (0, 1]");
}

// Reference state per class: the configured one where it applies, otherwise
// the class's lowest state id.
std::vector<int> class_references(const SupportClasses& classes, int ref_state) {
  std::vector<int> refs(classes.members.size(), -1);
  for (std::size_t c = 0; c < classes.members.size(); ++c)
    if (!classes.members[c].empty()) refs[c] = classes.members[c].front();
  refs[classes.class_of[ref_state]] = ref_state;
  return refs;
}

// Relative value iteration on the aperiodicity-transformed problem
// P~ = (1 - tau) I + tau P.  The transform preserves every stationary
// policy's average reward (both kernels share stationary distributions), so
// the converged offsets are the optimal gains of the original problem and the
// greedy policy is optimal for it; relative values are those of the
// transformed operator.  Ties break toward the lowest action index.  Each
// closed class iterates with its own offset and span; the sweep ends when the
// worst class span is within tolerance.
RviOutcome run_rvi(const DenseMdp& mdp, const OracleConfig& config, std::vector<double> h0) {
  const int n = mdp.num_states;
  check_oracle_config(config, n);

  const SupportClasses classes = decompose(mdp);
  if (!classes.all_closed) {
    int witness = 0;
    while (classes.closed[classes.class_of[witness]]) ++witness;
    throw std::invalid_argument(
        "oracle: state " + std::to_string(witness) +
        " lies outside every closed communicating class, so no policy revisits it and its"
        " long-run value is a steering problem; this solver requires closed classes only");
  }
  const std::vector<int> refs = class_references(classes, config.ref_state);

  RviOutcome out;
  out.h = (static_cast<int>(h0.size()) == n) ? std::move(h0) : std::vector<double>(n, 0.0);
  out.greedy.assign(n, -1);
  out.state_gain.assign(n, 0.0);
  std::vector<double> u(n, 0.0);
  std::vector<double> delta(n, 0.0);

  while (out.iterations < config.max_iter) {
    ++out.iterations;
    for (int s = 0; s < n; ++s) {
      double best = -std::numeric_limits<double>::infinity();
      int best_a = -1;
      for (int a : mdp.allowed[s]) {
        const double q = backed_up_value(mdp, out.h, config.aperiodicity_tau, s, a);
        if (q > best) {
          best = q;
          best_a = a;
        }
      }
      if (best_a < 0)
        throw std::invalid_argument("oracle: no allowed action in state " + std::to_string(s));
      u[s] = best;
      out.greedy[s] = best_a;
      delta[s] = best - out.h[s];
    }
    out.residual = 0.0;
    for (std::size_t c = 0; c < classes.members.size(); ++c) {
      const double offset = u[refs[c]];
      double lo = std::numeric_limits<double>::infinity();
      double hi = -lo;
      for (int s : classes.members[c]) {
        out.h[s] = u[s] - offset;
        out.state_gain[s] = offset;
        lo = std::min(lo, delta[s]);
        hi = std::max(hi, delta[s]);
      }
      out.residual = std::max(out.residual, hi - lo);
    }
    if (out.residual <= config.tol) {
      out.converged = true;
      break;
    }
  }
  out.gain = out.state_gain[config.ref_state];
  return out;
}

// Exact average/relative values of a fixed deterministic decision rule on a
// possibly multichain problem: per recurrent class, the stationary average
// and the bias normalized to zero stationary mean; on transient states, the
// absorption-weighted extension.  All by direct linear solves.
struct FixedPolicyValues {
  std::vector<double> gain;
  std::vector<double> bias;
};

FixedPolicyValues evaluate_decision_rule(const DenseMdp& mdp, const std::vector<int>& rule) {
  const int n = mdp.num_states;
  std::vector<std::vector<int>> adj(n);
  for (int s = 0; s < n; ++s)
    for (const auto& [next, prob] : mdp.row(s, rule[s]))
      if (prob > 0.0) adj[s].push_back(next);

  int num_components = 0;
  const std::vector<int> component = strongly_connected_components(adj, num_components);
  const std::vector<char> closed = closed_components(adj, component, num_components);

  FixedPolicyValues values;
  values.gain.assign(n, 0.0);
  values.bias.assign(n, 0.0);

  std::vector<std::vector<int>> members(num_components);
  for (int s = 0; s < n; ++s) members[component[s]].push_back(s);

  std::vector<int> transient;
  for (int s = 0; s < n; ++s)
    if (!closed[component[s]]) transient.push_back(s);

  for (int c = 0; c < num_components; ++c) {
    if (!closed[c]) continue;
    const std::vector<int>& states = members[c];
    const int m = static_cast<int>(states.size());
    std::vector<int> local(n, -1);
    for (int i = 0; i < m; ++i) local[states[i]] = i;

    Eigen::MatrixXd chain = Eigen::MatrixXd::Zero(m, m);
    Eigen::VectorXd reward(m);
    for (int i = 0; i < m; ++i) {
      const int s = states[i];
      for (const auto& [next, prob] : mdp.row(s, rule[s])) chain(i, local[next]) += prob;
      reward(i) = mdp.reward[static_cast<std::size_t>(s) * mdp.num_actions + rule[s]];
    }

    // The class is irreducible, so the undamped balance system is well-posed:
    // replace one equation by normalization and solve directly.
    Eigen::MatrixXd balance = chain.transpose() - Eigen::MatrixXd::Identity(m, m);
    balance.row(0).setOnes();
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m);
    rhs(0) = 1.0;
    const Eigen::VectorXd mu = balance.partialPivLu().solve(rhs);
    const double gain = mu.dot(reward);

    // Bias with zero stationary mean: (I - P + 1 mu') h = r - g.
    Eigen::MatrixXd poisson = Eigen::MatrixXd::Identity(m, m) - chain;
    poisson.noalias() += Eigen::VectorXd::Ones(m) * mu.transpose();
    const Eigen::VectorXd h = poisson.partialPivLu().solve(
        (reward.array() - gain).matrix());

    for (int i = 0; i < m; ++i) {
      values.gain[states[i]] = gain;
      values.bias[states[i]] = h(i);
    }
  }

  if (!transient.empty()) {
    const int m = static_cast<int>(transient.size());
    std::vector<int> local(n, -1);
    for (int i = 0; i < m; ++i) local[transient[i]] = i;

    Eigen::MatrixXd inside = Eigen::MatrixXd::Zero(m, m);
    Eigen::VectorXd gain_in(m), bias_in(m), reward(m);
    gain_in.setZero();
    bias_in.setZero();
    for (int i = 0; i < m; ++i) {
      const int s = transient[i];
      reward(i) = mdp.reward[static_cast<std::size_t>(s) * mdp.num_actions + rule[s]];
      for (const auto& [next, prob] : mdp.row(s, rule[s])) {
        if (local[next] >= 0) {
          inside(i, local[next]) += prob;
        } else {
          gain_in(i) += prob * values.gain[next];
          bias_in(i) += prob * values.bias[next];
        }
      }
    }
    // Every trajectory leaves the transient set, so I - P_TT is invertible.
    const Eigen::MatrixXd system = Eigen::MatrixXd::Identity(m, m) - inside;
    const auto lu = system.partialPivLu();
    const Eigen::VectorXd g_t = lu.solve(gain_in);
    const Eigen::VectorXd h_t = lu.solve(reward - g_t + bias_in);
    for (int i = 0; i < m; ++i) {
      values.gain[transient[i]] = g_t(i);
      values.bias[transient[i]] = h_t(i);
    }
  }
  return values;
}

struct MultichainSolve {
  std::vector<double> gain;
  std::vector<int> rule;
  int iterations = 0;
  bool converged = false;
};

// Two-stage policy iteration for multichain average-reward problems: improve
// the expected gain of the successor state first and, where the gain is
// already maximal, the bias.  Evaluation is exact, so termination certifies
// optimality; finitely many deterministic rules plus strict-improvement
// thresholds rule out cycling in practice.
MultichainSolve multichain_policy_iteration(const DenseMdp& mdp, int max_iter) {
  const int n = mdp.num_states;
  constexpr double kGainTol = 1e-10;
  constexpr double kBiasTol = 1e-9;

  MultichainSolve out;
  out.rule.resize(n);
  for (int s = 0; s < n; ++s) {
    if (mdp.allowed[s].empty())
      throw std::invalid_argument("oracle: no allowed action in state " + std::to_string(s));
    out.rule[s] = mdp.allowed[s].front();
  }

  while (out.iterations < max_iter) {
    ++out.iterations;
    const FixedPolicyValues values = evaluate_decision_rule(mdp, out.rule);

    bool improved = false;
    // Stage one: raise the expected gain wherever possible.
    for (int s = 0; s < n; ++s) {
      double current = 0.0;
      for (const auto& [next, prob] : mdp.row(s, out.rule[s]))
        current += prob * values.gain[next];
      double best = -std::numeric_limits<double>::infinity();
      int best_a = -1;
      for (int a : mdp.allowed[s]) {
        double q = 0.0;
        for (const auto& [next, prob] : mdp.row(s, a)) q += prob * values.gain[next];
        if (q > best) {
          best = q;
          best_a = a;
        }
      }
      if (best > current + kGainTol) {
        out.rule[s] = best_a;
        improved = true;
      }
    }
    if (improved) continue;

    // Stage two: among gain-conserving actions, raise reward-plus-bias.
    for (int s = 0; s < n; ++s) {
      double max_gain = -std::numeric_limits<double>::infinity();
      for (int a : mdp.allowed[s]) {
        double q = 0.0;
        for (const auto& [next, prob] : mdp.row(s, a)) q += prob * values.gain[next];
        max_gain = std::max(max_gain, q);
      }
      double current = -std::numeric_limits<double>::infinity();
      double best = -std::numeric_limits<double>::infinity();
      int best_a = -1;
      for (int a : mdp.allowed[s]) {
        double q = 0.0;
        double future = 0.0;
        for (const auto& [next, prob] : mdp.row(s, a)) {
          q += prob * values.gain[next];
          future += prob * values.bias[next];
        }
        if (q < max_gain - kGainTol) continue;
        const double score = mdp.reward[static_cast<std::size_t>(s) * mdp.num_actions + a] -
                             values.gain[s] + future;
        if (a == out.rule[s]) current = score;
        if (score > best) {
          best = score;
          best_a = a;
        }
      }
      if (best > current + kBiasTol) {
        out.rule[s] = best_a;
        improved = true;
      }
    }
    if (!improved) {
      out.gain = values.gain;
      out.converged = true;
      break;
    }
  }
  if (!out.converged) out.gain = evaluate_decision_rule(mdp, out.rule).gain;
  return out;
}

// Joint-action view of an identical-interest augmented game.  Rejects games
// whose agents disagree about the (augmented) reward.
DenseMdp joint_view(const LagrangianGame& lgame) {
  const ConstrainedMarkovGame& game = *lgame.base;
  const int ja_count = game.num_joint_actions();
  for (int i = 1; i < game.num_agents; ++i)
    for (int s = 0; s < game.num_states; ++s)
      for (int a = 0; a < ja_count; ++a)
        if (std::abs(lgame.augmented_at(i, s, a) - lgame.augmented_at(0, s, a)) > 1e-9)
          throw std::invalid_argument("oracle: agents' rewards differ; the joint solve only"
                                      " applies to identical-interest games");

  DenseMdp mdp;
  mdp.num_states = game.num_states;
  mdp.num_actions = ja_count;
  mdp.allowed.resize(game.num_states);
  for (int s = 0; s < game.num_states; ++s)
    for (int a = 0; a < ja_count; ++a)
      if (game.joint_action_allowed(s, a)) mdp.allowed[s].push_back(a);
  mdp.reward.assign(lgame.augmented.begin(),
                    lgame.augmented.begin() +
                        static_cast<std::size_t>(game.num_states) * ja_count);
  mdp.transitions = &game.kernel;
  return mdp;
}

ProductPolicy factor_joint_choices(const ConstrainedMarkovGame& game,
                                   const std::vector<int>& joint_per_state) {
  std::vector<std::vector<int>> actions(game.num_agents,
                                        std::vector<int>(game.num_states, 0));
  std::vector<int> decoded(game.num_agents);
  for (int s = 0; s < game.num_states; ++s) {
    game.decode_joint(joint_per_state[s], decoded);
    for (int i = 0; i < game.num_agents; ++i) actions[i][s] = decoded[i];
  }
  return make_deterministic_policy(game, actions);
}

OracleResult result_from_rvi(const LagrangianGame& lgame, RviOutcome&& rvi) {
  OracleResult res;
  res.policy = factor_joint_choices(*lgame.base, rvi.greedy);
  res.gains.assign(lgame.base->num_agents, rvi.gain);
  res.state_gains = std::move(rvi.state_gain);
  res.bias = std::move(rvi.h);
  res.residual = rvi.residual;
  res.iterations = rvi.iterations;
  res.converged = rvi.converged;
  return res;
}

// Average (augmented, agent-indexed) rewards of a deterministic joint policy,
// one stationary solve shared by all agents.
std::vector<double> deterministic_policy_gains(const LagrangianGame& lgame,
                                               const std::vector<int>& joint_per_state) {
  const ConstrainedMarkovGame& game = *lgame.base;
  const int n = game.num_states;
  Eigen::MatrixXd chain = Eigen::MatrixXd::Zero(n, n);
  for (int s = 0; s < n; ++s)
    for (const auto& [next, prob] : game.kernel_row(s, joint_per_state[s]))
      chain(s, next) += prob;
  const Eigen::VectorXd mu = stationary_distribution(chain);
  std::vector<double> gains(game.num_agents, 0.0);
  for (int s = 0; s < n; ++s) {
    if (mu(s) == 0.0) continue;
    for (int i = 0; i < game.num_agents; ++i)
      gains[i] += mu(s) * lgame.augmented_at(i, s, joint_per_state[s]);
  }
  return gains;
}

// Odometer over per-state allowed joint actions; returns false once exhausted.
bool advance_choices(const std::vector<std::vector<int>>& allowed, std::vector<int>& slot) {
  for (std::size_t s = 0; s < slot.size(); ++s) {
    if (++slot[s] < static_cast<int>(allowed[s].size())) return true;
    slot[s] = 0;
  }
  return false;
}

long long count_joint_policies(const std::vector<std::vector<int>>& allowed,
                               long long max_policies) {
  long long total = 1;
  for (const auto& actions : allowed) {
    total *= static_cast<long long>(actions.size());
    if (total > max_policies) return total;
  }
  return total;
}

}  // namespace

OracleResult solve_identical_interest(const LagrangianGame& lgame, const OracleConfig& config,
                                      std::vector<double>* warm_bias) {
  const DenseMdp mdp = joint_view(lgame);
  std::vector<double> h0;
  if (warm_bias != nullptr) h0 = *warm_bias;
  RviOutcome rvi = run_rvi(mdp, config, std::move(h0));
  if (warm_bias != nullptr) *warm_bias = rvi.h;
  return result_from_rvi(lgame, std::move(rvi));
}

OracleResult solve_optimistic_pi(const LagrangianGame& lgame, const OptimisticPiConfig& config,
                                 std::vector<double>* warm_bias, int rounds) {
  const DenseMdp mdp = joint_view(lgame);
  const OracleConfig& base = config.base;
  const int n = mdp.num_states;
  check_oracle_config(base, n);
  if (config.eval_sweeps < 1)
    throw std::invalid_argument("oracle: eval_sweeps must be positive");

  const SupportClasses classes = decompose(mdp);
  if (!classes.all_closed)
    throw std::invalid_argument("oracle: optimistic policy iteration requires every state to"
                                " lie in a closed communicating class");
  const std::vector<int> refs = class_references(classes, base.ref_state);

  std::vector<double> h(n, 0.0);
  if (warm_bias != nullptr && static_cast<int>(warm_bias->size()) == n) h = *warm_bias;

  OracleResult res;
  res.state_gains.assign(n, 0.0);
  std::vector<int> greedy(n, -1);
  std::vector<int> prev_greedy;
  std::vector<double> u(n, 0.0);
  std::vector<double> delta(n, 0.0);
  const int round_budget = (rounds > 0) ? rounds : config.max_rounds;

  for (int round = 0; round < round_budget; ++round) {
    // Greedy improvement against the current relative values.
    for (int s = 0; s < n; ++s) {
      double best = -std::numeric_limits<double>::infinity();
      int best_a = -1;
      for (int a : mdp.allowed[s]) {
        const double q = backed_up_value(mdp, h, base.aperiodicity_tau, s, a);
        if (q > best) {
          best = q;
          best_a = a;
        }
      }
      if (best_a < 0)
        throw std::invalid_argument("oracle: no allowed action in state " + std::to_string(s));
      greedy[s] = best_a;
    }

    // Fixed-policy evaluation sweeps (synchronous, transformed operator),
    // each class carrying its own offset.
    for (int sweep = 0; sweep < config.eval_sweeps; ++sweep) {
      for (int s = 0; s < n; ++s) {
        const double v = backed_up_value(mdp, h, base.aperiodicity_tau, s, greedy[s]);
        u[s] = v;
        delta[s] = v - h[s];
      }
      res.residual = 0.0;
      for (std::size_t c = 0; c < classes.members.size(); ++c) {
        const double offset = u[refs[c]];
        double lo = std::numeric_limits<double>::infinity();
        double hi = -lo;
        for (int s : classes.members[c]) {
          h[s] = u[s] - offset;
          res.state_gains[s] = offset;
          lo = std::min(lo, delta[s]);
          hi = std::max(hi, delta[s]);
        }
        res.residual = std::max(res.residual, hi - lo);
      }
    }
    ++res.iterations;

    if (rounds == 0 && greedy == prev_greedy && res.residual <= base.tol) {
      res.converged = true;
      break;
    }
    prev_greedy = greedy;
  }
  if (rounds > 0) res.converged = true;  // budgeted mode returns the incumbent by design

  res.gains.assign(lgame.base->num_agents, res.state_gains[base.ref_state]);
  if (warm_bias != nullptr) *warm_bias = h;
  res.policy = factor_joint_choices(*lgame.base, greedy);
  res.bias = std::move(h);
  return res;
}

std::vector<OracleResult> brute_force_ne(const LagrangianGame& lgame, double deviation_tol,
                                         long long max_policies) {
  const ConstrainedMarkovGame& game = *lgame.base;
  const int n = game.num_states;
  const int ja_count = game.num_joint_actions();

  std::vector<std::vector<int>> allowed(n);
  for (int s = 0; s < n; ++s)
    for (int a = 0; a < ja_count; ++a)
      if (game.joint_action_allowed(s, a)) allowed[s].push_back(a);
  if (count_joint_policies(allowed, max_policies) > max_policies)
    throw std::invalid_argument("brute_force_ne: policy space exceeds enumeration budget");

  // Per-agent deterministic alternatives, needed for the deviation check.
  std::vector<std::vector<std::vector<int>>> agent_allowed(game.num_agents);
  for (int i = 0; i < game.num_agents; ++i) {
    agent_allowed[i].resize(n);
    for (int s = 0; s < n; ++s) agent_allowed[i][s] = game.allowed_actions(s, i);
  }

  std::vector<OracleResult> equilibria;
  std::vector<int> slot(n, 0);
  std::vector<int> joint(n, 0);
  std::vector<int> decoded(game.num_agents);
  std::vector<int> dev_joint(n, 0);
  do {
    for (int s = 0; s < n; ++s) joint[s] = allowed[s][slot[s]];
    const std::vector<double> gains = deterministic_policy_gains(lgame, joint);

    bool is_equilibrium = true;
    for (int i = 0; i < game.num_agents && is_equilibrium; ++i) {
      // Enumerate agent i's deterministic policies; the others stay fixed.
      std::vector<int> dev_slot(n, 0);
      do {
        bool same = true;
        for (int s = 0; s < n; ++s) {
          game.decode_joint(joint[s], decoded);
          const int dev_action = agent_allowed[i][s][dev_slot[s]];
          if (decoded[i] != dev_action) same = false;
          decoded[i] = dev_action;
          dev_joint[s] = game.joint_index(decoded);
        }
        if (same) continue;
        if (deterministic_policy_gains(lgame, dev_joint)[i] > gains[i] + deviation_tol) {
          is_equilibrium = false;
          break;
        }
      } while (advance_choices(agent_allowed[i], dev_slot));
    }

    if (is_equilibrium) {
      OracleResult res;
      res.policy = factor_joint_choices(game, joint);
      res.gains = gains;
      res.residual = 0.0;
      res.iterations = 0;
      res.converged = true;
      equilibria.push_back(std::move(res));
    }
  } while (advance_choices(allowed, slot));
  return equilibria;
}

double brute_force_max_gain(const LagrangianGame& lgame, long long max_policies) {
  const ConstrainedMarkovGame& game = *lgame.base;
  const int n = game.num_states;
  const int ja_count = game.num_joint_actions();
  std::vector<std::vector<int>> allowed(n);
  for (int s = 0; s < n; ++s)
    for (int a = 0; a < ja_count; ++a)
      if (game.joint_action_allowed(s, a)) allowed[s].push_back(a);
  if (count_joint_policies(allowed, max_policies) > max_policies)
    throw std::invalid_argument("brute_force_max_gain: policy space exceeds enumeration budget");

  double best = -std::numeric_limits<double>::infinity();
  std::vector<int> slot(n, 0);
  std::vector<int> joint(n, 0);
  do {
    for (int s = 0; s < n; ++s) joint[s] = allowed[s][slot[s]];
    best = std::max(best, deterministic_policy_gains(lgame, joint)[0]);
  } while (advance_choices(allowed, slot));
  return best;
}

GeneralizedDualResult generalized_dual(const ConstrainedMarkovGame& game,
                                       std::span<const double> lambda, int agent,
                                       const MarginalPolicy& others, const OracleConfig& config,
                                       std::span<const double> state_bonus) {
  if (agent < 0 || agent >= game.num_agents)
    throw std::invalid_argument("generalized_dual: agent index out of range");
  if (others.excluded_agent != agent ||
      static_cast<int>(others.agent_ids.size()) != game.num_agents - 1 ||
      others.num_states != game.num_states)
    throw std::invalid_argument("generalized_dual: marginal policy does not match agent/game");
  if (lambda.size() != static_cast<std::size_t>(game.num_constraints()))
    throw std::invalid_argument("generalized_dual: multiplier count does not match constraints");
  if (!state_bonus.empty() && state_bonus.size() != static_cast<std::size_t>(game.num_states))
    throw std::invalid_argument("generalized_dual: state_bonus size must match num_states");

  const int n = game.num_states;
  const int own_actions = game.action_counts[agent];
  const int num_others = game.num_agents - 1;

  DenseMdp mdp;
  mdp.num_states = n;
  mdp.num_actions = own_actions;
  mdp.allowed.resize(n);
  mdp.reward.assign(static_cast<std::size_t>(n) * own_actions, 0.0);
  mdp.owned_transitions.assign(static_cast<std::size_t>(n) * own_actions, {});
  mdp.transitions = &mdp.owned_transitions;

  std::vector<int> full(game.num_agents, 0);
  std::vector<int> other_slot(num_others, 0);
  std::vector<double> dense_row(n, 0.0);
  for (int s = 0; s < n; ++s) {
    mdp.allowed[s] = game.allowed_actions(s, agent);
    for (int a : mdp.allowed[s]) {
      std::fill(dense_row.begin(), dense_row.end(), 0.0);
      double reward_acc = state_bonus.empty() ? 0.0 : state_bonus[s];
      std::fill(other_slot.begin(), other_slot.end(), 0);
      // Walk the other agents' joint action tuples with their product weights.
      bool more = true;
      while (more) {
        double weight = 1.0;
        for (int slot = 0; slot < num_others; ++slot) {
          full[others.agent_ids[slot]] = other_slot[slot];
          weight *= others.prob(slot, s, other_slot[slot]);
        }
        if (weight > 0.0) {
          full[agent] = a;
          const int ja = game.joint_index(full);
          double payoff = game.reward_at(agent, s, ja);
          for (int j = 0; j < game.num_constraints(); ++j)
            payoff += lambda[j] * (game.cost_at(j, s, ja) - game.thresholds[j]);
          reward_acc += weight * payoff;
          for (const auto& [next, prob] : game.kernel_row(s, ja))
            dense_row[next] += weight * prob;
        }
        more = false;
        for (int slot = 0; slot < num_others; ++slot) {
          if (++other_slot[slot] < others.action_counts[slot]) {
            more = true;
            break;
          }
          other_slot[slot] = 0;
        }
      }
      mdp.reward[static_cast<std::size_t>(s) * own_actions + a] = reward_acc;
      auto& row = mdp.owned_transitions[static_cast<std::size_t>(s) * own_actions + a];
      for (int next = 0; next < n; ++next)
        if (dense_row[next] > 0.0) row.emplace_back(next, dense_row[next]);
    }
  }

  check_oracle_config(config, n);
  GeneralizedDualResult res;
  if (decompose(mdp).all_closed) {
    const RviOutcome rvi = run_rvi(mdp, config, {});
    res.value = rvi.state_gain[config.ref_state];
    res.residual = rvi.residual;
    res.iterations = rvi.iterations;
    res.converged = rvi.converged;
  } else {
    // Frozen opponents leave some states unrevisitable, so the best-response
    // problem is genuinely multichain; policy iteration with exact
    // evaluation handles the steering through transient states.
    const MultichainSolve solve = multichain_policy_iteration(mdp, 200);
    res.value = solve.gain[config.ref_state];
    res.residual = solve.converged ? 0.0 : std::numeric_limits<double>::infinity();
    res.iterations = solve.iterations;
    res.converged = solve.converged;
  }
  return res;
}

DanskinReport danskin_check(const ConstrainedMarkovGame& game,
                            std::span<const double> base_lambda,
                            std::span<const double> probe_lambda,
                            const ProductPolicy& policy, int agent, const OracleConfig& config,
                            double slack) {
  if (probe_lambda.size() != base_lambda.size() ||
      base_lambda.size() != static_cast<std::size_t>(game.num_constraints()))
    throw std::invalid_argument("danskin_check: multiplier dimensions disagree");

  const MarginalPolicy others = marginal_without(policy, agent);
  const GeneralizedDualResult at_probe =
      generalized_dual(game, probe_lambda, agent, others, config);
  const GeneralizedDualResult at_base =
      generalized_dual(game, base_lambda, agent, others, config);
  if (!at_probe.converged || !at_base.converged)
    throw std::runtime_error("danskin_check: dual solve did not converge within budget");

  const StationaryEvaluation eval = evaluate_from(game, policy, config.ref_state);
  DanskinReport report;
  report.dual_at_probe = at_probe.value;
  report.dual_at_base = at_base.value;
  report.lhs = at_probe.value - at_base.value;
  report.rhs = 0.0;
  for (int j = 0; j < game.num_constraints(); ++j)
    report.rhs += (probe_lambda[j] - base_lambda[j]) *
                  (eval.constraint_values[j] - game.thresholds[j]);
  report.satisfied = report.lhs >= report.rhs - slack;
  return report;
}

double best_response_residual(const LagrangianGame& lgame, const ProductPolicy& policy,
                              int agent, const OracleConfig& config) {
  const ConstrainedMarkovGame& game = *lgame.base;
  const MarginalPolicy others = marginal_without(policy, agent);
  const GeneralizedDualResult dual =
      generalized_dual(game, lgame.lambda, agent, others, config, lgame.state_bonus);
  if (!dual.converged)
    throw std::runtime_error("best_response_residual: dual solve did not converge");

  const StationaryEvaluation eval =
      evaluate_from(game, policy, config.ref_state, lgame.state_bonus);
  double played = eval.gains[agent];
  for (int j = 0; j < game.num_constraints(); ++j)
    played += lgame.lambda[j] * (eval.constraint_values[j] - game.thresholds[j]);
  return dual.value - played;
}

}  // namespace cmg
