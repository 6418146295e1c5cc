#include "cmg/dynamics.hpp"

#include <cmath>

namespace cmg {

namespace {

double epoch_gap_dot_lambda(const EpisodeRecord& record, int k) {
  const int m = static_cast<int>(record.thresholds.size());
  const EpochRollout& roll = record.rollouts[k];
  const int steps = static_cast<int>(roll.states.size());
  double dot = 0.0;
  for (int j = 0; j < m; ++j) {
    double sum = 0.0;
    for (int t = 0; t < steps; ++t) sum += roll.costs[static_cast<std::size_t>(t) * m + j];
    const double gap = sum / static_cast<double>(steps) - record.thresholds[j];
    dot += record.lambda_trace[k].values[j] * gap;
  }
  return dot;
}

void check_play_config(const ConstrainedMarkovGame& game, const PlayConfig& config) {
  if (config.epochs < 1) throw std::invalid_argument("play: epochs must be at least 1");
  if (config.epoch_length < 1)
    throw std::invalid_argument("play: epoch_length must be at least 1");
  if (!(config.step_size > 0.0))
    throw std::invalid_argument("play: step_size must be positive");
  if (config.lambda0.size() != static_cast<std::size_t>(game.num_constraints()))
    throw std::invalid_argument("play: lambda0 size does not match constraint count");
  for (double v : config.lambda0)
    if (!(v >= 0.0)) throw std::invalid_argument("play: lambda0 must be non-negative");
  if (config.initial_state < 0 || config.initial_state >= game.num_states)
    throw std::invalid_argument("play: initial state out of range");
  if (!config.solver_state_bonus.empty() &&
      config.solver_state_bonus.size() != static_cast<std::size_t>(game.num_states))
    throw std::invalid_argument("play: solver_state_bonus size must match num_states");
}

}  // namespace

EpochRollout rollout_epoch(const ConstrainedMarkovGame& game, const ProductPolicy& policy,
                           int initial_state, int epoch_length, Rng& rng, int epoch_index) {
  if (epoch_length < 1) throw std::invalid_argument("rollout_epoch: need at least one step");
  if (initial_state < 0 || initial_state >= game.num_states)
    throw std::invalid_argument("rollout_epoch: initial state out of range");
  validate_policy(policy, game);

  const int m = game.num_constraints();
  EpochRollout roll;
  roll.epoch_index = epoch_index;
  roll.states.reserve(epoch_length);
  roll.joint_actions.reserve(epoch_length);
  roll.rewards.resize(static_cast<std::size_t>(epoch_length) * game.num_agents);
  roll.costs.resize(static_cast<std::size_t>(epoch_length) * m);

  int s = initial_state;
  std::vector<double> next_probs;
  for (int t = 0; t < epoch_length; ++t) {
    const int ja = sample_joint_action(policy, game, s, rng);
    roll.states.push_back(s);
    roll.joint_actions.push_back(ja);
    for (int i = 0; i < game.num_agents; ++i)
      roll.rewards[static_cast<std::size_t>(t) * game.num_agents + i] = game.reward_at(i, s, ja);
    for (int j = 0; j < m; ++j)
      roll.costs[static_cast<std::size_t>(t) * m + j] = game.cost_at(j, s, ja);

    const auto& row = game.kernel_row(s, ja);
    if (row.size() == 1) {
      s = row[0].first;  // deterministic transition, no draw
    } else {
      next_probs.clear();
      for (const auto& [next, prob] : row) next_probs.push_back(prob);
      s = row[rng.categorical(next_probs)].first;
    }
  }
  roll.terminal_state = s;
  return roll;
}

EpisodeRecord play(const ConstrainedMarkovGame& game, const PlayConfig& config, Rng& rng) {
  check_play_config(game, config);
  const int K = config.epochs;
  const int T0 = config.epoch_length;
  const int m = game.num_constraints();
  const int N = game.num_agents;

  EpisodeRecord record;
  record.config = config;
  record.thresholds = game.thresholds;
  record.num_states = game.num_states;
  record.policies.epoch_length = T0;
  record.policies.policies.reserve(K);
  record.rollouts.reserve(K);
  record.lambda_trace.reserve(K);

  Multipliers lambda{config.lambda0, config.step_size};
  std::vector<double> warm_bias;
  std::vector<double>* warm =
      config.oracle.warm_start ? &warm_bias : nullptr;

  int s = config.initial_state;
  for (int k = 0; k < K; ++k) {
    const LagrangianGame lgame =
        build_lagrangian_game(game, lambda.values, config.solver_state_bonus);

    OracleResult solved;
    switch (config.oracle.kind) {
      case OracleKind::rvi:
        solved = solve_identical_interest(lgame, config.oracle.config, warm);
        break;
      case OracleKind::optimistic_pi: {
        OptimisticPiConfig pi_config;
        pi_config.base = config.oracle.config;
        pi_config.eval_sweeps = config.oracle.eval_sweeps;
        solved = solve_optimistic_pi(lgame, pi_config, warm, config.oracle.rounds_per_epoch);
        break;
      }
      case OracleKind::brute_force: {
        std::vector<OracleResult> equilibria = brute_force_ne(lgame);
        if (equilibria.empty()) throw OracleFailure(k, std::numeric_limits<double>::infinity());
        solved = std::move(equilibria.front());
        break;
      }
    }
    if (!solved.converged) throw OracleFailure(k, solved.residual);

    record.lambda_trace.push_back(lambda);
    EpochRollout roll = rollout_epoch(game, solved.policy, s, T0, rng, k);
    s = roll.terminal_state;
    lambda = dual_descent_step(lambda, roll.costs, game.thresholds);
    record.policies.policies.push_back(std::move(solved.policy));
    record.rollouts.push_back(std::move(roll));
  }

  // Derived curves, one pass over the trajectory.
  MetricCurves& curves = record.metrics;
  const long long total_steps = static_cast<long long>(K) * T0;
  curves.running_avg_cost.resize(static_cast<std::size_t>(total_steps) * m);
  curves.running_avg_reward.resize(static_cast<std::size_t>(total_steps) * N);
  curves.occupancy_counts.assign(game.num_states, 0);
  curves.slackness_partial.resize(K);
  curves.max_lambda_norm.resize(K);

  std::vector<double> cost_sum(m, 0.0);
  std::vector<double> reward_sum(N, 0.0);
  long long t_global = 0;
  for (const EpochRollout& roll : record.rollouts) {
    for (std::size_t t = 0; t < roll.states.size(); ++t) {
      ++curves.occupancy_counts[roll.states[t]];
      const double steps_so_far = static_cast<double>(t_global + 1);
      for (int j = 0; j < m; ++j) {
        cost_sum[j] += roll.costs[t * m + j];
        curves.running_avg_cost[static_cast<std::size_t>(t_global) * m + j] =
            cost_sum[j] / steps_so_far;
      }
      for (int i = 0; i < N; ++i) {
        reward_sum[i] += roll.rewards[t * N + i];
        curves.running_avg_reward[static_cast<std::size_t>(t_global) * N + i] =
            reward_sum[i] / steps_so_far;
      }
      ++t_global;
    }
  }

  double slack_sum = 0.0;
  double max_norm = 0.0;
  for (int k = 0; k < K; ++k) {
    slack_sum += epoch_gap_dot_lambda(record, k);
    curves.slackness_partial[k] = slack_sum / static_cast<double>(k + 1);
    double norm = 0.0;
    for (double v : record.lambda_trace[k].values) norm += std::abs(v);
    max_norm = std::max(max_norm, norm);
    curves.max_lambda_norm[k] = max_norm;
  }
  return record;
}

FeasibilityReport feasibility_curve(const EpisodeRecord& record, double tol_feas) {
  const int m = static_cast<int>(record.thresholds.size());
  const long long total = static_cast<long long>(record.metrics.running_avg_cost.size()) /
                          std::max(m, 1);
  FeasibilityReport report;
  report.tol = tol_feas;
  report.curves.assign(m, {});
  report.window_average.assign(m, 0.0);
  report.pass.assign(m, false);
  if (m == 0) return report;

  for (int j = 0; j < m; ++j) {
    report.curves[j].resize(total);
    for (long long t = 0; t < total; ++t)
      report.curves[j][t] = record.metrics.running_avg_cost[static_cast<std::size_t>(t) * m + j];
  }

  // Mean of the raw per-step costs over the last quarter of the trajectory.
  const long long window_start = (total * 3) / 4;
  const long long window_len = total - window_start;
  std::vector<double> sums(m, 0.0);
  long long t_global = 0;
  for (const EpochRollout& roll : record.rollouts) {
    for (std::size_t t = 0; t < roll.states.size(); ++t, ++t_global) {
      if (t_global < window_start) continue;
      for (int j = 0; j < m; ++j) sums[j] += roll.costs[t * m + j];
    }
  }
  for (int j = 0; j < m; ++j) {
    report.window_average[j] = sums[j] / static_cast<double>(window_len);
    report.pass[j] = report.window_average[j] >= record.thresholds[j] - tol_feas;
  }
  return report;
}

double slackness_metric(const EpisodeRecord& record) {
  const int K = static_cast<int>(record.rollouts.size());
  double sum = 0.0;
  for (int k = 0; k < K; ++k) sum += epoch_gap_dot_lambda(record, k);
  return sum / static_cast<double>(K);
}

std::vector<long long> occupancy_counts(const EpisodeRecord& record) {
  std::vector<long long> counts(static_cast<std::size_t>(record.num_states), 0);
  for (const EpochRollout& roll : record.rollouts)
    for (int s : roll.states) ++counts[s];
  return counts;
}

}  // namespace cmg
