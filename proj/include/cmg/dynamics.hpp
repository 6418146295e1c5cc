#ifndef CMG_DYNAMICS_HPP
#define CMG_DYNAMICS_HPP

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "cmg/game.hpp"
#include "cmg/lagrangian.hpp"
#include "cmg/oracle.hpp"
#include "cmg/policy.hpp"
#include "cmg/rng.hpp"

namespace cmg {

// One epoch of play under a fixed policy.  states[t] is the state the t-th
// action was taken in; the successor of the last step is terminal_state, so
// consecutive epochs chain into one unbroken trajectory.
struct EpochRollout {
  int epoch_index = 0;
  std::vector<int> states;         // epoch_length entries
  std::vector<int> joint_actions;  // epoch_length entries
  std::vector<double> rewards;     // step-major, epoch_length x num_agents
  std::vector<double> costs;       // step-major, epoch_length x num_constraints
  int terminal_state = 0;
};

// Derived curves stored alongside a run; everything here is recomputable
// from the raw rollouts and the multiplier trace.
struct MetricCurves {
  std::vector<double> running_avg_cost;     // step-major, (K*T0) x m: (1/T) sum_{t<T} c
  std::vector<double> running_avg_reward;   // step-major, (K*T0) x num_agents
  std::vector<double> slackness_partial;    // per epoch: (1/K') sum_{k<K'} lambda_k' gbar_k
  std::vector<long long> occupancy_counts;  // per-state visits over all K*T0 steps
  std::vector<double> max_lambda_norm;      // per epoch: running max of |lambda_k|_1
};

enum class OracleKind { rvi, optimistic_pi, brute_force };

struct OracleSettings {
  OracleKind kind = OracleKind::rvi;
  OracleConfig config;
  int eval_sweeps = 20;       // optimistic PI evaluation sweeps per round
  int rounds_per_epoch = 1;   // optimistic PI rounds per solve; 0 = run to convergence
  bool warm_start = true;     // reuse relative values across epochs
};

struct PlayConfig {
  int epochs = 1;        // K
  int epoch_length = 1;  // T0
  double step_size = 0.1;
  std::vector<double> lambda0;
  int initial_state = 0;
  OracleSettings oracle;
  // Optional per-state reward shaping handed to the solver (e.g. a control
  // cost); logged rewards always come from the base tables.
  std::vector<double> solver_state_bonus;
};

struct EpisodeRecord {
  std::vector<Multipliers> lambda_trace;  // multipliers in force during each epoch
  EpochPolicySequence policies;
  std::vector<EpochRollout> rollouts;
  MetricCurves metrics;
  std::uint64_t seed = 0;
  PlayConfig config;
  std::vector<double> thresholds;  // copied from the game for self-contained reports
  int num_states = 0;              // ditto
};

struct OracleFailure : std::runtime_error {
  OracleFailure(int epoch_arg, double residual_arg)
      : std::runtime_error("oracle failed to converge at epoch " + std::to_string(epoch_arg) +
                           " (residual " + std::to_string(residual_arg) + ")"),
        epoch(epoch_arg),
        residual(residual_arg) {}
  int epoch;
  double residual;
};

// Sample epoch_length steps under a fixed product policy: actions drawn
// independently per agent, successor states from the kernel, rewards and
// costs copied from the base tables.
EpochRollout rollout_epoch(const ConstrainedMarkovGame& game, const ProductPolicy& policy,
                           int initial_state, int epoch_length, Rng& rng, int epoch_index = 0);

// The full primal-dual loop: per epoch, fold the current multipliers into
// the rewards, solve the resulting identical-interest game with the
// configured oracle, roll out epoch_length steps continuing from the previous
// terminal state, then take one projected dual-descent step on the sampled
// costs.  Throws OracleFailure when a solve exhausts its budget.
EpisodeRecord play(const ConstrainedMarkovGame& game, const PlayConfig& config, Rng& rng);

struct FeasibilityReport {
  // Views into the running-average cost curve, one per constraint.
  std::vector<std::vector<double>> curves;
  std::vector<double> window_average;  // mean raw cost over the last quarter of steps
  std::vector<bool> pass;              // window_average >= threshold - tol
  double tol = 0.05;
};

FeasibilityReport feasibility_curve(const EpisodeRecord& record, double tol_feas = 0.05);

// Ergodic complementary-slackness statistic (1/K) sum_k lambda_k' gbar_k,
// where gbar_k is epoch k's average constraint gap.
double slackness_metric(const EpisodeRecord& record);

// Per-state visit counts; sums to K*T0.
std::vector<long long> occupancy_counts(const EpisodeRecord& record);

}  // namespace cmg

#endif  // CMG_DYNAMICS_HPP
