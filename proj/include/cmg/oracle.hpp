#ifndef CMG_ORACLE_HPP
#define CMG_ORACLE_HPP

#include <limits>
#include <span>
#include <vector>

#include "cmg/evaluate.hpp"
#include "cmg/game.hpp"
#include "cmg/lagrangian.hpp"
#include "cmg/policy.hpp"

namespace cmg {

struct OracleConfig {
  double tol = 1e-9;       // span termination threshold on the value update
  int max_iter = 100000;   // sweep budget per solve
  // Weight kept on the original kernel in the aperiodicity transform
  // P~ = (1 - tau) * I + tau * P.  The transform leaves every policy's
  // average reward unchanged (the stationary distribution is shared) while
  // making value iteration converge on periodic chains; tau = 1 disables it.
  double aperiodicity_tau = 0.5;
  int ref_state = 0;       // state whose relative value is pinned to zero
};

struct OracleResult {
  ProductPolicy policy;
  std::vector<double> gains;        // per-agent average reward at ref_state's class
  std::vector<double> state_gains;  // optimal gain per state (constant on each class)
  std::vector<double> bias;         // relative values under the transformed operator
  double residual = std::numeric_limits<double>::infinity();
  int iterations = 0;
  bool converged = false;
};

// Relative value iteration on the joint-action problem shared by all agents.
// Requires every agent's (augmented) reward table to agree entrywise within
// 1e-9; the maximizing deterministic joint policy is a Nash equilibrium of
// the identical-interest game, returned factored per agent.  Ties in the
// greedy step break toward the lowest joint-action index.
//
// The state space is first split into the strongly-connected components of
// the union-over-actions support graph, and the iteration runs independently
// on each closed component with its own reference state (ref_state where it
// applies, otherwise the component's lowest state id).  On a unichain or
// communicating problem there is a single component and this is plain
// relative value iteration; on problems like the grid world, whose lockstep
// parity splits the joint space into two closed halves, each half is solved
// exactly.  Every state must lie in a closed component (no state may be
// transient under all policies); `gains` reports the class of ref_state and
// `state_gains` carries the per-class values.  warm_bias, when non-null,
// seeds the relative values and receives the converged ones, which lets a
// caller resolving a drifting sequence of games pay for one cold solve only.
OracleResult solve_identical_interest(const LagrangianGame& lgame, const OracleConfig& config,
                                      std::vector<double>* warm_bias = nullptr);

struct OptimisticPiConfig {
  OracleConfig base;
  int eval_sweeps = 20;   // fixed-policy evaluation sweeps between improvements
  int max_rounds = 1000;  // improvement rounds when running to convergence
};

// Optimistic policy iteration on the same identical-interest problem: each
// round takes one greedy improvement against the current relative values and
// then eval_sweeps synchronous evaluation sweeps under the improved policy.
// rounds > 0 runs exactly that many rounds and returns the (possibly inexact)
// incumbent, which is how an online loop keeps per-epoch work bounded and
// introduces evaluation lag; rounds = 0 iterates until the greedy policy is
// stable and the residual is below tol.
OracleResult solve_optimistic_pi(const LagrangianGame& lgame, const OptimisticPiConfig& config,
                                 std::vector<double>* warm_bias = nullptr, int rounds = 0);

// All pure Nash equilibria of the unconstrained (augmented-reward) game in
// deterministic product policies, checked against deterministic unilateral
// deviations with tolerance deviation_tol on the deviating agent's gain.
// Deterministic joint policies always factor across agents, so this
// enumeration covers every deterministic stationary policy.  Throws
// std::invalid_argument when the enumeration would exceed max_policies.
std::vector<OracleResult> brute_force_ne(const LagrangianGame& lgame,
                                         double deviation_tol = 1e-9,
                                         long long max_policies = 1000000);

// Maximum per-agent gain over all deterministic product policies of an
// identical-interest game; reference value for oracle equivalence checks.
double brute_force_max_gain(const LagrangianGame& lgame, long long max_policies = 1000000);

struct GeneralizedDualResult {
  double value = 0.0;
  double residual = std::numeric_limits<double>::infinity();
  int iterations = 0;
  bool converged = false;
};

// One agent's best attainable augmented value when the other agents are
// frozen: the optimal average reward, started from config.ref_state, of the
// single-agent problem with reward E_{a_-i}[ r_i + lambda' (c - b) ]
// (+ state_bonus) and the correspondingly marginalized kernel.  The optimum
// over all policies of that problem is attained at a deterministic one.  When
// every state of the induced problem lies in a closed communicating class,
// per-class relative value iteration computes it; otherwise — frozen
// opponents routinely leave some states reachable but not revisitable — the
// solve falls back to multichain policy iteration with exact gain/bias
// evaluation, whose residual is reported as 0 on convergence.
GeneralizedDualResult generalized_dual(const ConstrainedMarkovGame& game,
                                       std::span<const double> lambda, int agent,
                                       const MarginalPolicy& others, const OracleConfig& config,
                                       std::span<const double> state_bonus = {});

struct DanskinReport {
  double lhs = 0.0;           // d_i at the probe multipliers minus d_i at the base
  double rhs = 0.0;           // (probe - base)' (U(policy) - b)
  double dual_at_probe = 0.0;
  double dual_at_base = 0.0;
  bool satisfied = false;     // lhs >= rhs - slack
};

// Subgradient inequality for the generalized dual: with `policy` an
// equilibrium of the game augmented at base_lambda, the constraint gap of
// `policy` is a subgradient, so the dual evaluated at probe_lambda must
// dominate the linearization.  Verified agent-wise.  All quantities are taken
// from config.ref_state: the duals by definition, the policy's constraint
// values via evaluate_from, so the comparison stays inside one closed class
// even when the full chain has several.
DanskinReport danskin_check(const ConstrainedMarkovGame& game,
                            std::span<const double> base_lambda,
                            std::span<const double> probe_lambda,
                            const ProductPolicy& policy, int agent, const OracleConfig& config,
                            double slack = 1e-8);

// Gap between an agent's best attainable augmented value against the others
// and the value it actually gets under `policy`, both from config.ref_state;
// zero (up to solver tolerance) iff the agent best-responds.
double best_response_residual(const LagrangianGame& lgame, const ProductPolicy& policy,
                              int agent, const OracleConfig& config);

}  // namespace cmg

#endif  // CMG_ORACLE_HPP
