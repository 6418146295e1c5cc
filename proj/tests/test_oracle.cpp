#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "cmg/envs.hpp"
#include "cmg/evaluate.hpp"
#include "cmg/lagrangian.hpp"
#include "cmg/oracle.hpp"
#include "cmg/policy.hpp"
#include "doctest.h"
#include "fixtures.hpp"

using namespace cmg;

namespace {

// Three states, agent 0 steers (agent 1 is a dummy single-action passenger):
// state 0 always moves on to state 1; state 1 can hold (action 0) or move to
// state 2 (action 1); state 2 only holds.  State 0 is transient under every
// policy and state 1 is leavable-but-holdable, so the union support graph has
// open components and solvers must not assume every state recurs.
ConstrainedMarkovGame steering_game(double hold_reward, double sink_reward) {
  ConstrainedMarkovGame game = make_game(3, {2, 1}, 0);
  auto set = [&game](int s, int a, int next, double r) {
    game.kernel_row(s, a) = {{next, 1.0}};
    game.reward_at(0, s, a) = r;
    game.reward_at(1, s, a) = r;
  };
  set(0, 0, 1, -1.0);
  set(0, 1, 1, -1.0);
  set(1, 0, 1, hold_reward);
  set(1, 1, 2, 0.0);
  set(2, 0, 2, sink_reward);
  set(2, 1, 2, sink_reward);
  return game;
}

}  // namespace

TEST_CASE("oracle matches brute-force enumeration on random games") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    envs::ChainGameConfig gc;
    gc.seed = seed;
    const ConstrainedMarkovGame game = envs::build_chain_game(gc);
    const LagrangianGame lgame = build_lagrangian_game(game, std::vector<double>{0.5});
    const double best = brute_force_max_gain(lgame);

    const OracleResult rvi = solve_identical_interest(lgame, OracleConfig{});
    CHECK(rvi.converged);
    CHECK(rvi.residual <= OracleConfig{}.tol);
    CHECK(std::abs(rvi.gains[0] - best) < 1e-6);
    CHECK(std::abs(rvi.gains[1] - best) < 1e-6);

    OptimisticPiConfig pic;
    const OracleResult opi = solve_optimistic_pi(lgame, pic);
    CHECK(opi.converged);
    CHECK(std::abs(opi.gains[0] - best) < 1e-6);
  }
}

TEST_CASE("oracle gain is exact on a hand-built two-action chain") {
  // Stay at state 0 for 1/step, or cycle 0 -> 1 -> 0 earning (0 + 4)/2 = 2.
  const ConstrainedMarkovGame game = tests::stay_or_step_game(
      2, {{1.0, 0.0}, {0.0, 4.0}});
  const LagrangianGame lgame = build_lagrangian_game(game, {});
  const OracleResult result = solve_identical_interest(lgame, OracleConfig{});
  CHECK(result.converged);
  CHECK(std::abs(result.gains[0] - 2.0) < 1e-8);
  // The optimal policy steps in both states.
  CHECK(result.policy.prob(0, 0, 1) == 1.0);
  CHECK(result.policy.prob(0, 1, 1) == 1.0);
}

TEST_CASE("aperiodicity transform converges on a purely periodic cycle") {
  // Force the step action everywhere: the induced chain is a 3-cycle.
  ConstrainedMarkovGame game = tests::stay_or_step_game(
      3, {{0.0, 0.0}, {0.0, 1.0}, {0.0, 2.0}});
  for (int s = 0; s < 3; ++s) game.set_action_allowed(s, 0, 0, false);
  const LagrangianGame lgame = build_lagrangian_game(game, {});
  const OracleResult result = solve_identical_interest(lgame, OracleConfig{});
  CHECK(result.converged);
  CHECK(std::abs(result.gains[0] - 1.0) < 1e-8);
}

TEST_CASE("adding a constant to every reward shifts the gain and nothing else") {
  envs::ChainGameConfig gc;
  gc.seed = 11;
  const ConstrainedMarkovGame game = envs::build_chain_game(gc);
  ConstrainedMarkovGame shifted = game;
  for (double& r : shifted.reward) r += 3.25;

  const OracleResult base =
      solve_identical_interest(build_lagrangian_game(game, std::vector<double>{0.0}),
                               OracleConfig{});
  const OracleResult moved =
      solve_identical_interest(build_lagrangian_game(shifted, std::vector<double>{0.0}),
                               OracleConfig{});
  CHECK(std::abs(moved.gains[0] - base.gains[0] - 3.25) < 1e-7);
  CHECK(moved.policy.probs == base.policy.probs);
}

TEST_CASE("warm-started resolve converges at least as fast") {
  envs::ChainGameConfig gc;
  gc.seed = 3;
  const ConstrainedMarkovGame game = envs::build_chain_game(gc);
  const LagrangianGame lgame = build_lagrangian_game(game, std::vector<double>{1.0});
  std::vector<double> warm;
  const OracleResult cold = solve_identical_interest(lgame, OracleConfig{}, &warm);
  CHECK(cold.converged);
  CHECK_FALSE(warm.empty());
  const OracleResult again = solve_identical_interest(lgame, OracleConfig{}, &warm);
  CHECK(again.converged);
  CHECK(again.iterations <= cold.iterations);
  CHECK(std::abs(again.gains[0] - cold.gains[0]) < 1e-9);
}

TEST_CASE("oracle rejects games whose agents disagree") {
  const ConstrainedMarkovGame game =
      tests::matrix_game({{1.0, 0.0}, {0.0, 1.0}}, {{0.0, 1.0}, {1.0, 0.0}});
  const LagrangianGame lgame = build_lagrangian_game(game, {});
  CHECK_THROWS_AS(solve_identical_interest(lgame, OracleConfig{}), std::invalid_argument);
}

TEST_CASE("oracle rejects states that are transient under every policy") {
  // State 0 only drains into state 1's self-loop.
  ConstrainedMarkovGame game = make_game(2, {1}, 0);
  game.kernel_row(0, 0) = {{1, 1.0}};
  game.kernel_row(1, 0) = {{1, 1.0}};
  const LagrangianGame lgame = build_lagrangian_game(game, {});
  try {
    solve_identical_interest(lgame, OracleConfig{});
    FAIL("expected invalid_argument");
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).find("closed") != std::string::npos);
  }
  OptimisticPiConfig pic;
  CHECK_THROWS_AS(solve_optimistic_pi(lgame, pic), std::invalid_argument);
}

TEST_CASE("oracle config is validated") {
  const ConstrainedMarkovGame game = tests::stay_or_step_game(2, {{1.0, 0.0}, {0.0, 4.0}});
  const LagrangianGame lgame = build_lagrangian_game(game, {});
  OracleConfig config;
  SUBCASE("reference state out of range") {
    config.ref_state = 9;
    CHECK_THROWS_AS(solve_identical_interest(lgame, config), std::invalid_argument);
  }
  SUBCASE("tau outside (0, 1]") {
    config.aperiodicity_tau = 0.0;
    CHECK_THROWS_AS(solve_identical_interest(lgame, config), std::invalid_argument);
  }
}

TEST_CASE("budgeted optimistic policy iteration returns a playable incumbent") {
  envs::ChainGameConfig gc;
  gc.seed = 5;
  const ConstrainedMarkovGame game = envs::build_chain_game(gc);
  const LagrangianGame lgame = build_lagrangian_game(game, std::vector<double>{0.25});
  OptimisticPiConfig pic;
  std::vector<double> warm;
  const OracleResult one = solve_optimistic_pi(lgame, pic, &warm, 1);
  CHECK_NOTHROW(validate_policy(one.policy, game));
  // A few more budgeted rounds reach the brute-force optimum.
  OracleResult incumbent = one;
  for (int round = 0; round < 30; ++round)
    incumbent = solve_optimistic_pi(lgame, pic, &warm, 1);
  CHECK(std::abs(incumbent.gains[0] - brute_force_max_gain(lgame)) < 1e-6);
}

TEST_CASE("brute force finds no pure equilibrium in matching pennies") {
  const ConstrainedMarkovGame game =
      tests::matrix_game({{1.0, -1.0}, {-1.0, 1.0}}, {{-1.0, 1.0}, {1.0, -1.0}});
  const LagrangianGame lgame = build_lagrangian_game(game, {});
  CHECK(brute_force_ne(lgame).empty());
}

TEST_CASE("brute force finds both coordination equilibria with exact gains") {
  const ConstrainedMarkovGame game =
      tests::matrix_game({{2.0, 0.0}, {0.0, 1.0}}, {{2.0, 0.0}, {0.0, 1.0}});
  const LagrangianGame lgame = build_lagrangian_game(game, {});
  const std::vector<OracleResult> nes = brute_force_ne(lgame);
  REQUIRE(nes.size() == 2);
  std::vector<double> values;
  for (const OracleResult& ne : nes) {
    CHECK(ne.gains[0] == ne.gains[1]);
    values.push_back(ne.gains[0]);
    // Both agents play the same pure action in a coordination equilibrium.
    for (int a = 0; a < 2; ++a) CHECK(ne.policy.prob(0, 0, a) == ne.policy.prob(1, 0, a));
  }
  std::sort(values.begin(), values.end());
  CHECK(values[0] == 1.0);
  CHECK(values[1] == 2.0);
}

TEST_CASE("brute force refuses oversized enumerations") {
  const ConstrainedMarkovGame game = tests::stay_or_step_game(2, {{1.0, 0.0}, {0.0, 4.0}});
  const LagrangianGame lgame = build_lagrangian_game(game, {});
  CHECK_THROWS_AS(brute_force_ne(lgame, 1e-9, 3), std::invalid_argument);
}

TEST_CASE("generalized dual solves holdable and drained steering games exactly") {
  OracleConfig config;

  SUBCASE("moving on is optimal") {
    const ConstrainedMarkovGame game = steering_game(1.0, 3.0);
    const MarginalPolicy others = marginal_without(make_uniform_policy(game), 0);
    config.ref_state = 0;
    const GeneralizedDualResult result =
        generalized_dual(game, {}, 0, others, config);
    CHECK(result.converged);
    CHECK(result.residual == 0.0);
    CHECK(std::abs(result.value - 3.0) < 1e-9);
  }
  SUBCASE("holding the leavable state is optimal") {
    const ConstrainedMarkovGame game = steering_game(1.0, 0.5);
    const MarginalPolicy others = marginal_without(make_uniform_policy(game), 0);
    config.ref_state = 0;
    GeneralizedDualResult result = generalized_dual(game, {}, 0, others, config);
    CHECK(result.converged);
    CHECK(std::abs(result.value - 1.0) < 1e-9);
    config.ref_state = 2;  // the sink keeps its own, lower value
    result = generalized_dual(game, {}, 0, others, config);
    CHECK(std::abs(result.value - 0.5) < 1e-9);
  }
}

TEST_CASE("best response residual measures the deviation gap exactly") {
  // One state; agent 0's reward depends on its own action only: 1.0 vs 0.5.
  const ConstrainedMarkovGame game =
      tests::matrix_game({{1.0, 1.0}, {0.5, 0.5}}, {{1.0, 1.0}, {0.5, 0.5}});
  const LagrangianGame lgame = build_lagrangian_game(game, {});
  const ProductPolicy plays_second = make_deterministic_policy(game, {{1}, {0}});
  const ProductPolicy plays_first = make_deterministic_policy(game, {{0}, {0}});
  OracleConfig config;
  CHECK(std::abs(best_response_residual(lgame, plays_second, 0, config) - 0.5) < 1e-9);
  CHECK(std::abs(best_response_residual(lgame, plays_first, 0, config)) < 1e-9);
  // Agent 1's reward never depends on its action, so it always best-responds.
  CHECK(std::abs(best_response_residual(lgame, plays_second, 1, config)) < 1e-9);
}

TEST_CASE("oracle policies pass the dual subgradient inequality") {
  for (std::uint64_t seed = 20; seed < 24; ++seed) {
    envs::ChainGameConfig gc;
    gc.seed = seed;
    const ConstrainedMarkovGame game = envs::build_chain_game(gc);
    const std::vector<double> base = {0.3};
    const std::vector<double> probe = {0.9};
    const OracleResult at_base =
        solve_identical_interest(build_lagrangian_game(game, base), OracleConfig{});
    for (int agent = 0; agent < 2; ++agent) {
      const DanskinReport report =
          danskin_check(game, base, probe, at_base.policy, agent, OracleConfig{});
      CHECK(report.satisfied);
      CHECK(report.lhs >= report.rhs - 1e-8);
    }
  }
}

TEST_CASE("grid world oracle solves both parity classes at once") {
  envs::ShrConfig config;  // rest_threshold 0.5
  const envs::ShrGame shr = envs::build_shr(config);
  const LagrangianGame lgame =
      build_lagrangian_game(shr.game, std::vector<double>{5.0}, shr.solver_state_bonus);
  OracleConfig oc;
  const OracleResult result = solve_identical_interest(lgame, oc);
  CHECK(result.converged);
  CHECK(result.residual <= oc.tol);
  REQUIRE(result.state_gains.size() == static_cast<std::size_t>(shr.game.num_states));

  // Gains are constant on each parity class and differ across them.
  const std::vector<int> aligned = envs::shr_aligned_states(config);
  std::vector<char> is_aligned(shr.game.num_states, 0);
  for (int s : aligned) is_aligned[s] = 1;
  double aligned_lo = 1e300, aligned_hi = -1e300, other_lo = 1e300, other_hi = -1e300;
  for (int s = 0; s < shr.game.num_states; ++s) {
    if (is_aligned[s]) {
      aligned_lo = std::min(aligned_lo, result.state_gains[s]);
      aligned_hi = std::max(aligned_hi, result.state_gains[s]);
    } else {
      other_lo = std::min(other_lo, result.state_gains[s]);
      other_hi = std::max(other_hi, result.state_gains[s]);
    }
  }
  CHECK(aligned_hi - aligned_lo < 1e-6);
  CHECK(other_hi - other_lo < 1e-6);
  CHECK(std::abs(aligned_hi - other_hi) > 0.01);

  // `gains` reports the reference state's class (state 0 = both at cell 1,
  // which is aligned).
  CHECK(result.gains[0] == result.state_gains[0]);
  CHECK(std::abs(result.gains[0] - aligned_hi) < 1e-6);

  // The aligned optimum at lambda = 5 dominates hunting the stag from the
  // co-located pair: (20 + 0)/2 reward, -5*0.5 constraint shaping, and two
  // interior-cell control penalties of 2.5 * 2 * ln 40 per state.
  const double stag_bounce = 10.0 - 2.5 - 2.5 * 2.0 * std::log(40.0);
  CHECK(result.gains[0] >= stag_bounce - 1e-9);

  // Self-consistency: playing the reported policy from a co-located start
  // reproduces the reported class gain.
  const int stag_pair = envs::shr_joint_state(config, 13, 13);
  const StationaryEvaluation eval =
      evaluate_from(shr.game, result.policy, stag_pair, lgame.state_bonus);
  double played = eval.gains[0];
  for (int j = 0; j < shr.game.num_constraints(); ++j)
    played += 5.0 * (eval.constraint_values[j] - shr.game.thresholds[j]);
  CHECK(std::abs(played - result.state_gains[stag_pair]) < 1e-6);

  // No agent can improve on the oracle policy inside the aligned class.
  OracleConfig br;
  br.ref_state = stag_pair;
  CHECK(best_response_residual(lgame, result.policy, 0, br) < 1e-6);
  CHECK(best_response_residual(lgame, result.policy, 1, br) < 1e-6);
}

TEST_CASE("grid world oracle policy satisfies the Danskin inequality at probe zero") {
  envs::ShrConfig config;
  const envs::ShrGame shr = envs::build_shr(config);
  const std::vector<double> base = {5.0};
  const std::vector<double> probe = {0.0};
  // The subgradient property compares duals of the plain augmented game, so
  // the policy must be an equilibrium of that same game (no control-cost
  // shaping here).
  const LagrangianGame lgame = build_lagrangian_game(shr.game, base);
  const OracleResult at_base = solve_identical_interest(lgame, OracleConfig{});
  OracleConfig oc;
  oc.ref_state = envs::shr_joint_state(config, 12, 14);
  for (int agent = 0; agent < 2; ++agent) {
    const DanskinReport report = danskin_check(shr.game, base, probe, at_base.policy, agent, oc,
                                               1e-8);
    CHECK(report.satisfied);
  }
}
