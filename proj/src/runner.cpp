#include "cmg/runner.hpp"

#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "json.hpp"

namespace cmg::run {

namespace {

namespace fs = std::filesystem;

struct SweepCell {
  int index = 0;
  double threshold = 0.0;  // NaN when not applicable
  std::uint64_t seed = 0;
  std::string dir;
};

// Environment resolved for one cell: the game plus optional solver shaping.
struct ResolvedEnv {
  ConstrainedMarkovGame game;
  std::vector<double> solver_state_bonus;
  const envs::ShrConfig* grid = nullptr;  // points into the owning RunConfig copy
  envs::ShrConfig grid_storage;
  double cost_gap_bound = 0.0;
};

ResolvedEnv resolve_env(const RunConfig& config, double threshold) {
  ResolvedEnv env;
  switch (config.env_kind) {
    case EnvKind::shr: {
      envs::ShrConfig shr = config.shr;
      shr.rest_threshold = threshold;
      try {
        envs::ShrGame built = envs::build_shr(shr);
        env.game = std::move(built.game);
        env.solver_state_bonus = std::move(built.solver_state_bonus);
      } catch (const std::exception& e) {
        throw ConfigError("env", e.what());
      }
      env.grid_storage = shr;
      env.grid = &env.grid_storage;
      break;
    }
    case EnvKind::file:
      try {
        env.game = load_game(config.game_path);
      } catch (const std::exception& e) {
        throw ConfigError("env.path", e.what());
      }
      break;
    case EnvKind::synthetic:
      try {
        env.game = envs::build_chain_game(config.synthetic);
      } catch (const std::exception& e) {
        throw ConfigError("env", e.what());
      }
      break;
  }
  env.cost_gap_bound = compute_bounds(env.game).cost_gap_bound;
  if (config.lambda0.size() != static_cast<std::size_t>(env.game.num_constraints()))
    throw ConfigError("run.lambda0", "size does not match the game's constraint count");
  return env;
}

int resolve_initial_state(const RunConfig& config, const ResolvedEnv& env, Rng& rng) {
  if (config.init_mode == InitMode::random) return rng.uniform_int(env.game.num_states);
  if (config.init_mode == InitMode::random_aligned) {
    if (env.grid == nullptr)
      throw ConfigError("run.initial_state.mode",
                        "'random_aligned' only applies to grid environments");
    const std::vector<int> aligned = envs::shr_aligned_states(*env.grid);
    return aligned[rng.uniform_int(static_cast<int>(aligned.size()))];
  }
  if (!config.initial_cells.empty()) {
    if (env.grid == nullptr)
      throw ConfigError("run.initial_state.cells", "only applies to grid environments");
    const int cells = envs::shr_num_cells(*env.grid);
    for (int cell : config.initial_cells)
      if (cell < 1 || cell > cells)
        throw ConfigError("run.initial_state.cells", "cell out of range");
    return envs::shr_joint_state(*env.grid, config.initial_cells[0], config.initial_cells[1]);
  }
  if (config.initial_state < 0 || config.initial_state >= env.game.num_states)
    throw ConfigError("run.initial_state.state", "out of range for this game");
  return config.initial_state;
}

CellSummary run_cell(const RunConfig& config, const SweepCell& cell,
                     const std::string& config_json) {
  const ResolvedEnv env = resolve_env(config, cell.threshold);

  PlayConfig play_config;
  play_config.epochs = config.epochs;
  play_config.epoch_length = config.epoch_length;
  play_config.step_size = config.eta;
  play_config.lambda0 = config.lambda0;
  play_config.oracle = config.oracle;
  play_config.solver_state_bonus = env.solver_state_bonus;

  Rng rng(cell.seed);
  play_config.initial_state = resolve_initial_state(config, env, rng);

  EpisodeRecord record = play(env.game, play_config, rng);
  record.seed = cell.seed;
  return write_cell_artifacts(config.output_dir, cell.dir, record, config_json, env.grid,
                              config.feasibility_tol, env.cost_gap_bound);
}

std::string cell_dir_name(const RunConfig& config, double threshold, std::uint64_t seed) {
  std::ostringstream name;
  if (config.env_kind == EnvKind::shr) name << "thr" << format_double(threshold) << '_';
  name << "seed" << seed;
  return name.str();
}

}  // namespace

SweepResult run_sweep(const RunConfig& config) {
  // Enumerate cells up front so results land in a deterministic order no
  // matter how the worker pool schedules them.
  std::vector<SweepCell> cells;
  if (config.env_kind == EnvKind::shr) {
    for (double threshold : config.shr_thresholds)
      for (std::uint64_t seed : config.seeds) {
        SweepCell cell;
        cell.index = static_cast<int>(cells.size());
        cell.threshold = threshold;
        cell.seed = seed;
        cell.dir = cell_dir_name(config, threshold, seed);
        cells.push_back(std::move(cell));
      }
  } else {
    for (std::uint64_t seed : config.seeds) {
      SweepCell cell;
      cell.index = static_cast<int>(cells.size());
      cell.threshold = std::nan("");
      cell.seed = seed;
      cell.dir = cell_dir_name(config, cell.threshold, seed);
      cells.push_back(std::move(cell));
    }
  }

  // Fail fast on per-cell config problems before spawning workers.
  resolve_env(config, cells.front().threshold);

  std::error_code ec;
  fs::create_directories(config.output_dir, ec);
  if (ec) throw IoError("cannot create " + config.output_dir + ": " + ec.message());

  const std::string config_json = serialize_run_config(config);
  std::vector<CellSummary> summaries(cells.size());

  unsigned int workers = config.threads > 0
                             ? static_cast<unsigned int>(config.threads)
                             : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min<unsigned int>(workers, static_cast<unsigned int>(cells.size()));

  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        while (true) {
          const std::size_t idx = next.fetch_add(1);
          if (idx >= cells.size()) break;
          summaries[cells[idx].index] = run_cell(config, cells[idx], config_json);
        }
      } catch (...) {
        errors[w] = std::current_exception();
        next.store(cells.size());  // stop handing out work
      }
    });
  }
  for (std::thread& t : pool) t.join();
  for (const std::exception_ptr& error : errors)
    if (error) std::rethrow_exception(error);

  write_summary(config.output_dir, summaries);

  SweepResult result;
  result.cells = std::move(summaries);
  result.output_dir = config.output_dir;
  for (const CellSummary& cell : result.cells)
    for (bool pass : cell.feasibility_pass)
      result.all_feasibility_pass = result.all_feasibility_pass && pass;
  return result;
}

std::string inspect_artifact_dir(const std::string& dir) {
  const fs::path manifest_path = fs::path(dir) / "run_manifest.json";
  std::ifstream in(manifest_path);
  if (!in) throw IoError("cannot open " + manifest_path.string());
  nlohmann::json manifest;
  try {
    in >> manifest;
  } catch (const nlohmann::json::exception& e) {
    throw IoError(manifest_path.string() + " is not valid JSON: " + e.what());
  }

  std::ostringstream out;
  out << "artifact dir: " << dir << '\n';
  out << "seed: " << manifest.value("seed", 0ull) << '\n';
  if (manifest.contains("threshold") && !manifest["threshold"].is_null())
    out << "threshold: " << manifest["threshold"].get<double>() << '\n';

  if (manifest.contains("summary")) {
    const nlohmann::json& s = manifest["summary"];
    out << "epochs: " << s.value("epochs", 0) << ", total steps: "
        << s.value("total_steps", 0ll) << '\n';
    out << "window avg cost:";
    for (const auto& v : s.value("window_avg_cost", std::vector<double>{}))
      out << ' ' << format_double(v);
    out << '\n';
    out << "feasibility pass:";
    for (const auto& v : s.value("feasibility_pass", std::vector<bool>{}))
      out << ' ' << (v ? "yes" : "no");
    out << '\n';
    out << "final avg reward:";
    for (const auto& v : s.value("final_avg_reward", std::vector<double>{}))
      out << ' ' << format_double(v);
    out << '\n';
    out << "slackness: " << format_double(s.value("slackness", 0.0)) << " (bound "
        << format_double(s.value("slackness_bound", 0.0)) << ")\n";
    out << "max |lambda|_1: " << format_double(s.value("max_lambda_norm", 0.0)) << '\n';
  }

  out << "checksums:\n";
  bool all_match = true;
  if (manifest.contains("artifacts")) {
    for (const auto& [name, recorded] : manifest["artifacts"].items()) {
      std::string actual;
      try {
        actual = fnv1a64_hex(fnv1a64_file((fs::path(dir) / name).string()));
      } catch (const IoError&) {
        actual = "(missing)";
      }
      const bool match = actual == recorded.get<std::string>();
      all_match = all_match && match;
      out << "  " << name << ": " << (match ? "ok" : "MISMATCH") << '\n';
    }
  }
  out << (all_match ? "manifest checksums verified" : "manifest checksum verification FAILED")
      << '\n';
  return out.str();
}

namespace {

// --- verify suites -------------------------------------------------------

VerifyCheck check_dual_update_hand_values() {
  VerifyCheck check;
  check.name = "dual_update_exactness";
  check.bound = 0.0;
  double worst = 0.0;
  auto record = [&check, &worst](double got, double want) {
    ++check.items;
    const double diff = std::abs(got - want);
    worst = std::max(worst, diff);
    if (diff != 0.0) ++check.failed_items;
  };

  {  // satisfied constraint pushes the multiplier up through the gap sign
    Multipliers lambda{{5.0}, 1.0};
    const double costs[] = {0.0};
    const double b[] = {0.25};
    record(dual_descent_step(lambda, costs, b).values[0], 5.25);
  }
  {  // projection at zero
    Multipliers lambda{{0.1}, 1.0};
    const double costs[] = {1.0};
    const double b[] = {0.25};
    record(dual_descent_step(lambda, costs, b).values[0], 0.0);
  }
  {  // two-step epoch average
    Multipliers lambda{{1.0}, 0.5};
    const double costs[] = {1.0, 0.0};
    const double b[] = {0.25};
    record(dual_descent_step(lambda, costs, b).values[0], 0.875);
  }

  check.metric = worst;
  check.pass = check.failed_items == 0;
  check.detail = "hand-computed projected updates reproduced exactly";
  return check;
}

VerifyCheck check_oracle_equivalence(int num_games, double corrupt_tol) {
  VerifyCheck check;
  check.name = "oracle_equivalence";
  check.bound = 1e-6;
  OracleConfig config;
  if (corrupt_tol > 0.0) config.tol = corrupt_tol;

  double worst = 0.0;
  for (int g = 0; g < num_games; ++g) {
    envs::ChainGameConfig game_config;
    game_config.seed = 1000 + static_cast<std::uint64_t>(g);
    const ConstrainedMarkovGame game = envs::build_chain_game(game_config);
    Rng rng(game_config.seed ^ 0xabcdef);
    const std::vector<double> lambda = {rng.uniform(0.0, 2.0)};
    const LagrangianGame lgame = build_lagrangian_game(game, lambda);

    const OracleResult solved = solve_identical_interest(lgame, config);
    const double reference = brute_force_max_gain(lgame);
    const double diff = std::abs(solved.gains[0] - reference);
    worst = std::max(worst, diff);
    ++check.items;
    if (!(diff <= check.bound)) ++check.failed_items;
  }
  check.metric = worst;
  check.pass = check.failed_items == 0;
  check.detail = "solver gain vs deterministic-policy enumeration";
  return check;
}

VerifyCheck check_danskin(int num_trials, double corrupt_tol) {
  VerifyCheck check;
  check.name = "danskin_inequality";
  check.bound = 1e-8;
  OracleConfig config;
  config.tol = corrupt_tol > 0.0 ? corrupt_tol : 1e-10;

  double worst = 0.0;  // most negative lhs - rhs margin
  for (int t = 0; t < num_trials; ++t) {
    envs::ChainGameConfig game_config;
    game_config.seed = 2000 + static_cast<std::uint64_t>(t);
    const ConstrainedMarkovGame game = envs::build_chain_game(game_config);
    Rng rng(game_config.seed ^ 0x5eed);
    const std::vector<double> base = {rng.uniform(0.0, 2.0)};
    // Zero is the canonical probe; exercise arbitrary probes on odd trials.
    const std::vector<double> probe = (t % 2 == 0)
                                          ? std::vector<double>{0.0}
                                          : std::vector<double>{rng.uniform(0.0, 2.0)};
    const LagrangianGame lgame = build_lagrangian_game(game, base);
    const OracleResult solved = solve_identical_interest(lgame, config);
    const int agent = t % game.num_agents;
    const DanskinReport report =
        danskin_check(game, base, probe, solved.policy, agent, config, check.bound);
    worst = std::min(worst, report.lhs - report.rhs);
    ++check.items;
    if (!report.satisfied) ++check.failed_items;
  }
  check.metric = worst;
  check.pass = check.failed_items == 0;
  check.detail = "dual value dominates its linearization at oracle policies";
  return check;
}

VerifyCheck check_value_identity(int num_games) {
  VerifyCheck check;
  check.name = "lagrangian_value_identity";
  check.bound = 1e-9;
  double worst = 0.0;
  for (int g = 0; g < num_games; ++g) {
    envs::ChainGameConfig game_config;
    game_config.identical_interest = false;
    game_config.seed = 3000 + static_cast<std::uint64_t>(g);
    const ConstrainedMarkovGame game = envs::build_chain_game(game_config);
    Rng rng(game_config.seed ^ 0x1de47);

    // Random interior policy over allowed actions.
    ProductPolicy policy = make_uniform_policy(game);
    for (int i = 0; i < game.num_agents; ++i)
      for (int s = 0; s < game.num_states; ++s) {
        double total = 0.0;
        std::vector<double> w(game.action_counts[i], 0.0);
        for (int a : game.allowed_actions(s, i)) {
          w[a] = 0.05 + rng.next_double();
          total += w[a];
        }
        for (int a = 0; a < game.action_counts[i]; ++a) policy.prob(i, s, a) = w[a] / total;
      }

    const std::vector<double> lambda = {rng.uniform(0.0, 3.0)};
    const LagrangianGame lgame = build_lagrangian_game(game, lambda);

    // Evaluate the augmented rewards along the base game's chain.
    ConstrainedMarkovGame augmented = game;
    augmented.reward = lgame.augmented;
    const StationaryEvaluation folded = evaluate_stationary(augmented, policy);
    const StationaryEvaluation base = evaluate_stationary(game, policy);
    for (int i = 0; i < game.num_agents; ++i) {
      double expected = base.gains[i];
      for (int j = 0; j < game.num_constraints(); ++j)
        expected += lambda[j] * (base.constraint_values[j] - game.thresholds[j]);
      const double diff = std::abs(folded.gains[i] - expected);
      worst = std::max(worst, diff);
      ++check.items;
      if (!(diff <= check.bound)) ++check.failed_items;
    }
  }
  check.metric = worst;
  check.pass = check.failed_items == 0;
  check.detail = "per-step reward folding equals value-level folding";
  return check;
}

VerifyCheck check_rollout_unbiasedness() {
  VerifyCheck check;
  check.name = "rollout_unbiasedness";
  const envs::ShrGame shr = envs::build_shr();
  const ProductPolicy policy = make_uniform_policy(shr.game);
  // The two agents' cell parities flip in lockstep, so the uniform policy's
  // chain has two closed halves; evaluate the one the rollout actually visits.
  const int start = 0;
  const StationaryEvaluation eval = evaluate_from(shr.game, policy, start);

  const int steps = 100000;
  Rng rng(77);
  const EpochRollout roll = rollout_epoch(shr.game, policy, start, steps, rng);
  double mean = 0.0;
  for (int t = 0; t < steps; ++t) mean += roll.costs[t];
  mean /= steps;
  double variance = 0.0;
  for (int t = 0; t < steps; ++t) variance += (roll.costs[t] - mean) * (roll.costs[t] - mean);
  variance /= (steps - 1);
  const double stderr3 = 3.0 * std::sqrt(variance / steps);

  check.items = 1;
  check.metric = std::abs(mean - eval.constraint_values[0]);
  check.bound = stderr3 + 1e-3;  // slack covers the burn-in bias of one trajectory
  check.failed_items = check.metric <= check.bound ? 0 : 1;
  check.pass = check.failed_items == 0;
  check.detail = "empirical mean cost vs exact stationary value";
  return check;
}

}  // namespace

VerifyReport run_verify(bool full, double corrupt_tol) {
  VerifyReport report;
  report.checks.push_back(check_dual_update_hand_values());
  report.checks.push_back(check_oracle_equivalence(full ? 50 : 10, corrupt_tol));
  report.checks.push_back(check_danskin(full ? 100 : 20, corrupt_tol));
  report.checks.push_back(check_value_identity(full ? 50 : 20));
  if (full) report.checks.push_back(check_rollout_unbiasedness());
  for (const VerifyCheck& check : report.checks) report.all_pass = report.all_pass && check.pass;
  return report;
}

std::string verify_report_json(const VerifyReport& report) {
  nlohmann::json doc;
  doc["schema_version"] = 1;
  nlohmann::json checks = nlohmann::json::array();
  int failures = 0;
  for (const VerifyCheck& check : report.checks) {
    nlohmann::json row;
    row["name"] = check.name;
    row["pass"] = check.pass;
    row["items"] = check.items;
    row["failed_items"] = check.failed_items;
    row["metric"] = check.metric;
    row["bound"] = check.bound;
    row["detail"] = check.detail;
    checks.push_back(std::move(row));
    failures += check.failed_items;
  }
  doc["checks"] = std::move(checks);
  doc["all_pass"] = report.all_pass;
  doc["total_failed_items"] = failures;
  return doc.dump(1);
}

}  // namespace cmg::run
