#include "cmg/run_config.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"

namespace cmg::run {

namespace {

using nlohmann::json;

const json* find(const json& doc, const std::string& key) {
  const auto it = doc.find(key);
  return it == doc.end() ? nullptr : &*it;
}

template <typename T>
T get_as(const json& value, const std::string& path) {
  try {
    return value.get<T>();
  } catch (const json::exception&) {
    throw ConfigError(path, "has the wrong type");
  }
}

template <typename T>
void read_opt(const json& doc, const std::string& parent, const std::string& key, T& out) {
  if (const json* v = find(doc, key)) out = get_as<T>(*v, parent + "." + key);
}

template <typename T>
T read_req(const json& doc, const std::string& parent, const std::string& key) {
  const json* v = find(doc, key);
  if (v == nullptr) throw ConfigError(parent + "." + key, "is required");
  return get_as<T>(*v, parent + "." + key);
}

void parse_env(const json& doc, RunConfig& config) {
  const json* env = find(doc, "env");
  if (env == nullptr) throw ConfigError("env", "is required");
  const std::string kind = read_req<std::string>(*env, "env", "kind");
  if (kind == "shr") {
    config.env_kind = EnvKind::shr;
    envs::ShrConfig& shr = config.shr;
    read_opt(*env, "env", "grid_side", shr.grid_side);
    read_opt(*env, "env", "hare_cells", shr.hare_cells);
    read_opt(*env, "env", "stag_cell", shr.stag_cell);
    read_opt(*env, "env", "rest_cell", shr.rest_cell);
    read_opt(*env, "env", "stag_reward", shr.stag_reward);
    read_opt(*env, "env", "hare_reward", shr.hare_reward);
    read_opt(*env, "env", "thresholds", config.shr_thresholds);
    read_opt(*env, "env", "control_cost_weight", shr.control_cost_weight);
    read_opt(*env, "env", "natural_stay_prob", shr.natural_stay_prob);
    if (const json* sign = find(*env, "control_cost_sign")) {
      const std::string s = get_as<std::string>(*sign, "env.control_cost_sign");
      if (s == "penalty")
        shr.control_cost_sign = envs::ControlCostSign::penalty;
      else if (s == "bonus")
        shr.control_cost_sign = envs::ControlCostSign::bonus;
      else
        throw ConfigError("env.control_cost_sign", "must be 'penalty' or 'bonus'");
    }
    if (config.shr_thresholds.empty())
      throw ConfigError("env.thresholds", "must list at least one threshold");
  } else if (kind == "file") {
    config.env_kind = EnvKind::file;
    config.game_path = read_req<std::string>(*env, "env", "path");
  } else if (kind == "synthetic") {
    config.env_kind = EnvKind::synthetic;
    envs::ChainGameConfig& syn = config.synthetic;
    read_opt(*env, "env", "num_states", syn.num_states);
    read_opt(*env, "env", "action_counts", syn.action_counts);
    read_opt(*env, "env", "num_constraints", syn.num_constraints);
    read_opt(*env, "env", "identical_interest", syn.identical_interest);
    read_opt(*env, "env", "slater_margin", syn.slater_margin);
    read_opt(*env, "env", "game_seed", syn.seed);
  } else {
    throw ConfigError("env.kind", "must be 'shr', 'file', or 'synthetic'");
  }
}

void parse_run(const json& doc, RunConfig& config) {
  const json* run = find(doc, "run");
  if (run == nullptr) throw ConfigError("run", "is required");
  config.epochs = read_req<int>(*run, "run", "epochs");
  config.epoch_length = read_req<int>(*run, "run", "epoch_length");
  config.eta = read_req<double>(*run, "run", "eta");
  config.lambda0 = read_req<std::vector<double>>(*run, "run", "lambda0");
  read_opt(*run, "run", "feasibility_tol", config.feasibility_tol);

  if (config.epochs < 1) throw ConfigError("run.epochs", "must be at least 1");
  if (config.epoch_length < 1) throw ConfigError("run.epoch_length", "must be at least 1");
  if (!(config.eta > 0.0)) throw ConfigError("run.eta", "must be positive");
  for (double v : config.lambda0)
    if (!(v >= 0.0)) throw ConfigError("run.lambda0", "entries must be non-negative");
  if (!(config.feasibility_tol >= 0.0))
    throw ConfigError("run.feasibility_tol", "must be non-negative");

  if (const json* init = find(*run, "initial_state")) {
    const std::string mode = read_req<std::string>(*init, "run.initial_state", "mode");
    if (mode == "random") {
      config.init_mode = InitMode::random;
    } else if (mode == "random_aligned") {
      config.init_mode = InitMode::random_aligned;
    } else if (mode == "fixed") {
      config.init_mode = InitMode::fixed;
      if (const json* cells = find(*init, "cells")) {
        config.initial_cells =
            get_as<std::vector<int>>(*cells, "run.initial_state.cells");
        if (config.initial_cells.size() != 2)
          throw ConfigError("run.initial_state.cells", "must list exactly two cells");
      } else {
        config.initial_state = read_req<int>(*init, "run.initial_state", "state");
      }
    } else {
      throw ConfigError("run.initial_state.mode", "must be 'fixed', 'random', or 'random_aligned'");
    }
  }
}

void parse_oracle(const json& doc, RunConfig& config) {
  const json* oracle = find(doc, "oracle");
  if (oracle == nullptr) return;  // defaults apply
  if (const json* kind = find(*oracle, "kind")) {
    const std::string k = get_as<std::string>(*kind, "oracle.kind");
    if (k == "rvi")
      config.oracle.kind = OracleKind::rvi;
    else if (k == "optimistic_pi")
      config.oracle.kind = OracleKind::optimistic_pi;
    else if (k == "brute_force")
      config.oracle.kind = OracleKind::brute_force;
    else
      throw ConfigError("oracle.kind", "must be 'rvi', 'optimistic_pi', or 'brute_force'");
  }
  read_opt(*oracle, "oracle", "tol", config.oracle.config.tol);
  read_opt(*oracle, "oracle", "max_iter", config.oracle.config.max_iter);
  read_opt(*oracle, "oracle", "aperiodicity_tau", config.oracle.config.aperiodicity_tau);
  read_opt(*oracle, "oracle", "ref_state", config.oracle.config.ref_state);
  read_opt(*oracle, "oracle", "eval_sweeps", config.oracle.eval_sweeps);
  read_opt(*oracle, "oracle", "rounds_per_epoch", config.oracle.rounds_per_epoch);
  read_opt(*oracle, "oracle", "warm_start", config.oracle.warm_start);
  if (!(config.oracle.config.tol > 0.0)) throw ConfigError("oracle.tol", "must be positive");
  if (config.oracle.config.max_iter < 1)
    throw ConfigError("oracle.max_iter", "must be at least 1");
  if (!(config.oracle.config.aperiodicity_tau > 0.0) ||
      config.oracle.config.aperiodicity_tau > 1.0)
    throw ConfigError("oracle.aperiodicity_tau", "must lie in (0, 1]");
  if (config.oracle.eval_sweeps < 1)
    throw ConfigError("oracle.eval_sweeps", "must be at least 1");
  if (config.oracle.rounds_per_epoch < 0)
    throw ConfigError("oracle.rounds_per_epoch", "must be non-negative");
}

}  // namespace

RunConfig parse_run_config_text(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError("(document)", std::string("invalid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("(document)", "must be a JSON object");

  const json* version = find(doc, "schema_version");
  if (version == nullptr) throw ConfigError("schema_version", "is required");
  if (get_as<int>(*version, "schema_version") != 1)
    throw ConfigError("schema_version", "unsupported version (expected 1)");

  RunConfig config;
  parse_env(doc, config);
  parse_run(doc, config);
  parse_oracle(doc, config);

  if (const json* seeds = find(doc, "seeds"))
    config.seeds = get_as<std::vector<std::uint64_t>>(*seeds, "seeds");
  if (config.seeds.empty()) throw ConfigError("seeds", "must list at least one seed");
  read_opt(doc, "(document)", "output_dir", config.output_dir);
  read_opt(doc, "(document)", "threads", config.threads);
  if (config.threads < 0) throw ConfigError("threads", "must be non-negative");
  return config;
}

RunConfig parse_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("(document)", "cannot open " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_run_config_text(buffer.str());
}

std::string serialize_run_config(const RunConfig& config) {
  json doc;
  doc["schema_version"] = 1;

  json env;
  switch (config.env_kind) {
    case EnvKind::shr: {
      env["kind"] = "shr";
      env["grid_side"] = config.shr.grid_side;
      env["hare_cells"] = config.shr.hare_cells;
      env["stag_cell"] = config.shr.stag_cell;
      env["rest_cell"] = config.shr.rest_cell;
      env["stag_reward"] = config.shr.stag_reward;
      env["hare_reward"] = config.shr.hare_reward;
      env["thresholds"] = config.shr_thresholds;
      env["control_cost_weight"] = config.shr.control_cost_weight;
      env["control_cost_sign"] =
          (config.shr.control_cost_sign == envs::ControlCostSign::penalty) ? "penalty" : "bonus";
      env["natural_stay_prob"] = config.shr.natural_stay_prob;
      break;
    }
    case EnvKind::file:
      env["kind"] = "file";
      env["path"] = config.game_path;
      break;
    case EnvKind::synthetic:
      env["kind"] = "synthetic";
      env["num_states"] = config.synthetic.num_states;
      env["action_counts"] = config.synthetic.action_counts;
      env["num_constraints"] = config.synthetic.num_constraints;
      env["identical_interest"] = config.synthetic.identical_interest;
      env["slater_margin"] = config.synthetic.slater_margin;
      env["game_seed"] = config.synthetic.seed;
      break;
  }
  doc["env"] = std::move(env);

  json run;
  run["epochs"] = config.epochs;
  run["epoch_length"] = config.epoch_length;
  run["eta"] = config.eta;
  run["lambda0"] = config.lambda0;
  run["feasibility_tol"] = config.feasibility_tol;
  json init;
  if (config.init_mode == InitMode::random) {
    init["mode"] = "random";
  } else if (config.init_mode == InitMode::random_aligned) {
    init["mode"] = "random_aligned";
  } else {
    init["mode"] = "fixed";
    if (!config.initial_cells.empty())
      init["cells"] = config.initial_cells;
    else
      init["state"] = config.initial_state;
  }
  run["initial_state"] = std::move(init);
  doc["run"] = std::move(run);

  json oracle;
  switch (config.oracle.kind) {
    case OracleKind::rvi: oracle["kind"] = "rvi"; break;
    case OracleKind::optimistic_pi: oracle["kind"] = "optimistic_pi"; break;
    case OracleKind::brute_force: oracle["kind"] = "brute_force"; break;
  }
  oracle["tol"] = config.oracle.config.tol;
  oracle["max_iter"] = config.oracle.config.max_iter;
  oracle["aperiodicity_tau"] = config.oracle.config.aperiodicity_tau;
  oracle["ref_state"] = config.oracle.config.ref_state;
  oracle["eval_sweeps"] = config.oracle.eval_sweeps;
  oracle["rounds_per_epoch"] = config.oracle.rounds_per_epoch;
  oracle["warm_start"] = config.oracle.warm_start;
  doc["oracle"] = std::move(oracle);

  doc["seeds"] = config.seeds;
  doc["output_dir"] = config.output_dir;
  doc["threads"] = config.threads;
  return doc.dump(1);
}

bool operator==(const RunConfig& a, const RunConfig& b) {
  return serialize_run_config(a) == serialize_run_config(b);
}

}  // namespace cmg::run
