#ifndef CMG_RUN_CONFIG_HPP
#define CMG_RUN_CONFIG_HPP

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "cmg/dynamics.hpp"
#include "cmg/envs.hpp"

namespace cmg::run {

// Configuration problem tied to a specific field; the CLI maps this to exit
// code 2 and prints the field path.
struct ConfigError : std::runtime_error {
  ConfigError(std::string field_arg, const std::string& message)
      : std::runtime_error(field_arg + ": " + message), field(std::move(field_arg)) {}
  std::string field;
};

enum class EnvKind { shr, file, synthetic };
// random_aligned draws uniformly from the grid world's aligned half (equal
// agent parities; see shr_aligned_states), the closed part of the state space
// where coordinated configurations are reachable.
enum class InitMode { fixed, random, random_aligned };

// One experiment sweep: an environment family, the primal-dual loop
// parameters, and the (seed x threshold) grid to run.  Serialized as JSON
// with an embedded schema version; see the README for the schema.
struct RunConfig {
  EnvKind env_kind = EnvKind::shr;

  // kind == shr: one cell per (threshold, seed); rest_threshold is taken from
  // the sweep list, the remaining ShrConfig fields apply to every cell.
  envs::ShrConfig shr;
  std::vector<double> shr_thresholds = {0.25, 0.5, 0.75};

  std::string game_path;              // kind == file
  envs::ChainGameConfig synthetic;    // kind == synthetic

  int epochs = 200;
  int epoch_length = 100;
  double eta = 0.1;
  std::vector<double> lambda0 = {5.0};
  InitMode init_mode = InitMode::random;
  int initial_state = 0;              // InitMode::fixed
  std::vector<int> initial_cells;     // shr convenience: {cell_a, cell_b}
  double feasibility_tol = 0.05;

  OracleSettings oracle;

  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
  std::string output_dir = "out";
  int threads = 0;                    // 0 = one per hardware thread, capped by cells
};

// Throws ConfigError (with the offending field path) on schema or invariant
// violations.
RunConfig parse_run_config_text(const std::string& text);
RunConfig parse_run_config(const std::string& path);

// Canonical JSON; parse(serialize(c)) reproduces c exactly.
std::string serialize_run_config(const RunConfig& config);

bool operator==(const RunConfig& a, const RunConfig& b);

}  // namespace cmg::run

#endif  // CMG_RUN_CONFIG_HPP
