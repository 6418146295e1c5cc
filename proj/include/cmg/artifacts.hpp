#ifndef CMG_ARTIFACTS_HPP
#define CMG_ARTIFACTS_HPP

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "cmg/dynamics.hpp"
#include "cmg/envs.hpp"

namespace cmg::run {

// Filesystem problem while emitting artifacts; the CLI maps this to exit 4.
struct IoError : std::runtime_error {
  explicit IoError(const std::string& message) : std::runtime_error(message) {}
};

// Shortest decimal string that parses back to exactly the same double, so
// identical runs emit identical bytes and consumers can round-trip values.
std::string format_double(double value);

std::uint64_t fnv1a64(std::span<const unsigned char> bytes);
std::uint64_t fnv1a64_file(const std::string& path);
std::string fnv1a64_hex(std::uint64_t digest);

// Per-cell results surfaced in the sweep summary.
struct CellSummary {
  double threshold = 0.0;  // NaN when the game has no constraints
  std::uint64_t seed = 0;
  std::string dir;         // cell directory name, relative to the output root
  std::vector<double> window_avg_cost;   // per constraint, last-quarter mean
  std::vector<bool> feasibility_pass;
  std::vector<double> final_avg_reward;  // per agent, last-quarter mean
  double slackness = 0.0;
  double slackness_bound = 0.0;          // eta B^2/2 + |lambda0|^2/(2 eta K)
  double max_lambda_norm = 0.0;
  std::vector<double> final_lambda;
};

// Writes lambda_trace.csv, metrics.csv, slackness.csv, occupancy.csv and
// run_manifest.json into out_root/cell_dir (created if needed) and returns
// the summary row.  config_json is the resolved run configuration embedded in
// the manifest; grid, when non-null, adds per-agent cell marginals to
// occupancy.csv; cost_gap_bound is the game's B used for the slackness bound.
CellSummary write_cell_artifacts(const std::string& out_root, const std::string& cell_dir,
                                 const EpisodeRecord& record, const std::string& config_json,
                                 const envs::ShrConfig* grid, double feasibility_tol,
                                 double cost_gap_bound);

void write_summary(const std::string& out_root, std::span<const CellSummary> cells);

}  // namespace cmg::run

#endif  // CMG_ARTIFACTS_HPP
