#ifndef CMG_RUNNER_HPP
#define CMG_RUNNER_HPP

#include <string>
#include <vector>

#include "cmg/artifacts.hpp"
#include "cmg/run_config.hpp"

namespace cmg::run {

struct SweepResult {
  std::vector<CellSummary> cells;  // ordered by (threshold index, seed index)
  std::string output_dir;
  bool all_feasibility_pass = true;
};

// Executes every (threshold, seed) cell of the sweep — in parallel when the
// config allows — writing each cell's artifacts into its own directory and a
// summary.json at the output root.  Throws ConfigError / OracleFailure /
// IoError for the corresponding CLI exit codes.
SweepResult run_sweep(const RunConfig& config);

// Reads a cell directory's run_manifest.json, re-derives the artifact
// checksums, and renders a human-readable account.  Throws IoError when the
// directory or manifest is unreadable.
std::string inspect_artifact_dir(const std::string& dir);

struct VerifyCheck {
  std::string name;
  bool pass = false;
  int items = 0;         // trials executed
  int failed_items = 0;  // trials outside tolerance
  double metric = 0.0;   // worst observed value
  double bound = 0.0;    // tolerance it is compared against
  std::string detail;
};

struct VerifyReport {
  std::vector<VerifyCheck> checks;
  bool all_pass = true;
};

// Self-contained property suites: dual-update hand values, solver-vs-
// enumeration equivalence, the dual subgradient inequality, reward-folding
// value identity, and (full level) rollout unbiasedness statistics.
// corrupt_tol > 0 deliberately replaces the solver tolerance — a test hook
// demonstrating that broken solves surface as failed report entries.
VerifyReport run_verify(bool full, double corrupt_tol = 0.0);

std::string verify_report_json(const VerifyReport& report);

}  // namespace cmg::run

#endif  // CMG_RUNNER_HPP
