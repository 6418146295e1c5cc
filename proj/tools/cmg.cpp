// Command-line front end: `run` executes a configured sweep and writes CSV
// artifacts, `verify` runs the built-in property suites, `inspect` prints a
// cell's manifest.  Exit codes: 0 success, 2 configuration error (the
// offending field is named), 3 oracle non-convergence, 4 I/O failure.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "cmg/runner.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitOracle = 3;
constexpr int kExitIo = 4;

struct RunOptions {
  std::string config_path;
  std::string out_override;
  std::uint64_t seed_override = 0;
  bool seed_given = false;
  int threads_override = -1;
};

int do_run(const RunOptions& options) {
  cmg::run::RunConfig config = cmg::run::parse_run_config(options.config_path);
  if (!options.out_override.empty()) config.output_dir = options.out_override;
  if (options.seed_given) config.seeds = {options.seed_override};
  if (options.threads_override >= 0) config.threads = options.threads_override;

  const cmg::run::SweepResult result = cmg::run::run_sweep(config);
  for (const cmg::run::CellSummary& cell : result.cells) {
    std::cout << cell.dir << ": window avg cost";
    for (double v : cell.window_avg_cost) std::cout << ' ' << cmg::run::format_double(v);
    std::cout << ", feasible " << (cell.feasibility_pass.empty()
                                       ? "n/a"
                                       : (std::find(cell.feasibility_pass.begin(),
                                                    cell.feasibility_pass.end(),
                                                    false) == cell.feasibility_pass.end()
                                              ? "yes"
                                              : "no"))
              << ", max |lambda|_1 " << cmg::run::format_double(cell.max_lambda_norm) << '\n';
  }
  std::cout << "summary: "
            << (std::filesystem::path(result.output_dir) / "summary.json").string() << '\n';
  std::cout << "feasibility " << (result.all_feasibility_pass ? "PASS" : "FAIL") << '\n';
  return 0;
}

int do_verify(const std::string& level, double corrupt_tol, const std::string& report_path) {
  const cmg::run::VerifyReport report = cmg::run::run_verify(level == "full", corrupt_tol);
  const std::string rendered = cmg::run::verify_report_json(report);
  if (report_path.empty()) {
    std::cout << rendered << '\n';
  } else {
    std::ofstream out(report_path);
    if (!out) throw cmg::run::IoError("cannot open " + report_path + " for writing");
    out << rendered << '\n';
    if (!out) throw cmg::run::IoError("write failed for " + report_path);
    std::cout << "report written to " << report_path << '\n';
  }
  for (const cmg::run::VerifyCheck& check : report.checks)
    std::cout << (check.pass ? "[ok]   " : "[FAIL] ") << check.name << " (" << check.items
              << " items, " << check.failed_items << " failed)\n";
  return 0;  // failures are report entries, not process errors
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Constrained Markov game primal-dual runner"};
  app.require_subcommand(1);

  RunOptions run_options;
  CLI::App* run_cmd = app.add_subcommand("run", "Execute a sweep described by a config file");
  run_cmd->add_option("config", run_options.config_path, "Run configuration (JSON)")
      ->required();
  run_cmd->add_option("--out", run_options.out_override, "Override the output directory");
  CLI::Option* seed_opt =
      run_cmd->add_option("--seed", run_options.seed_override,
                          "Replace the config's seed list with a single seed");
  run_cmd->add_option("--threads", run_options.threads_override,
                      "Worker threads (0 = one per hardware thread)");

  std::string level = "quick";
  double corrupt_tol = 0.0;
  std::string report_path;
  CLI::App* verify_cmd = app.add_subcommand("verify", "Run the built-in property suites");
  verify_cmd->add_option("--level", level, "Suite size")
      ->check(CLI::IsMember({"quick", "full"}));
  verify_cmd->add_option("--report", report_path, "Write the JSON report to a file");
  verify_cmd
      ->add_option("--corrupt-tol", corrupt_tol,
                   "Test hook: replace the solver tolerance to force equivalence failures")
      ->check(CLI::PositiveNumber);

  std::string inspect_dir;
  CLI::App* inspect_cmd = app.add_subcommand("inspect", "Print a cell's manifest summary");
  inspect_cmd->add_option("dir", inspect_dir, "Artifact directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run_cmd->parsed()) {
      run_options.seed_given = seed_opt->count() > 0;
      return do_run(run_options);
    }
    if (verify_cmd->parsed()) return do_verify(level, corrupt_tol, report_path);
    if (inspect_cmd->parsed()) {
      std::cout << cmg::run::inspect_artifact_dir(inspect_dir);
      return 0;
    }
  } catch (const cmg::run::ConfigError& e) {
    std::cerr << "config error at " << e.field << ": " << e.what() << '\n';
    return kExitConfig;
  } catch (const cmg::OracleFailure& e) {
    std::cerr << "oracle failure: " << e.what() << '\n';
    return kExitOracle;
  } catch (const cmg::run::IoError& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
