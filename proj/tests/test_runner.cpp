#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "cmg/artifacts.hpp"
#include "cmg/envs.hpp"
#include "cmg/run_config.hpp"
#include "cmg/runner.hpp"
#include "doctest.h"

using namespace cmg;
using namespace cmg::run;

namespace {

std::filesystem::path fresh_dir(const char* name) {
  const std::filesystem::path dir = std::filesystem::temp_directory_path() / name;
  std::filesystem::remove_all(dir);
  return dir;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

std::string tiny_shr_config(const std::string& out_dir) {
  return R"({
    "schema_version": 1,
    "env": {"kind": "shr", "thresholds": [0.5]},
    "run": {
      "epochs": 2, "epoch_length": 3, "eta": 0.1, "lambda0": [5.0],
      "initial_state": {"mode": "random_aligned"}
    },
    "seeds": [1],
    "output_dir": ")" + out_dir + R"(",
    "threads": 1
  })";
}

}  // namespace

TEST_CASE("format_double emits shortest forms that parse back exactly") {
  CHECK(format_double(1.0) == "1");
  CHECK(format_double(0.5) == "0.5");
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(-2.25) == "-2.25");
  const std::vector<double> tricky = {1.0 / 3.0,       0.1 + 0.2, 1e300,   5e-324,
                                      -0.0,            6.02e23,   1e-17,   123456789.123456789,
                                      0.30000000000000004};
  for (double value : tricky) {
    const std::string text = format_double(value);
    const double back = std::strtod(text.c_str(), nullptr);
    CHECK(back == value);
  }
}

TEST_CASE("fnv1a64 matches published test vectors") {
  const auto digest = [](const std::string& s) {
    return fnv1a64({reinterpret_cast<const unsigned char*>(s.data()), s.size()});
  };
  CHECK(digest("") == 0xcbf29ce484222325ULL);
  CHECK(digest("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(digest("foobar") == 0x85944171f73967e8ULL);
  CHECK(fnv1a64_hex(0xcbf29ce484222325ULL) == "fnv1a64:cbf29ce484222325");
  CHECK(fnv1a64_hex(0x1ULL) == "fnv1a64:0000000000000001");  // zero-padded to 16 digits

  const std::filesystem::path path = std::filesystem::temp_directory_path() / "cmg_fnv.txt";
  std::ofstream(path, std::ios::binary) << "foobar";
  CHECK(fnv1a64_file(path.string()) == digest("foobar"));
  std::filesystem::remove(path);
}

TEST_CASE("run configs parse with defaults and round-trip through JSON") {
  // epochs, epoch_length, eta and lambda0 are required; everything else
  // falls back to defaults.
  const RunConfig minimal = parse_run_config_text(R"({
    "schema_version": 1,
    "env": {"kind": "shr"},
    "run": {"epochs": 200, "epoch_length": 100, "eta": 0.1, "lambda0": [5.0]}
  })");
  CHECK(minimal.env_kind == EnvKind::shr);
  CHECK(minimal.shr_thresholds == std::vector<double>{0.25, 0.5, 0.75});
  CHECK(minimal.epochs == 200);
  CHECK(minimal.epoch_length == 100);
  CHECK(minimal.eta == 0.1);
  CHECK(minimal.lambda0 == std::vector<double>{5.0});
  CHECK(minimal.init_mode == InitMode::random);
  CHECK(minimal.feasibility_tol == 0.05);
  CHECK(minimal.seeds == std::vector<std::uint64_t>{1, 2, 3, 4, 5});
  CHECK(minimal.oracle.kind == OracleKind::rvi);

  RunConfig full;
  full.env_kind = EnvKind::shr;
  full.shr.rest_threshold = 0.25;
  full.shr.control_cost_weight = 1.5;
  full.shr_thresholds = {0.25, 0.75};
  full.epochs = 12;
  full.epoch_length = 7;
  full.eta = 0.05;
  full.lambda0 = {2.5};
  full.init_mode = InitMode::random_aligned;
  full.feasibility_tol = 0.1;
  full.oracle.kind = OracleKind::optimistic_pi;
  full.oracle.eval_sweeps = 9;
  full.oracle.rounds_per_epoch = 2;
  full.oracle.warm_start = false;
  full.oracle.config.tol = 1e-7;
  full.oracle.config.ref_state = 3;
  full.seeds = {9, 10};
  full.output_dir = "/tmp/anywhere";
  full.threads = 2;
  const RunConfig back = parse_run_config_text(serialize_run_config(full));
  CHECK(back == full);

  RunConfig cells;
  cells.init_mode = InitMode::fixed;
  cells.initial_cells = {12, 14};
  const RunConfig cells_back = parse_run_config_text(serialize_run_config(cells));
  CHECK(cells_back == cells);

  RunConfig synth;
  synth.env_kind = EnvKind::synthetic;
  synth.synthetic.seed = 17;
  synth.synthetic.num_states = 3;
  const RunConfig synth_back = parse_run_config_text(serialize_run_config(synth));
  CHECK(synth_back == synth);
}

TEST_CASE("config errors carry the offending field path") {
  const auto field_of = [](const std::string& text) {
    try {
      parse_run_config_text(text);
      return std::string("(no error)");
    } catch (const ConfigError& e) {
      return e.field;
    }
  };
  // Splices replacements into an otherwise-complete document so each case
  // trips exactly the violation it targets.
  const auto doc_with = [](const std::string& run_body, const std::string& extra = "") {
    return R"({"schema_version": 1, "env": {"kind": "shr"}, "run": {)" + run_body + "}" +
           (extra.empty() ? "" : ", " + extra) + "}";
  };
  const std::string run_ok = R"("epochs": 5, "epoch_length": 3, "eta": 0.1, "lambda0": [1])";

  CHECK(field_of("not json at all") == "(document)");
  CHECK(field_of(R"({"env": {"kind": "shr"}})") == "schema_version");
  CHECK(field_of(R"({"schema_version": 2, "env": {"kind": "shr"}})") == "schema_version");
  CHECK(field_of(R"({"schema_version": 1, "run": {}})") == "env");
  CHECK(field_of(R"({"schema_version": 1, "env": {"kind": "maze"}})") == "env.kind");
  CHECK(field_of(doc_with("")) == "run.epochs");
  CHECK(field_of(doc_with(R"("epochs": 0, "epoch_length": 3, "eta": 0.1, "lambda0": [1])")) ==
        "run.epochs");
  CHECK(field_of(doc_with(R"("epochs": 5, "epoch_length": 3, "eta": 0, "lambda0": [1])")) ==
        "run.eta");
  CHECK(field_of(doc_with(R"("epochs": 5, "epoch_length": 3, "eta": 0.1, "lambda0": [-1])")) ==
        "run.lambda0");
  CHECK(field_of(doc_with(run_ok + R"(, "initial_state": {"mode": "sideways"})")) ==
        "run.initial_state.mode");
  CHECK(field_of(doc_with(run_ok + R"(, "initial_state": {"mode": "fixed", "cells": [3]})")) ==
        "run.initial_state.cells");
  CHECK(field_of(doc_with(run_ok, R"("seeds": [])")) == "seeds");
  CHECK(field_of(doc_with(run_ok, R"("oracle": {"kind": "sat"})")) == "oracle.kind");
  CHECK(field_of(doc_with(run_ok, R"("threads": -1)")) == "threads");
}

TEST_CASE("sweep writes per-cell artifacts and a summary, deterministically") {
  const std::filesystem::path dir_a = fresh_dir("cmg_sweep_a");
  const std::filesystem::path dir_b = fresh_dir("cmg_sweep_b");

  const RunConfig config_a = parse_run_config_text(tiny_shr_config(dir_a.string()));
  const SweepResult result = run_sweep(config_a);
  REQUIRE(result.cells.size() == 1);
  CHECK(result.cells[0].threshold == 0.5);
  CHECK(result.cells[0].seed == 1);

  const std::filesystem::path cell = dir_a / result.cells[0].dir;
  for (const char* name :
       {"lambda_trace.csv", "metrics.csv", "slackness.csv", "occupancy.csv",
        "run_manifest.json"})
    CHECK(std::filesystem::exists(cell / name));
  CHECK(std::filesystem::exists(dir_a / "summary.json"));

  // Identical config + seed => byte-identical artifacts.
  const RunConfig config_b = parse_run_config_text(tiny_shr_config(dir_b.string()));
  const SweepResult again = run_sweep(config_b);
  REQUIRE(again.cells.size() == 1);
  const std::filesystem::path cell_b = dir_b / again.cells[0].dir;
  for (const char* name :
       {"lambda_trace.csv", "metrics.csv", "slackness.csv", "occupancy.csv"})
    CHECK(read_file(cell / name) == read_file(cell_b / name));

  // Aligned random starts keep the whole trajectory in the aligned half:
  // every visited state in occupancy.csv belongs to it.
  envs::ShrConfig shr;
  const std::vector<int> aligned = envs::shr_aligned_states(shr);
  std::istringstream occupancy(read_file(cell / "occupancy.csv"));
  std::string line;
  std::getline(occupancy, line);
  CHECK(line == "kind,state,agent,row,col,count");
  int visited = 0;
  while (std::getline(occupancy, line)) {
    if (line.rfind("state,", 0) != 0) continue;
    const std::size_t second = line.find(',', 6);
    const int state = std::stoi(line.substr(6, second - 6));
    const long long count = std::stoll(line.substr(line.rfind(',') + 1));
    if (count > 0) {
      ++visited;
      CHECK(std::binary_search(aligned.begin(), aligned.end(), state));
    }
  }
  CHECK(visited > 0);

  // The inspector validates checksums, and flags tampering.
  const std::string report = inspect_artifact_dir(cell.string());
  CHECK(report.find("ok") != std::string::npos);
  CHECK(report.find("MISMATCH") == std::string::npos);
  std::ofstream(cell / "metrics.csv", std::ios::app) << "tampered\n";
  const std::string tampered = inspect_artifact_dir(cell.string());
  CHECK(tampered.find("MISMATCH") != std::string::npos);

  std::filesystem::remove_all(dir_a);
  std::filesystem::remove_all(dir_b);
}

TEST_CASE("synthetic sweeps run one cell per seed, in parallel") {
  const std::filesystem::path dir = fresh_dir("cmg_sweep_synth");
  RunConfig config;
  config.env_kind = EnvKind::synthetic;
  config.synthetic.seed = 4;
  config.epochs = 3;
  config.epoch_length = 5;
  config.lambda0 = {1.0};
  config.init_mode = InitMode::fixed;
  config.initial_state = 0;
  config.seeds = {1, 2, 3};
  config.output_dir = dir.string();
  config.threads = 3;
  const SweepResult result = run_sweep(config);
  REQUIRE(result.cells.size() == 3);
  for (const CellSummary& cell : result.cells) {
    CHECK(std::filesystem::exists(dir / cell.dir / "run_manifest.json"));
    CHECK(cell.slackness <= cell.slackness_bound + 1e-12);
  }
  // Different seeds produce different trajectories somewhere.
  CHECK(read_file(dir / result.cells[0].dir / "metrics.csv") !=
        read_file(dir / result.cells[1].dir / "metrics.csv"));
  std::filesystem::remove_all(dir);
}

TEST_CASE("aligned random starts require the grid environment") {
  const std::filesystem::path dir = fresh_dir("cmg_sweep_badmode");
  RunConfig config;
  config.env_kind = EnvKind::synthetic;
  config.epochs = 1;
  config.epoch_length = 2;
  config.lambda0 = {1.0};
  config.init_mode = InitMode::random_aligned;
  config.seeds = {1};
  config.output_dir = dir.string();
  CHECK_THROWS_AS(run_sweep(config), ConfigError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("inspector reports unreadable directories as IoError") {
  CHECK_THROWS_AS(inspect_artifact_dir("/nonexistent/cmg_nowhere"), IoError);
}

TEST_CASE("verify suites pass, and the corruption hook makes them fail") {
  const VerifyReport healthy = run_verify(false);
  CHECK(healthy.all_pass);
  for (const VerifyCheck& check : healthy.checks) {
    CHECK(check.pass);
    CHECK(check.failed_items == 0);
    CHECK(check.items > 0);
  }
  const std::string json = verify_report_json(healthy);
  CHECK(json.find("\"all_pass\": true") != std::string::npos);

  const VerifyReport broken = run_verify(false, 1e6);
  CHECK_FALSE(broken.all_pass);
  int failed = 0;
  for (const VerifyCheck& check : broken.checks) failed += check.failed_items;
  CHECK(failed > 0);
}
