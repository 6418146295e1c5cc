#include "cmg/artifacts.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "json.hpp"

namespace cmg::run {

namespace {

namespace fs = std::filesystem;

std::ofstream open_for_write(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  return out;
}

void finish_write(std::ofstream& out, const fs::path& path) {
  out.flush();
  if (!out) throw IoError("write failed for " + path.string());
}

// Mean over the last quarter of the trajectory of a step-major series with
// `width` columns; returns one mean per column.
std::vector<double> window_means(const std::vector<const EpochRollout*>& rollouts,
                                 bool use_costs, int width, long long total_steps) {
  std::vector<double> sums(width, 0.0);
  const long long window_start = (total_steps * 3) / 4;
  long long t_global = 0;
  for (const EpochRollout* roll : rollouts) {
    const std::vector<double>& series = use_costs ? roll->costs : roll->rewards;
    for (std::size_t t = 0; t < roll->states.size(); ++t, ++t_global) {
      if (t_global < window_start) continue;
      for (int c = 0; c < width; ++c) sums[c] += series[t * width + c];
    }
  }
  const double count = static_cast<double>(total_steps - window_start);
  for (double& s : sums) s /= count;
  return sums;
}

}  // namespace

std::string format_double(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc()) throw std::runtime_error("format_double: conversion failed");
  return std::string(buf, ptr);
}

std::uint64_t fnv1a64(std::span<const unsigned char> bytes) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char b : bytes) {
    hash ^= b;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

std::uint64_t fnv1a64_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path + " for checksum");
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  char buf[65536];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    const std::streamsize n = in.gcount();
    for (std::streamsize i = 0; i < n; ++i) {
      hash ^= static_cast<unsigned char>(buf[i]);
      hash *= 0x100000001b3ULL;
    }
    if (!in) break;
  }
  return hash;
}

std::string fnv1a64_hex(std::uint64_t digest) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "fnv1a64:%016llx", static_cast<unsigned long long>(digest));
  return buf;
}

CellSummary write_cell_artifacts(const std::string& out_root, const std::string& cell_dir,
                                 const EpisodeRecord& record, const std::string& config_json,
                                 const envs::ShrConfig* grid, double feasibility_tol,
                                 double cost_gap_bound) {
  const fs::path dir = fs::path(out_root) / cell_dir;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());

  const int m = static_cast<int>(record.thresholds.size());
  const int num_agents =
      record.rollouts.empty()
          ? 0
          : static_cast<int>(record.rollouts.front().rewards.size() /
                             record.rollouts.front().states.size());
  const int K = static_cast<int>(record.rollouts.size());
  long long total_steps = 0;
  for (const EpochRollout& roll : record.rollouts) total_steps += roll.states.size();

  // lambda_trace.csv: the multipliers in force during each epoch.
  {
    const fs::path path = dir / "lambda_trace.csv";
    std::ofstream out = open_for_write(path);
    out << "epoch";
    for (int j = 0; j < m; ++j) out << ",lambda_" << j;
    out << '\n';
    for (int k = 0; k < K; ++k) {
      out << k;
      for (int j = 0; j < m; ++j)
        out << ',' << format_double(record.lambda_trace[k].values[j]);
      out << '\n';
    }
    finish_write(out, path);
  }

  // metrics.csv: running averages per step.
  {
    const fs::path path = dir / "metrics.csv";
    std::ofstream out = open_for_write(path);
    out << 't';
    for (int j = 0; j < m; ++j) out << ",running_avg_cost_" << j;
    for (int i = 0; i < num_agents; ++i) out << ",running_avg_reward_" << i;
    out << '\n';
    for (long long t = 0; t < total_steps; ++t) {
      out << t;
      for (int j = 0; j < m; ++j)
        out << ','
            << format_double(record.metrics.running_avg_cost[static_cast<std::size_t>(t) * m + j]);
      for (int i = 0; i < num_agents; ++i)
        out << ','
            << format_double(
                   record.metrics.running_avg_reward[static_cast<std::size_t>(t) * num_agents + i]);
      out << '\n';
    }
    finish_write(out, path);
  }

  // slackness.csv: per-epoch partial averages of lambda' gbar.
  {
    const fs::path path = dir / "slackness.csv";
    std::ofstream out = open_for_write(path);
    out << "epoch,partial_average\n";
    for (int k = 0; k < K; ++k)
      out << k << ',' << format_double(record.metrics.slackness_partial[k]) << '\n';
    finish_write(out, path);
  }

  // occupancy.csv: joint-state visit counts, plus per-agent cell marginals on
  // grid environments.  Column order is fixed; fields that do not apply to a
  // row kind are left empty.
  {
    const fs::path path = dir / "occupancy.csv";
    std::ofstream out = open_for_write(path);
    out << "kind,state,agent,row,col,count\n";
    for (std::size_t s = 0; s < record.metrics.occupancy_counts.size(); ++s)
      out << "state," << s << ",,,," << record.metrics.occupancy_counts[s] << '\n';
    if (grid != nullptr) {
      std::vector<int> states;
      states.reserve(static_cast<std::size_t>(total_steps));
      for (const EpochRollout& roll : record.rollouts)
        states.insert(states.end(), roll.states.begin(), roll.states.end());
      const auto counts = envs::shr_cell_counts(*grid, states);
      for (int agent = 0; agent < 2; ++agent)
        for (int cell = 1; cell <= envs::shr_num_cells(*grid); ++cell) {
          const int row = (cell - 1) / grid->grid_side + 1;
          const int col = (cell - 1) % grid->grid_side + 1;
          out << "cell,," << agent << ',' << row << ',' << col << ','
              << counts[agent][cell - 1] << '\n';
        }
    }
    finish_write(out, path);
  }

  // Summary row for this cell.
  CellSummary summary;
  summary.threshold = record.thresholds.empty() ? std::nan("") : record.thresholds[0];
  summary.seed = record.seed;
  summary.dir = cell_dir;
  const FeasibilityReport feas = feasibility_curve(record, feasibility_tol);
  summary.window_avg_cost = feas.window_average;
  summary.feasibility_pass.assign(feas.pass.begin(), feas.pass.end());
  {
    std::vector<const EpochRollout*> rollouts;
    rollouts.reserve(record.rollouts.size());
    for (const EpochRollout& roll : record.rollouts) rollouts.push_back(&roll);
    summary.final_avg_reward = window_means(rollouts, false, num_agents, total_steps);
  }
  summary.slackness = slackness_metric(record);
  double lambda0_sq = 0.0;
  for (double v : record.config.lambda0) lambda0_sq += v * v;
  const double eta = record.config.step_size;
  summary.slackness_bound = eta * cost_gap_bound * cost_gap_bound / 2.0 +
                            lambda0_sq / (2.0 * eta * static_cast<double>(K));
  summary.max_lambda_norm =
      record.metrics.max_lambda_norm.empty() ? 0.0 : record.metrics.max_lambda_norm.back();
  summary.final_lambda = record.lambda_trace.back().values;

  // run_manifest.json, written last so it can checksum the CSVs.
  {
    nlohmann::json manifest;
    manifest["schema_version"] = 1;
    manifest["config"] = nlohmann::json::parse(config_json);
    manifest["seed"] = record.seed;
    if (record.thresholds.empty())
      manifest["threshold"] = nullptr;
    else
      manifest["threshold"] = record.thresholds[0];
    nlohmann::json checksums;
    for (const char* name :
         {"lambda_trace.csv", "metrics.csv", "slackness.csv", "occupancy.csv"})
      checksums[name] = fnv1a64_hex(fnv1a64_file((dir / name).string()));
    manifest["artifacts"] = std::move(checksums);

    nlohmann::json result;
    result["window_avg_cost"] = summary.window_avg_cost;
    result["feasibility_pass"] = summary.feasibility_pass;
    result["feasibility_tol"] = feasibility_tol;
    result["final_avg_reward"] = summary.final_avg_reward;
    result["slackness"] = summary.slackness;
    result["slackness_bound"] = summary.slackness_bound;
    result["max_lambda_norm"] = summary.max_lambda_norm;
    result["final_lambda"] = summary.final_lambda;
    result["epochs"] = K;
    result["total_steps"] = total_steps;
    manifest["summary"] = std::move(result);

    const fs::path path = dir / "run_manifest.json";
    std::ofstream out = open_for_write(path);
    out << manifest.dump(1) << '\n';
    finish_write(out, path);
  }
  return summary;
}

void write_summary(const std::string& out_root, std::span<const CellSummary> cells) {
  nlohmann::json doc;
  doc["schema_version"] = 1;
  bool all_pass = true;
  nlohmann::json rows = nlohmann::json::array();
  for (const CellSummary& cell : cells) {
    nlohmann::json row;
    if (std::isnan(cell.threshold))
      row["threshold"] = nullptr;
    else
      row["threshold"] = cell.threshold;
    row["seed"] = cell.seed;
    row["dir"] = cell.dir;
    row["window_avg_cost"] = cell.window_avg_cost;
    row["feasibility_pass"] = cell.feasibility_pass;
    row["final_avg_reward"] = cell.final_avg_reward;
    row["slackness"] = cell.slackness;
    row["slackness_bound"] = cell.slackness_bound;
    row["max_lambda_norm"] = cell.max_lambda_norm;
    row["final_lambda"] = cell.final_lambda;
    rows.push_back(std::move(row));
    for (bool p : cell.feasibility_pass) all_pass = all_pass && p;
  }
  doc["cells"] = std::move(rows);
  doc["all_feasibility_pass"] = all_pass;

  const fs::path path = std::filesystem::path(out_root) / "summary.json";
  std::ofstream out = open_for_write(path);
  out << doc.dump(1) << '\n';
  finish_write(out, path);
}

}  // namespace cmg::run
