#include "cmg/game.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace cmg {

namespace {

std::string row_label(int state, int ja) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "(s=%d, a=%d)", state, ja);
  return buf;
}

}  // namespace

ConstrainedMarkovGame make_game(int num_states, std::vector<int> action_counts,
                                int num_constraints) {
  if (num_states < 1) throw std::invalid_argument("make_game: need at least one state");
  if (action_counts.empty()) throw std::invalid_argument("make_game: need at least one agent");
  for (int c : action_counts)
    if (c < 1 || c > 32)
      throw std::invalid_argument("make_game: action counts must be in [1, 32]");
  if (num_constraints < 0) throw std::invalid_argument("make_game: negative constraint count");

  ConstrainedMarkovGame g;
  g.num_states = num_states;
  g.num_agents = static_cast<int>(action_counts.size());
  g.action_counts = std::move(action_counts);
  g.thresholds.assign(num_constraints, 0.0);
  const std::size_t cells = static_cast<std::size_t>(num_states) * g.num_joint_actions();
  g.reward.assign(cells * g.num_agents, 0.0);
  g.cost.assign(cells * num_constraints, 0.0);
  g.kernel.assign(cells, {});
  std::uint32_t all = 0;
  g.allowed_bits.assign(static_cast<std::size_t>(num_states) * g.num_agents, 0);
  for (int s = 0; s < num_states; ++s)
    for (int i = 0; i < g.num_agents; ++i) {
      all = (g.action_counts[i] == 32) ? ~0u : ((1u << g.action_counts[i]) - 1u);
      g.allowed_bits[static_cast<std::size_t>(s) * g.num_agents + i] = all;
    }
  return g;
}

GameBounds compute_bounds(const ConstrainedMarkovGame& game) {
  GameBounds b;
  for (double r : game.reward) b.reward_bound = std::max(b.reward_bound, std::abs(r));
  b.per_constraint_gap.assign(game.num_constraints(), 0.0);
  const int ja_count = game.num_joint_actions();
  for (int j = 0; j < game.num_constraints(); ++j) {
    double gap = 0.0;
    for (int s = 0; s < game.num_states; ++s)
      for (int a = 0; a < ja_count; ++a)
        gap = std::max(gap, std::abs(game.cost_at(j, s, a) - game.thresholds[j]));
    b.per_constraint_gap[j] = gap;
    b.cost_gap_bound = std::max(b.cost_gap_bound, gap);
  }
  return b;
}

ValidationReport validate_game(const ConstrainedMarkovGame& game, double tol) {
  ValidationReport report;
  auto flag = [&report](const std::string& msg) { report.violations.push_back(msg); };

  if (game.num_states < 1) flag("game has no states");
  if (game.num_agents < 1) flag("game has no agents");
  if (static_cast<int>(game.action_counts.size()) != game.num_agents)
    flag("action_counts size does not match num_agents");
  for (int i = 0; i < static_cast<int>(game.action_counts.size()); ++i)
    if (game.action_counts[i] < 1 || game.action_counts[i] > 32)
      flag("agent " + std::to_string(i) + " has action count outside [1, 32]");
  if (!report.violations.empty()) return report;  // shape errors make the rest unreadable

  const std::size_t cells = static_cast<std::size_t>(game.num_states) * game.num_joint_actions();
  if (game.reward.size() != cells * game.num_agents) flag("reward table has wrong size");
  if (game.cost.size() != cells * game.num_constraints()) flag("cost table has wrong size");
  if (game.kernel.size() != cells) flag("kernel has wrong size");
  if (game.allowed_bits.size() != static_cast<std::size_t>(game.num_states) * game.num_agents)
    flag("allowed-action mask has wrong size");
  if (!report.violations.empty()) return report;

  for (double r : game.reward)
    if (!std::isfinite(r)) {
      flag("reward table contains a non-finite entry");
      break;
    }
  for (double c : game.cost)
    if (!std::isfinite(c)) {
      flag("cost table contains a non-finite entry");
      break;
    }
  for (double b : game.thresholds)
    if (!std::isfinite(b)) {
      flag("threshold vector contains a non-finite entry");
      break;
    }

  const int ja_count = game.num_joint_actions();
  for (int s = 0; s < game.num_states; ++s) {
    for (int i = 0; i < game.num_agents; ++i)
      if (game.allowed_actions(s, i).empty())
        flag("agent " + std::to_string(i) + " has no allowed action in state " +
             std::to_string(s));
    for (int a = 0; a < ja_count; ++a) {
      const auto& row = game.kernel_row(s, a);
      if (row.empty()) {
        flag("kernel row " + row_label(s, a) + " is empty");
        continue;
      }
      double sum = 0.0;
      for (const auto& [next, prob] : row) {
        if (next < 0 || next >= game.num_states)
          flag("kernel row " + row_label(s, a) + " targets invalid state " +
               std::to_string(next));
        if (!(prob >= 0.0) || !std::isfinite(prob))
          flag("kernel row " + row_label(s, a) + " has a negative or non-finite probability");
        sum += prob;
      }
      if (std::abs(sum - 1.0) > tol)
        flag("kernel row " + row_label(s, a) + " sums to " + std::to_string(sum));
    }
  }

  if (report.violations.empty()) report.bounds = compute_bounds(game);
  return report;
}

void save_game(const ConstrainedMarkovGame& game, const std::string& path) {
  nlohmann::json doc;
  doc["schema_version"] = 1;
  doc["num_states"] = game.num_states;
  doc["num_agents"] = game.num_agents;
  doc["action_counts"] = game.action_counts;
  doc["thresholds"] = game.thresholds;

  const int ja_count = game.num_joint_actions();
  auto table3d = [&](const std::vector<double>& flat, int outer) {
    nlohmann::json out = nlohmann::json::array();
    std::size_t idx = 0;
    for (int o = 0; o < outer; ++o) {
      nlohmann::json per_state = nlohmann::json::array();
      for (int s = 0; s < game.num_states; ++s) {
        nlohmann::json row = nlohmann::json::array();
        for (int a = 0; a < ja_count; ++a) row.push_back(flat[idx++]);
        per_state.push_back(std::move(row));
      }
      out.push_back(std::move(per_state));
    }
    return out;
  };
  doc["reward"] = table3d(game.reward, game.num_agents);
  doc["cost"] = table3d(game.cost, game.num_constraints());

  nlohmann::json allowed = nlohmann::json::array();
  for (int s = 0; s < game.num_states; ++s) {
    nlohmann::json per_agent = nlohmann::json::array();
    for (int i = 0; i < game.num_agents; ++i) per_agent.push_back(game.allowed_actions(s, i));
    allowed.push_back(std::move(per_agent));
  }
  doc["allowed_actions"] = std::move(allowed);

  bool deterministic = true;
  for (const auto& row : game.kernel)
    if (row.size() != 1 || row[0].second != 1.0) {
      deterministic = false;
      break;
    }
  nlohmann::json kernel;
  if (deterministic) {
    kernel["type"] = "deterministic";
    nlohmann::json next = nlohmann::json::array();
    for (const auto& row : game.kernel) next.push_back(row[0].first);
    kernel["next"] = std::move(next);
  } else {
    kernel["type"] = "sparse";
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& row : game.kernel) {
      nlohmann::json entries = nlohmann::json::array();
      for (const auto& [next, prob] : row) entries.push_back({next, prob});
      rows.push_back(std::move(entries));
    }
    kernel["rows"] = std::move(rows);
  }
  doc["kernel"] = std::move(kernel);

  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_game: cannot open " + path);
  out << doc.dump(1) << '\n';
  if (!out) throw std::runtime_error("save_game: write failed for " + path);
}

ConstrainedMarkovGame load_game(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_game: cannot open " + path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("load_game: " + path + " is not valid JSON: " + e.what());
  }

  auto require = [&doc, &path](const char* key) -> const nlohmann::json& {
    if (!doc.contains(key))
      throw std::runtime_error("load_game: " + path + " is missing field: " + key);
    return doc[key];
  };
  if (require("schema_version").get<int>() != 1)
    throw std::runtime_error("load_game: unsupported schema_version in " + path);

  ConstrainedMarkovGame g =
      make_game(require("num_states").get<int>(),
                require("action_counts").get<std::vector<int>>(),
                static_cast<int>(require("thresholds").size()));
  if (g.num_agents != require("num_agents").get<int>())
    throw std::runtime_error("load_game: num_agents disagrees with action_counts in " + path);
  g.thresholds = doc["thresholds"].get<std::vector<double>>();

  const int ja_count = g.num_joint_actions();
  auto read3d = [&](const nlohmann::json& table, int outer, std::vector<double>& flat,
                    const char* name) {
    if (static_cast<int>(table.size()) != outer)
      throw std::runtime_error(std::string("load_game: bad outer size for ") + name);
    std::size_t idx = 0;
    for (const auto& per_state : table) {
      if (static_cast<int>(per_state.size()) != g.num_states)
        throw std::runtime_error(std::string("load_game: bad state count in ") + name);
      for (const auto& row : per_state) {
        if (static_cast<int>(row.size()) != ja_count)
          throw std::runtime_error(std::string("load_game: bad action count in ") + name);
        for (const auto& v : row) flat[idx++] = v.get<double>();
      }
    }
  };
  read3d(require("reward"), g.num_agents, g.reward, "reward");
  read3d(require("cost"), g.num_constraints(), g.cost, "cost");

  if (doc.contains("allowed_actions")) {
    const auto& allowed = doc["allowed_actions"];
    if (static_cast<int>(allowed.size()) != g.num_states)
      throw std::runtime_error("load_game: allowed_actions has wrong state count");
    for (int s = 0; s < g.num_states; ++s) {
      if (static_cast<int>(allowed[s].size()) != g.num_agents)
        throw std::runtime_error("load_game: allowed_actions has wrong agent count");
      for (int i = 0; i < g.num_agents; ++i) {
        for (int a = 0; a < g.action_counts[i]; ++a) g.set_action_allowed(s, i, a, false);
        for (const auto& a : allowed[s][i]) {
          const int action = a.get<int>();
          if (action < 0 || action >= g.action_counts[i])
            throw std::runtime_error("load_game: allowed action id out of range");
          g.set_action_allowed(s, i, action, true);
        }
      }
    }
  }

  const auto& kernel = require("kernel");
  const std::string type = kernel.at("type").get<std::string>();
  if (type == "deterministic") {
    const auto& next = kernel.at("next");
    if (next.size() != g.kernel.size())
      throw std::runtime_error("load_game: deterministic kernel has wrong size");
    for (std::size_t idx = 0; idx < g.kernel.size(); ++idx)
      g.kernel[idx] = {{next[idx].get<int>(), 1.0}};
  } else if (type == "sparse") {
    const auto& rows = kernel.at("rows");
    if (rows.size() != g.kernel.size())
      throw std::runtime_error("load_game: sparse kernel has wrong size");
    for (std::size_t idx = 0; idx < g.kernel.size(); ++idx) {
      for (const auto& entry : rows[idx])
        g.kernel[idx].emplace_back(entry.at(0).get<int>(), entry.at(1).get<double>());
    }
  } else if (type == "dense") {
    const auto& rows = kernel.at("rows");
    if (rows.size() != g.kernel.size())
      throw std::runtime_error("load_game: dense kernel has wrong size");
    for (std::size_t idx = 0; idx < g.kernel.size(); ++idx) {
      if (static_cast<int>(rows[idx].size()) != g.num_states)
        throw std::runtime_error("load_game: dense kernel row has wrong length");
      for (int next = 0; next < g.num_states; ++next) {
        const double p = rows[idx][next].get<double>();
        if (p != 0.0) g.kernel[idx].emplace_back(next, p);
      }
    }
  } else {
    throw std::runtime_error("load_game: unknown kernel type '" + type + "'");
  }

  const ValidationReport report = validate_game(g);
  if (!report.ok())
    throw std::runtime_error("load_game: " + path + " fails validation: " +
                             report.violations.front());
  return g;
}

}  // namespace cmg
