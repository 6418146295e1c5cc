#include "cmg/graph.hpp"

#include <algorithm>
#include <utility>

namespace cmg {

std::vector<int> strongly_connected_components(const std::vector<std::vector<int>>& adj,
                                               int& num_components) {
  const int n = static_cast<int>(adj.size());
  std::vector<std::vector<int>> radj(n);
  for (int u = 0; u < n; ++u)
    for (int v : adj[u]) radj[v].push_back(u);

  std::vector<int> order;
  order.reserve(n);
  std::vector<char> seen(n, 0);
  for (int start = 0; start < n; ++start) {
    if (seen[start]) continue;
    std::vector<std::pair<int, std::size_t>> stack{{start, 0}};
    seen[start] = 1;
    while (!stack.empty()) {
      auto& [u, next_edge] = stack.back();
      if (next_edge < adj[u].size()) {
        const int v = adj[u][next_edge++];
        if (!seen[v]) {
          seen[v] = 1;
          stack.emplace_back(v, 0);
        }
      } else {
        order.push_back(u);
        stack.pop_back();
      }
    }
  }

  std::vector<int> component(n, -1);
  num_components = 0;
  for (int idx = n - 1; idx >= 0; --idx) {
    const int root = order[idx];
    if (component[root] >= 0) continue;
    std::vector<int> stack{root};
    component[root] = num_components;
    while (!stack.empty()) {
      const int u = stack.back();
      stack.pop_back();
      for (int v : radj[u])
        if (component[v] < 0) {
          component[v] = num_components;
          stack.push_back(v);
        }
    }
    ++num_components;
  }
  return component;
}

std::vector<char> closed_components(const std::vector<std::vector<int>>& adj,
                                    const std::vector<int>& component, int num_components) {
  std::vector<char> closed(num_components, 1);
  for (int u = 0; u < static_cast<int>(adj.size()); ++u)
    for (int v : adj[u])
      if (component[v] != component[u]) closed[component[u]] = 0;
  return closed;
}

std::vector<int> reachable_nodes(const std::vector<std::vector<int>>& adj, int start) {
  std::vector<char> seen(adj.size(), 0);
  std::vector<int> stack{start};
  seen[start] = 1;
  while (!stack.empty()) {
    const int u = stack.back();
    stack.pop_back();
    for (int v : adj[u])
      if (!seen[v]) {
        seen[v] = 1;
        stack.push_back(v);
      }
  }
  std::vector<int> nodes;
  for (int u = 0; u < static_cast<int>(adj.size()); ++u)
    if (seen[u]) nodes.push_back(u);
  return nodes;
}

}  // namespace cmg
