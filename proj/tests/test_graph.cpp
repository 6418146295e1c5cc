#include <vector>

#include "cmg/graph.hpp"
#include "doctest.h"

using namespace cmg;

TEST_CASE("strongly connected components partition a two-block digraph") {
  // 0 <-> 1 -> 2 <-> 3; {0,1} can leave, {2,3} cannot.
  const std::vector<std::vector<int>> adj = {{1}, {0, 2}, {3}, {2}};
  int num_components = 0;
  const std::vector<int> component = strongly_connected_components(adj, num_components);
  CHECK(num_components == 2);
  CHECK(component[0] == component[1]);
  CHECK(component[2] == component[3]);
  CHECK(component[0] != component[2]);

  const std::vector<char> closed = closed_components(adj, component, num_components);
  CHECK_FALSE(closed[component[0]]);
  CHECK(static_cast<bool>(closed[component[2]]));
}

TEST_CASE("singleton without a self-loop is its own open component") {
  // 0 -> 1, 1 self-loops.  {0} is a component with an outgoing edge.
  const std::vector<std::vector<int>> adj = {{1}, {1}};
  int num_components = 0;
  const std::vector<int> component = strongly_connected_components(adj, num_components);
  CHECK(num_components == 2);
  CHECK(component[0] != component[1]);
  const std::vector<char> closed = closed_components(adj, component, num_components);
  CHECK_FALSE(closed[component[0]]);
  CHECK(static_cast<bool>(closed[component[1]]));
}

TEST_CASE("isolated node forms a closed singleton component") {
  const std::vector<std::vector<int>> adj = {{0}, {}};
  int num_components = 0;
  const std::vector<int> component = strongly_connected_components(adj, num_components);
  CHECK(num_components == 2);
  const std::vector<char> closed = closed_components(adj, component, num_components);
  // Node 1 has no edges at all: nothing leaves its component.
  CHECK(static_cast<bool>(closed[component[1]]));
  CHECK(static_cast<bool>(closed[component[0]]));
}

TEST_CASE("long cycle collapses to one closed component") {
  const int n = 50;
  std::vector<std::vector<int>> adj(n);
  for (int v = 0; v < n; ++v) adj[v] = {(v + 1) % n};
  int num_components = 0;
  const std::vector<int> component = strongly_connected_components(adj, num_components);
  CHECK(num_components == 1);
  for (int v = 0; v < n; ++v) CHECK(component[v] == component[0]);
  CHECK(static_cast<bool>(closed_components(adj, component, num_components)[component[0]]));
}

TEST_CASE("reachable_nodes returns the ascending closure including the start") {
  const std::vector<std::vector<int>> adj = {{1}, {0, 2}, {3}, {2}, {0}};
  CHECK(reachable_nodes(adj, 0) == std::vector<int>{0, 1, 2, 3});
  CHECK(reachable_nodes(adj, 2) == std::vector<int>{2, 3});
  CHECK(reachable_nodes(adj, 4) == std::vector<int>{0, 1, 2, 3, 4});
  const std::vector<std::vector<int>> loner = {{}};
  CHECK(reachable_nodes(loner, 0) == std::vector<int>{0});
}
