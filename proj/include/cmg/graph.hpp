#ifndef CMG_GRAPH_HPP
#define CMG_GRAPH_HPP

#include <vector>

namespace cmg {

// Strongly-connected components of a directed graph given as adjacency lists.
// Returns the component id of every node and sets num_components; ids carry
// no ordering guarantee.  Iterative Kosaraju, so deep chains cannot overflow
// the stack.
std::vector<int> strongly_connected_components(const std::vector<std::vector<int>>& adj,
                                               int& num_components);

// Flags, per component, whether no edge leaves the component.  For the
// support graph of a Markov chain the closed components are exactly its
// recurrent classes; for the union-over-actions support graph of an MDP they
// are the sets no policy can escape.
std::vector<char> closed_components(const std::vector<std::vector<int>>& adj,
                                    const std::vector<int>& component, int num_components);

// States reachable from `start` by following edges, including `start` itself.
// Returned ascending.
std::vector<int> reachable_nodes(const std::vector<std::vector<int>>& adj, int start);

}  // namespace cmg

#endif  // CMG_GRAPH_HPP
