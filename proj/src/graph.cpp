#include "adgnn/graph.hpp"

#include <algorithm>
#include <string>

namespace adgnn {

Graph make_graph(Index num_nodes,
                 const std::vector<std::pair<Index, Index>>& raw_edges) {
  if (num_nodes < 0) throw std::invalid_argument("make_graph: negative node count");
  Graph g;
  g.num_nodes = num_nodes;
  g.edges.reserve(raw_edges.size());
  for (const auto& [a, b] : raw_edges) {
    if (a < 0 || b < 0 || a >= num_nodes || b >= num_nodes)
      throw std::invalid_argument("make_graph: edge endpoint out of range: (" +
                                  std::to_string(a) + ", " + std::to_string(b) +
                                  ")");
    if (a == b) continue;
    g.edges.emplace_back(std::min(a, b), std::max(a, b));
  }
  std::sort(g.edges.begin(), g.edges.end());
  g.edges.erase(std::unique(g.edges.begin(), g.edges.end()), g.edges.end());
  return g;
}

}  // namespace adgnn
