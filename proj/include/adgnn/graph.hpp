#pragma once

#include <utility>
#include <vector>

#include "adgnn/common.hpp"

namespace adgnn {

// Undirected graph. Edges are stored canonically: endpoints ordered
// (u < v), sorted, deduplicated, no self-loops. Self-loops enter only
// through the normalized adjacency construction.
struct Graph {
  Index num_nodes = 0;
  std::vector<std::pair<Index, Index>> edges;
};

// Builds a canonical Graph from a raw edge list. Duplicate pairs (in either
// orientation) and self-loops are silently dropped; out-of-range endpoints
// throw.
Graph make_graph(Index num_nodes,
                 const std::vector<std::pair<Index, Index>>& raw_edges);

}  // namespace adgnn
