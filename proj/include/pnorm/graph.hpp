#pragma once

#include <utility>
#include <vector>

#include "pnorm/sparse_matrix.hpp"

namespace pnorm {

// Directed multigraph on vertices 0..n-1. Parallel edges are fine; self-loops
// are rejected at construction (a self-loop contributes a zero incidence row,
// which silently corrupts cycle-space dimension counts downstream).
class Graph {
 public:
  Graph() = default;
  Graph(int vertex_count, std::vector<std::pair<int, int>> edges);

  int vertex_count() const { return n_; }
  int edge_count() const { return static_cast<int>(edges_.size()); }
  int tail(int e) const { return edges_[static_cast<std::size_t>(e)].first; }
  int head(int e) const { return edges_[static_cast<std::size_t>(e)].second; }
  const std::vector<std::pair<int, int>>& edges() const { return edges_; }

  // Connected components of the undirected support.
  const std::vector<int>& component_ids() const { return comp_; }
  int component_count() const { return n_comp_; }
  bool is_connected() const { return n_comp_ <= 1; }

 private:
  int n_ = 0;
  std::vector<std::pair<int, int>> edges_;
  std::vector<int> comp_;
  int n_comp_ = 0;
};

// Edge-by-vertex incidence matrix B: row e has +1 at tail(e), -1 at head(e).
SparseMatrix incidence_matrix(const Graph& g);

// B^T diag(w) B; w >= 0 entrywise.
SparseMatrix weighted_laplacian(const Graph& g, const EdgeVector& w);

// Single-source shortest path distances over the undirected support with
// positive edge lengths; unreachable vertices get +infinity.
VertexVector shortest_path_distances(const Graph& g, const EdgeVector& lengths, int source);

}  // namespace pnorm
