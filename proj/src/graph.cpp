#include "pnorm/graph.hpp"

#include <limits>
#include <queue>

#include "pnorm/errors.hpp"

namespace pnorm {

Graph::Graph(int vertex_count, std::vector<std::pair<int, int>> edges)
    : n_(vertex_count), edges_(std::move(edges)) {
  if (n_ < 0) throw InvalidInputError("Graph: negative vertex count");
  for (const auto& [u, v] : edges_) {
    if (u < 0 || u >= n_ || v < 0 || v >= n_)
      throw InvalidInputError("Graph: edge endpoint out of range");
    if (u == v) throw InvalidInputError("Graph: self-loop rejected");
  }
  // Union-find over the undirected support.
  comp_.resize(static_cast<std::size_t>(n_));
  std::vector<int> parent(static_cast<std::size_t>(n_));
  for (int v = 0; v < n_; ++v) parent[static_cast<std::size_t>(v)] = v;
  auto find = [&](int v) {
    while (parent[static_cast<std::size_t>(v)] != v) {
      parent[static_cast<std::size_t>(v)] =
          parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(v)])];
      v = parent[static_cast<std::size_t>(v)];
    }
    return v;
  };
  for (const auto& [u, v] : edges_) parent[static_cast<std::size_t>(find(u))] = find(v);
  n_comp_ = 0;
  std::vector<int> label(static_cast<std::size_t>(n_), -1);
  for (int v = 0; v < n_; ++v) {
    const int r = find(v);
    if (label[static_cast<std::size_t>(r)] < 0) label[static_cast<std::size_t>(r)] = n_comp_++;
    comp_[static_cast<std::size_t>(v)] = label[static_cast<std::size_t>(r)];
  }
}

SparseMatrix incidence_matrix(const Graph& g) {
  std::vector<Triplet> ts;
  ts.reserve(static_cast<std::size_t>(2 * g.edge_count()));
  for (int e = 0; e < g.edge_count(); ++e) {
    ts.push_back({e, g.tail(e), 1.0});
    ts.push_back({e, g.head(e), -1.0});
  }
  return SparseMatrix::from_triplets(g.edge_count(), g.vertex_count(), std::move(ts));
}

SparseMatrix weighted_laplacian(const Graph& g, const EdgeVector& w) {
  if (w.size() != g.edge_count()) throw InvalidInputError("weighted_laplacian: weight size");
  std::vector<Triplet> ts;
  ts.reserve(static_cast<std::size_t>(4 * g.edge_count()));
  for (int e = 0; e < g.edge_count(); ++e) {
    if (w[e] < 0.0) throw InvalidInputError("weighted_laplacian: negative weight");
    if (w[e] == 0.0) continue;
    const int u = g.tail(e), v = g.head(e);
    ts.push_back({u, u, w[e]});
    ts.push_back({v, v, w[e]});
    ts.push_back({u, v, -w[e]});
    ts.push_back({v, u, -w[e]});
  }
  return SparseMatrix::from_triplets(g.vertex_count(), g.vertex_count(), std::move(ts));
}

VertexVector shortest_path_distances(const Graph& g, const EdgeVector& lengths, int source) {
  if (lengths.size() != g.edge_count())
    throw InvalidInputError("shortest_path_distances: length size");
  if (source < 0 || source >= g.vertex_count())
    throw InvalidInputError("shortest_path_distances: bad source");
  for (int e = 0; e < g.edge_count(); ++e)
    if (!(lengths[e] > 0.0)) throw InvalidInputError("shortest_path_distances: lengths must be > 0");

  // Adjacency lists over the undirected support.
  std::vector<std::vector<std::pair<int, double>>> adj(
      static_cast<std::size_t>(g.vertex_count()));
  for (int e = 0; e < g.edge_count(); ++e) {
    adj[static_cast<std::size_t>(g.tail(e))].push_back({g.head(e), lengths[e]});
    adj[static_cast<std::size_t>(g.head(e))].push_back({g.tail(e), lengths[e]});
  }

  const double inf = std::numeric_limits<double>::infinity();
  VertexVector dist = VertexVector::Constant(g.vertex_count(), inf);
  dist[source] = 0.0;
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<Item>> heap;
  heap.push({0.0, source});
  while (!heap.empty()) {
    const auto [d, v] = heap.top();
    heap.pop();
    if (d > dist[v]) continue;
    for (const auto& [u, len] : adj[static_cast<std::size_t>(v)]) {
      if (d + len < dist[u]) {
        dist[u] = d + len;
        heap.push({dist[u], u});
      }
    }
  }
  return dist;
}

}  // namespace pnorm
