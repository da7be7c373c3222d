#include "pnorm/voltage_sparsifier.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "pnorm/errors.hpp"

namespace pnorm {

namespace {

// Incident-alive-edge lists, rebuilt per clustering round (m is tiny here).
std::vector<std::vector<int>> adjacency(const Graph& g, const std::vector<char>& alive) {
  std::vector<std::vector<int>> adj(static_cast<std::size_t>(g.vertex_count()));
  for (int e = 0; e < g.edge_count(); ++e) {
    if (!alive[static_cast<std::size_t>(e)]) continue;
    adj[static_cast<std::size_t>(g.tail(e))].push_back(e);
    adj[static_cast<std::size_t>(g.head(e))].push_back(e);
  }
  return adj;
}

}  // namespace

std::vector<int> baswana_sen_spanner(const Graph& g, const EdgeVector& lengths,
                                     int k, Rng& rng) {
  if (k < 2) throw InvalidInputError("spanner: k must be at least 2");
  if (lengths.size() != g.edge_count())
    throw InvalidInputError("spanner: one length per edge required");
  for (int e = 0; e < g.edge_count(); ++e)
    if (!(lengths[e] > 0.0)) throw InvalidInputError("spanner: lengths must be positive");

  const int n = g.vertex_count();
  const int m = g.edge_count();
  const double sample_prob = std::pow(static_cast<double>(std::max(n, 2)),
                                      -1.0 / static_cast<double>(k));

  // cluster[v] is the id of v's cluster in the current round, -1 once v has
  // dropped out. Ids are seed-vertex labels; only distinctness matters.
  std::vector<int> cluster(static_cast<std::size_t>(n));
  std::iota(cluster.begin(), cluster.end(), 0);
  std::vector<char> alive(static_cast<std::size_t>(m), 1);
  std::vector<char> keep(static_cast<std::size_t>(m), 0);

  // Shorter length wins, ties to the smaller index, so runs are reproducible.
  auto better = [&](int a, int b) {
    if (b < 0) return true;
    if (lengths[a] != lengths[b]) return lengths[a] < lengths[b];
    return a < b;
  };

  std::vector<int> best_edge(static_cast<std::size_t>(n), -1);  // per cluster id
  std::vector<int> touched;                                     // cluster ids seen at v

  // Grouping pass shared by both phases: for vertex v, the cheapest alive edge
  // into each foreign cluster.
  auto group_neighbors = [&](int v, const std::vector<std::vector<int>>& adj) {
    touched.clear();
    for (int e : adj[static_cast<std::size_t>(v)]) {
      if (!alive[static_cast<std::size_t>(e)]) continue;
      const int u = g.tail(e) == v ? g.head(e) : g.tail(e);
      const int c = cluster[static_cast<std::size_t>(u)];
      if (c < 0 || c == cluster[static_cast<std::size_t>(v)]) continue;
      if (best_edge[static_cast<std::size_t>(c)] < 0) touched.push_back(c);
      if (better(e, best_edge[static_cast<std::size_t>(c)]))
        best_edge[static_cast<std::size_t>(c)] = e;
    }
    std::sort(touched.begin(), touched.end());
  };

  std::vector<char> sampled(static_cast<std::size_t>(n), 0);
  std::vector<int> next_cluster(static_cast<std::size_t>(n));
  std::vector<int> kill;  // edges retired this round, applied after all vertices

  for (int round = 0; round < k - 1; ++round) {
    std::fill(sampled.begin(), sampled.end(), 0);
    // One coin per live cluster id, in id order.
    std::vector<char> id_live(static_cast<std::size_t>(n), 0);
    for (int v = 0; v < n; ++v)
      if (cluster[static_cast<std::size_t>(v)] >= 0)
        id_live[static_cast<std::size_t>(cluster[static_cast<std::size_t>(v)])] = 1;
    for (int c = 0; c < n; ++c)
      if (id_live[static_cast<std::size_t>(c)])
        sampled[static_cast<std::size_t>(c)] = rng.coin(sample_prob) ? 1 : 0;

    const auto adj = adjacency(g, alive);
    next_cluster = cluster;
    kill.clear();

    for (int v = 0; v < n; ++v) {
      const int cv = cluster[static_cast<std::size_t>(v)];
      if (cv < 0 || sampled[static_cast<std::size_t>(cv)]) continue;

      group_neighbors(v, adj);
      int join_edge = -1;
      int join_cluster = -1;
      for (int c : touched) {
        if (!sampled[static_cast<std::size_t>(c)]) continue;
        if (better(best_edge[static_cast<std::size_t>(c)], join_edge)) {
          join_edge = best_edge[static_cast<std::size_t>(c)];
          join_cluster = c;
        }
      }

      if (join_edge < 0) {
        // No sampled neighbor: bridge every neighboring cluster once, then
        // retire v from the clustering along with all its edges.
        for (int c : touched) keep[static_cast<std::size_t>(best_edge[static_cast<std::size_t>(c)])] = 1;
        for (int e : adj[static_cast<std::size_t>(v)])
          if (alive[static_cast<std::size_t>(e)]) kill.push_back(e);
        next_cluster[static_cast<std::size_t>(v)] = -1;
      } else {
        keep[static_cast<std::size_t>(join_edge)] = 1;
        next_cluster[static_cast<std::size_t>(v)] = join_cluster;
        for (int c : touched) {
          const int e = best_edge[static_cast<std::size_t>(c)];
          const bool cheaper = better(e, join_edge);
          if (c == join_cluster || cheaper) {
            if (cheaper) keep[static_cast<std::size_t>(e)] = 1;
            // Drop the whole bundle into that cluster, not just the cheapest.
            for (int e2 : adj[static_cast<std::size_t>(v)]) {
              if (!alive[static_cast<std::size_t>(e2)]) continue;
              const int u = g.tail(e2) == v ? g.head(e2) : g.tail(e2);
              if (cluster[static_cast<std::size_t>(u)] == c) kill.push_back(e2);
            }
          }
        }
      }
      for (int c : touched) best_edge[static_cast<std::size_t>(c)] = -1;
    }

    for (int e : kill) alive[static_cast<std::size_t>(e)] = 0;
    cluster = next_cluster;
    for (int e = 0; e < m; ++e) {
      if (!alive[static_cast<std::size_t>(e)]) continue;
      const int cu = cluster[static_cast<std::size_t>(g.tail(e))];
      const int cv = cluster[static_cast<std::size_t>(g.head(e))];
      if (cu >= 0 && cu == cv) alive[static_cast<std::size_t>(e)] = 0;  // internal now
    }
  }

  // Final round: cheapest surviving edge from each vertex into each cluster.
  const auto adj = adjacency(g, alive);
  for (int v = 0; v < n; ++v) {
    group_neighbors(v, adj);
    for (int c : touched) {
      keep[static_cast<std::size_t>(best_edge[static_cast<std::size_t>(c)])] = 1;
      best_edge[static_cast<std::size_t>(c)] = -1;
    }
  }

  std::vector<int> out;
  for (int e = 0; e < m; ++e)
    if (keep[static_cast<std::size_t>(e)]) out.push_back(e);
  return out;
}

std::pair<std::vector<int>, EdgeVector> spectral_sparsify(
    const Graph& g, const EdgeVector& w, double epsilon, double delta, Rng& rng) {
  if (!(epsilon > 0.0) || epsilon > 0.5)
    throw InvalidInputError("spectral_sparsify: epsilon must lie in (0, 1/2]");
  if (!(delta > 0.0) || delta >= 1.0)
    throw InvalidInputError("spectral_sparsify: delta must lie in (0, 1)");
  if (w.size() != g.edge_count())
    throw InvalidInputError("spectral_sparsify: one weight per edge required");
  if ((w.array() < 0.0).any())
    throw InvalidInputError("spectral_sparsify: weights must be non-negative");

  const int n = g.vertex_count();
  const int m = g.edge_count();

  // Exact effective resistances through a dense pseudoinverse; fine at the
  // sizes this solver targets.
  const MatrixXd dense_l = weighted_laplacian(g, w).to_dense();
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(dense_l);
  const VectorXd& vals = eig.eigenvalues();
  const double cut = vals.size() > 0
                         ? vals[vals.size() - 1] * static_cast<double>(n) * 1e-14
                         : 0.0;
  VectorXd inv_vals = VectorXd::Zero(vals.size());
  for (int i = 0; i < vals.size(); ++i)
    if (vals[i] > cut) inv_vals[i] = 1.0 / vals[i];
  const MatrixXd pinv =
      eig.eigenvectors() * inv_vals.asDiagonal() * eig.eigenvectors().transpose();

  VectorXd leverage = VectorXd::Zero(m);
  for (int e = 0; e < m; ++e) {
    if (w[e] <= 0.0) continue;
    const int a = g.tail(e);
    const int b = g.head(e);
    const double r_eff = pinv(a, a) + pinv(b, b) - 2.0 * pinv(a, b);
    leverage[e] = w[e] * std::max(r_eff, 0.0);
  }
  const double total = leverage.sum();
  if (total <= 0.0) return {std::vector<int>{}, EdgeVector{}};

  const long draws = static_cast<long>(std::ceil(
      4.0 * n * std::log(static_cast<double>(n) / delta) / (epsilon * epsilon)));

  // Sampling table over positive-leverage edges only, so a boundary draw can
  // never land on a zero-probability entry.
  std::vector<int> support;
  std::vector<double> cum;
  double acc = 0.0;
  for (int e = 0; e < m; ++e) {
    if (leverage[e] <= 0.0) continue;
    support.push_back(e);
    acc += leverage[e] / total;
    cum.push_back(acc);
  }
  cum.back() = 1.0;

  EdgeVector acc_w = EdgeVector::Zero(m);
  for (long d = 0; d < draws; ++d) {
    const double u = rng.uniform();
    const std::size_t slot = static_cast<std::size_t>(
        std::lower_bound(cum.begin(), cum.end(), u) - cum.begin());
    const int e = support[slot];
    const double prob = leverage[e] / total;
    acc_w[e] += w[e] / (static_cast<double>(draws) * prob);
  }

  std::vector<int> kept;
  for (int e = 0; e < m; ++e)
    if (acc_w[e] > 0.0) kept.push_back(e);
  EdgeVector kept_w(static_cast<Eigen::Index>(kept.size()));
  for (std::size_t i = 0; i < kept.size(); ++i)
    kept_w[static_cast<Eigen::Index>(i)] = acc_w[kept[i]];
  return {std::move(kept), std::move(kept_w)};
}

int spanner_k(int n) {
  int k = 2;
  while ((1 << k) < n) ++k;
  return k;
}

SparsifyResult spanner_sparsify(const VoltageInstance& inst, double delta, Rng& rng) {
  inst.validate();
  const Graph& g = inst.graph;
  const int m = g.edge_count();

  // Spanner half: the edges carrying p-norm weight, with length 1/s.
  std::vector<int> lp_edges;
  for (int e = 0; e < m; ++e)
    if (inst.sp[e] > 0.0) lp_edges.push_back(e);

  SparsifyResult out;
  Rng spanner_rng = rng.split(0x731u);
  Rng spectral_rng = rng.split(0x732u);

  if (!lp_edges.empty()) {
    std::vector<std::pair<int, int>> sub_edges;
    EdgeVector sub_len(static_cast<Eigen::Index>(lp_edges.size()));
    for (std::size_t i = 0; i < lp_edges.size(); ++i) {
      const int e = lp_edges[i];
      sub_edges.emplace_back(g.tail(e), g.head(e));
      sub_len[static_cast<Eigen::Index>(i)] = 1.0 / inst.sp[e];
    }
    const int k = spanner_k(g.vertex_count());
    const std::vector<int> local =
        baswana_sen_spanner(Graph(g.vertex_count(), sub_edges), sub_len, k, spanner_rng);
    for (int le : local) out.spanner_edges.push_back(lp_edges[static_cast<std::size_t>(le)]);
    out.stretch = 2 * k - 1;
  }

  // Spectral half: the edges carrying quadratic weight, each half owning half
  // the failure budget.
  EdgeVector spectral_w;
  std::vector<int> spectral_idx;
  std::tie(spectral_idx, spectral_w) =
      spectral_sparsify(g, inst.w2, 0.5, delta / 2.0, spectral_rng);
  out.spectral_edges = spectral_idx;

  // Union with zero-extension: a kept edge carries u from the spectral half
  // and t from the spanner half, zero where the halves don't overlap.
  std::vector<int> kept = out.spanner_edges;
  kept.insert(kept.end(), spectral_idx.begin(), spectral_idx.end());
  std::sort(kept.begin(), kept.end());
  kept.erase(std::unique(kept.begin(), kept.end()), kept.end());

  std::vector<int> pos(static_cast<std::size_t>(m), -1);
  for (std::size_t i = 0; i < kept.size(); ++i) pos[static_cast<std::size_t>(kept[i])] = static_cast<int>(i);

  out.u = EdgeVector::Zero(static_cast<Eigen::Index>(kept.size()));
  out.t = EdgeVector::Zero(static_cast<Eigen::Index>(kept.size()));
  for (std::size_t i = 0; i < spectral_idx.size(); ++i)
    out.u[pos[static_cast<std::size_t>(spectral_idx[i])]] = spectral_w[static_cast<Eigen::Index>(i)];
  for (int e : out.spanner_edges) out.t[pos[static_cast<std::size_t>(e)]] = inst.sp[e];

  std::vector<std::pair<int, int>> kept_edges;
  kept_edges.reserve(kept.size());
  for (int e : kept) kept_edges.emplace_back(g.tail(e), g.head(e));
  out.subgraph = Graph(g.vertex_count(), std::move(kept_edges));
  out.kept = std::move(kept);
  return out;
}

VoltageScaling voltage_scaling(int m, int n, double p) {
  if (m < 1 || p <= 1.0)
    throw InvalidInputError("voltage_scaling: need m >= 1 and p > 1");
  VoltageScaling s;
  s.mu2 = std::pow(static_cast<double>(m), -1.0 / (p - 1.0));
  s.kappa2 = std::pow(static_cast<double>(m), 1.0 / (p - 1.0)) *
             static_cast<double>(2 * spanner_k(n) - 1);
  return s;
}

std::pair<SparseMatrix, SparseMatrix> sparsified_pair(const SparsifyResult& r) {
  const SparseMatrix b = incidence_matrix(r.subgraph);
  return {b.scaled_rows(r.u.array().sqrt().matrix()), b.scaled_rows(r.t)};
}

}  // namespace pnorm
