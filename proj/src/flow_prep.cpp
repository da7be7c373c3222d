#include "pnorm/flow_prep.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "pnorm/errors.hpp"
#include "pnorm/spsd.hpp"

namespace pnorm {

namespace {

bool untouched(const FlowInstance& inst, int e) {
  return inst.r2[e] == 0.0 && inst.sp[e] == 0.0;
}

// DFS forest over the untouched edges: component labels, potentials with
// phi(root) = 0 and g_e = phi(tail) - phi(head) along tree edges, and the
// first inconsistent back edge's cycle if one exists.
struct UntouchedForest {
  std::vector<int> comp;
  std::vector<double> phi;
  std::vector<int> parent_vertex;  // -1 at roots
  std::vector<int> parent_edge;
  std::vector<int> depth;
  int comp_count = 0;
  std::optional<SignedCycle> cycle;
};

UntouchedForest analyze_untouched(const FlowInstance& inst) {
  const Graph& g = inst.graph;
  const int n = g.vertex_count();
  UntouchedForest f;
  f.comp.assign(static_cast<std::size_t>(n), -1);
  f.phi.assign(static_cast<std::size_t>(n), 0.0);
  f.parent_vertex.assign(static_cast<std::size_t>(n), -1);
  f.parent_edge.assign(static_cast<std::size_t>(n), -1);
  f.depth.assign(static_cast<std::size_t>(n), 0);

  std::vector<std::vector<int>> adj(static_cast<std::size_t>(n));
  double g_scale = 0.0;
  for (int e = 0; e < g.edge_count(); ++e) {
    if (!untouched(inst, e)) continue;
    adj[static_cast<std::size_t>(g.tail(e))].push_back(e);
    adj[static_cast<std::size_t>(g.head(e))].push_back(e);
    g_scale = std::max(g_scale, std::abs(inst.gradient[e]));
  }
  const double tol = 1e-9 * (1.0 + g_scale);

  std::vector<int> stack;
  for (int root = 0; root < n; ++root) {
    if (f.comp[static_cast<std::size_t>(root)] >= 0) continue;
    const int c = f.comp_count++;
    f.comp[static_cast<std::size_t>(root)] = c;
    f.phi[static_cast<std::size_t>(root)] = 0.0;
    stack.assign(1, root);
    while (!stack.empty()) {
      const int v = stack.back();
      stack.pop_back();
      for (int e : adj[static_cast<std::size_t>(v)]) {
        if (e == f.parent_edge[static_cast<std::size_t>(v)]) continue;
        const int u = g.tail(e) == v ? g.head(e) : g.tail(e);
        // Traversing v -> u changes potential by -g when leaving the tail.
        const double phi_u = g.tail(e) == v
                                 ? f.phi[static_cast<std::size_t>(v)] - inst.gradient[e]
                                 : f.phi[static_cast<std::size_t>(v)] + inst.gradient[e];
        if (f.comp[static_cast<std::size_t>(u)] < 0) {
          f.comp[static_cast<std::size_t>(u)] = c;
          f.phi[static_cast<std::size_t>(u)] = phi_u;
          f.parent_vertex[static_cast<std::size_t>(u)] = v;
          f.parent_edge[static_cast<std::size_t>(u)] = e;
          f.depth[static_cast<std::size_t>(u)] = f.depth[static_cast<std::size_t>(v)] + 1;
          stack.push_back(u);
        } else if (std::abs(phi_u - f.phi[static_cast<std::size_t>(u)]) > tol) {
          if (f.cycle) continue;  // one witness is plenty
          // Close the cycle: e itself, then the tree path head -> tail.
          // Walk both endpoints up to the meeting point, recording each tree
          // step with sign +1 when it runs tail -> head.
          int va = g.tail(e);
          int vb = g.head(e);
          SignedCycle up_a, up_b;
          auto step_up = [&](int& v, SignedCycle& out) {
            const int pe = f.parent_edge[static_cast<std::size_t>(v)];
            out.emplace_back(pe, g.tail(pe) == v ? 1.0 : -1.0);
            v = f.parent_vertex[static_cast<std::size_t>(v)];
          };
          while (f.depth[static_cast<std::size_t>(va)] >
                 f.depth[static_cast<std::size_t>(vb)])
            step_up(va, up_a);
          while (f.depth[static_cast<std::size_t>(vb)] >
                 f.depth[static_cast<std::size_t>(va)])
            step_up(vb, up_b);
          while (va != vb) {
            step_up(va, up_a);
            step_up(vb, up_b);
          }
          SignedCycle cyc;
          cyc.emplace_back(e, 1.0);  // a -> b along the edge
          for (const auto& [be, bs] : up_b) cyc.emplace_back(be, bs);  // b -> lca
          for (auto it = up_a.rbegin(); it != up_a.rend(); ++it)
            cyc.emplace_back(it->first, -it->second);  // lca -> a
          f.cycle = std::move(cyc);
        }
      }
    }
  }
  return f;
}

double round_down_pow2(double x) {
  if (x <= 0.0) return 0.0;
  int exp = 0;
  const double mant = std::frexp(x, &exp);  // x = mant * 2^exp, mant in [0.5, 1)
  (void)mant;
  return std::ldexp(0.5, exp);
}

}  // namespace

ApproxMap compose(const ApproxMap& first, const ApproxMap& second) {
  ApproxMap out;
  out.map = second.map.multiply(first.map);
  out.kappa = first.kappa * second.kappa;
  out.delta = first.delta + second.delta * first.map.column_l1_bound();
  out.cycle_only = first.cycle_only || second.cycle_only;
  return out;
}

std::optional<SignedCycle> detect_unbounded(const FlowInstance& inst) {
  inst.validate();
  return analyze_untouched(inst).cycle;
}

ContractionResult contract_constant_cycles(const FlowInstance& inst,
                                           const VertexVector& demands) {
  inst.validate();
  if (demands.size() != inst.graph.vertex_count())
    throw InvalidInputError("contract: one demand per vertex required");
  UntouchedForest forest = analyze_untouched(inst);
  if (forest.cycle)
    throw UnboundedInstanceError("contract: instance has an unbounded cycle");

  const Graph& g = inst.graph;
  const int m = g.edge_count();
  ContractionResult out;
  out.vertex_image = forest.comp;

  // Touched edges survive; an intra-component edge becomes a two-edge path
  // through a fresh vertex so no incidence row degenerates.
  std::vector<std::pair<int, int>> new_edges;
  std::vector<double> new_g, new_r, new_s;
  std::vector<int> image;  // touched original edge -> its (first) new edge
  image.assign(static_cast<std::size_t>(m), -1);
  int aux = forest.comp_count;
  for (int e = 0; e < m; ++e) {
    if (untouched(inst, e)) continue;
    const int cu = forest.comp[static_cast<std::size_t>(g.tail(e))];
    const int cv = forest.comp[static_cast<std::size_t>(g.head(e))];
    const double adj_g = inst.gradient[e] - forest.phi[static_cast<std::size_t>(g.tail(e))] +
                         forest.phi[static_cast<std::size_t>(g.head(e))];
    image[static_cast<std::size_t>(e)] = static_cast<int>(new_edges.size());
    if (cu != cv) {
      new_edges.emplace_back(cu, cv);
      new_g.push_back(adj_g);
      new_r.push_back(inst.r2[e]);
      new_s.push_back(inst.sp[e]);
    } else {
      new_edges.emplace_back(cu, aux);
      new_g.push_back(adj_g);
      new_r.push_back(inst.r2[e]);
      new_s.push_back(inst.sp[e]);
      new_edges.emplace_back(aux, cv);
      new_g.push_back(0.0);
      new_r.push_back(0.0);
      new_s.push_back(0.0);
      ++aux;
    }
  }
  const int new_m = static_cast<int>(new_edges.size());

  out.inst.graph = Graph(aux, new_edges);
  out.inst.gradient = Eigen::Map<VectorXd>(new_g.data(), new_m);
  out.inst.r2 = Eigen::Map<VectorXd>(new_r.data(), new_m);
  out.inst.sp = Eigen::Map<VectorXd>(new_s.data(), new_m);
  out.inst.p = inst.p;

  out.demands = VertexVector::Zero(aux);
  for (int v = 0; v < g.vertex_count(); ++v) {
    out.demands[forest.comp[static_cast<std::size_t>(v)]] += demands[v];
    out.offset += forest.phi[static_cast<std::size_t>(v)] * demands[v];
  }

  // Forward: copy each touched flow value onto its image (both legs of an
  // auxiliary path carry the original value).
  std::vector<Triplet> fwd;
  for (int e = 0; e < m; ++e) {
    const int j = image[static_cast<std::size_t>(e)];
    if (j < 0) continue;
    fwd.push_back({j, e, 1.0});
    const auto& je = new_edges[static_cast<std::size_t>(j)];
    if (je.second >= forest.comp_count) fwd.push_back({j + 1, e, 1.0});
  }
  out.forward.map = SparseMatrix::from_triplets(new_m, m, std::move(fwd));
  out.forward.cycle_only = true;

  // Backward: copy touched values back, then route the per-vertex imbalance
  // each unit of flow creates through the untouched forest. Columns are built
  // for unit flows; on circulations the leftovers at the roots cancel.
  std::vector<Triplet> bwd;
  auto route_to_root = [&](int v, double amount, std::vector<Triplet>& sink, int col) {
    while (forest.parent_vertex[static_cast<std::size_t>(v)] >= 0) {
      const int pe = forest.parent_edge[static_cast<std::size_t>(v)];
      // amount units must leave v toward the root.
      const double value = g.tail(pe) == v ? amount : -amount;
      sink.push_back({pe, col, value});
      v = forest.parent_vertex[static_cast<std::size_t>(v)];
    }
  };
  for (int e = 0; e < m; ++e) {
    const int j = image[static_cast<std::size_t>(e)];
    if (j < 0) continue;
    bwd.push_back({e, j, 1.0});
    // A unit on e drains tail(e) and feeds head(e); the untouched edges must
    // carry the compensation inside each component.
    route_to_root(g.tail(e), -1.0, bwd, j);
    route_to_root(g.head(e), 1.0, bwd, j);
  }
  out.backward.map = SparseMatrix::from_triplets(m, new_m, std::move(bwd));
  out.backward.cycle_only = true;
  return out;
}

FlowInstance instance_round(const FlowInstance& inst) {
  inst.validate();
  FlowInstance out = inst;
  for (int e = 0; e < out.r2.size(); ++e) {
    out.r2[e] = round_down_pow2(out.r2[e]);
    out.sp[e] = round_down_pow2(out.sp[e]);
  }
  return out;
}

BucketedInstance bucket_edges(const FlowInstance& inst) {
  inst.validate();
  std::map<std::pair<double, double>, std::vector<int>> by_key;
  BucketedInstance out;
  for (int e = 0; e < inst.graph.edge_count(); ++e) {
    if (untouched(inst, e))
      out.untouched.push_back(e);
    else
      by_key[{inst.r2[e], inst.sp[e]}].push_back(e);
  }

  // The untouched leftovers must be forest-shaped; a cycle among them means
  // the instance was not cycle-touching.
  std::vector<int> uf(static_cast<std::size_t>(inst.graph.vertex_count()));
  std::iota(uf.begin(), uf.end(), 0);
  std::function<int(int)> find = [&](int v) {
    while (uf[static_cast<std::size_t>(v)] != v) {
      uf[static_cast<std::size_t>(v)] = uf[static_cast<std::size_t>(uf[static_cast<std::size_t>(v)])];
      v = uf[static_cast<std::size_t>(v)];
    }
    return v;
  };
  for (int e : out.untouched) {
    const int a = find(inst.graph.tail(e));
    const int b = find(inst.graph.head(e));
    if (a == b)
      throw AcyclicityError("bucket_edges: zero-attribute edges close a cycle");
    uf[static_cast<std::size_t>(a)] = b;
  }

  for (auto& [key, edges] : by_key)
    out.buckets.push_back({key.first, key.second, std::move(edges)});
  return out;
}

FlowInstance union_instances(const std::vector<FlowInstance>& parts) {
  if (parts.empty()) throw InvalidInputError("union_instances: nothing to join");
  const int n = parts.front().graph.vertex_count();
  const double p = parts.front().p;
  std::vector<std::pair<int, int>> edges;
  std::vector<double> gg, rr, ss;
  for (const FlowInstance& part : parts) {
    if (part.graph.vertex_count() != n)
      throw InvalidInputError("union_instances: vertex counts differ");
    if (part.p != p)
      throw InvalidInputError("union_instances: mixed p values");
    for (int e = 0; e < part.graph.edge_count(); ++e) {
      edges.emplace_back(part.graph.tail(e), part.graph.head(e));
      gg.push_back(part.gradient[e]);
      rr.push_back(part.r2[e]);
      ss.push_back(part.sp[e]);
    }
  }
  FlowInstance out;
  const int m = static_cast<int>(edges.size());
  out.graph = Graph(n, std::move(edges));
  out.gradient = Eigen::Map<VectorXd>(gg.data(), m);
  out.r2 = Eigen::Map<VectorXd>(rr.data(), m);
  out.sp = Eigen::Map<VectorXd>(ss.data(), m);
  out.p = p;
  return out;
}

ApproxCheckReport check_approx_relation(const FlowInstance& target,
                                        const FlowInstance& source,
                                        const ApproxMap& m, int samples,
                                        Rng& rng, double tol) {
  target.validate();
  source.validate();
  if (m.map.rows() != target.graph.edge_count() ||
      m.map.cols() != source.graph.edge_count())
    throw InvalidInputError("check_approx_relation: map shape mismatch");
  if (!m.cycle_only &&
      target.graph.vertex_count() != source.graph.vertex_count())
    throw InvalidInputError(
        "check_approx_relation: general flows need a shared vertex set");

  ApproxCheckReport report;
  report.samples = samples;

  // Quasipolynomial-magnitude advisory on the attribute vectors.
  auto scan_magnitudes = [&](const FlowInstance& inst, const char* label) {
    const double lg = std::log2(static_cast<double>(std::max(inst.graph.vertex_count(), 2)));
    const double bound = std::exp2(lg * lg);
    for (int e = 0; e < inst.graph.edge_count(); ++e) {
      for (double v : {inst.r2[e], inst.sp[e]}) {
        if (v != 0.0 && (std::abs(v) > bound || std::abs(v) < 1.0 / bound)) {
          report.warnings.push_back(std::string(label) +
                                    ": attribute magnitude outside the "
                                    "quasipolynomial window");
          return;
        }
      }
    }
  };
  scan_magnitudes(source, "source");
  scan_magnitudes(target, "target");

  const SparseMatrix b_src = incidence_matrix(source.graph);
  const SparseMatrix b_tgt = incidence_matrix(target.graph);

  for (int s = 0; s < samples; ++s) {
    VectorXd f(source.graph.edge_count());
    for (int e = 0; e < f.size(); ++e) f[e] = rng.normal();
    if (m.cycle_only) f = project_cycle_space(source.graph, f);

    const VectorXd ft = m.map.apply(f);
    const double lhs =
        (flow_objective(source, f) - m.delta * f.lpNorm<1>()) / m.kappa;
    const double rhs = flow_objective(target, ft / m.kappa);
    const double scale = 1.0 + std::abs(flow_objective(source, f));
    report.worst_violation = std::max(report.worst_violation, lhs - rhs);
    if (lhs - rhs > tol * scale) report.passed = false;

    const double res_scale = 1.0 + f.lpNorm<Eigen::Infinity>();
    double res_err = 0.0;
    if (m.cycle_only) {
      res_err = b_tgt.apply_transpose(ft).lpNorm<Eigen::Infinity>();
    } else {
      res_err = (b_tgt.apply_transpose(ft) - b_src.apply_transpose(f))
                    .lpNorm<Eigen::Infinity>();
    }
    report.worst_residue_error = std::max(report.worst_residue_error, res_err);
    if (res_err > tol * res_scale * std::sqrt(source.graph.edge_count() + 1.0))
      report.passed = false;
  }
  return report;
}

ExpanderPlugin identity_plugin() {
  return [](const FlowInstance& bucket, Rng&) {
    PluginResult r;
    r.sparse = bucket;
    r.to_sparse.map = SparseMatrix::identity(bucket.graph.edge_count());
    r.from_sparse.map = SparseMatrix::identity(bucket.graph.edge_count());
    return r;
  };
}

PipelineResult flow_sparsify_pipeline(const FlowInstance& inst,
                                      const VertexVector& demands,
                                      const ExpanderPlugin& plugin, Rng& rng) {
  if (detect_unbounded(inst))
    throw UnboundedInstanceError("flow_sparsify_pipeline: unbounded instance");

  ContractionResult contracted = contract_constant_cycles(inst, demands);
  const FlowInstance rounded = instance_round(contracted.inst);
  const int mr = rounded.graph.edge_count();

  ApproxMap round_fwd;  // contracted <= rounded, exact
  round_fwd.map = SparseMatrix::identity(mr);
  ApproxMap round_bwd;  // rounded <= contracted at kappa 2
  round_bwd.map = SparseMatrix::identity(mr);
  round_bwd.kappa = 2.0;

  const BucketedInstance buckets = bucket_edges(rounded);

  // Per-bucket instances live on the full vertex set so the union is legal.
  std::vector<FlowInstance> parts;
  std::vector<std::vector<int>> part_edges;  // positions in the rounded instance
  std::vector<ApproxMap> part_fwd, part_bwd;

  auto slice = [&](const std::vector<int>& edges) {
    FlowInstance sub;
    std::vector<std::pair<int, int>> se;
    sub.gradient = VectorXd::Zero(static_cast<Eigen::Index>(edges.size()));
    sub.r2 = VectorXd::Zero(static_cast<Eigen::Index>(edges.size()));
    sub.sp = VectorXd::Zero(static_cast<Eigen::Index>(edges.size()));
    sub.p = rounded.p;
    for (std::size_t i = 0; i < edges.size(); ++i) {
      const int e = edges[i];
      se.emplace_back(rounded.graph.tail(e), rounded.graph.head(e));
      sub.gradient[static_cast<Eigen::Index>(i)] = rounded.gradient[e];
      sub.r2[static_cast<Eigen::Index>(i)] = rounded.r2[e];
      sub.sp[static_cast<Eigen::Index>(i)] = rounded.sp[e];
    }
    sub.graph = Graph(rounded.graph.vertex_count(), std::move(se));
    return sub;
  };

  for (const auto& bucket : buckets.buckets) {
    PluginResult pr = plugin(slice(bucket.edges), rng);
    parts.push_back(std::move(pr.sparse));
    part_edges.push_back(bucket.edges);
    part_fwd.push_back(std::move(pr.to_sparse));
    part_bwd.push_back(std::move(pr.from_sparse));
  }
  if (!buckets.untouched.empty()) {
    PluginResult pr = identity_plugin()(slice(buckets.untouched), rng);
    parts.push_back(std::move(pr.sparse));
    part_edges.push_back(buckets.untouched);
    part_fwd.push_back(std::move(pr.to_sparse));
    part_bwd.push_back(std::move(pr.from_sparse));
  }

  PipelineResult out;
  out.demands = contracted.demands;
  out.offset = contracted.offset;
  if (parts.empty()) {
    // Nothing survived contraction: an empty instance on the contracted
    // vertices, with empty maps.
    out.sparse.graph = Graph(contracted.inst.graph.vertex_count(), {});
    out.sparse.gradient = VectorXd::Zero(0);
    out.sparse.r2 = VectorXd::Zero(0);
    out.sparse.sp = VectorXd::Zero(0);
    out.sparse.p = rounded.p;
    out.to_sparse = compose(compose(contracted.forward, round_fwd),
                            ApproxMap{SparseMatrix(0, mr), 1.0, 0.0, true});
    out.from_sparse = compose(ApproxMap{SparseMatrix(mr, 0), 1.0, 0.0, true},
                              compose(round_bwd, contracted.backward));
    return out;
  }
  out.sparse = union_instances(parts);

  // Block-assembled union maps between the rounded edge space and the
  // concatenated sparse edge space.  A shared (kappa, delta) valid for every
  // part is the componentwise max; the guarantee is monotone in both.
  double fwd_kappa = 1.0, fwd_delta = 0.0, bwd_kappa = 1.0, bwd_delta = 0.0;
  bool fwd_cycle = false, bwd_cycle = false;
  std::vector<Triplet> ufwd, ubwd;
  int offset_sparse = 0;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    fwd_kappa = std::max(fwd_kappa, part_fwd[i].kappa);
    fwd_delta = std::max(fwd_delta, part_fwd[i].delta);
    fwd_cycle = fwd_cycle || part_fwd[i].cycle_only;
    bwd_kappa = std::max(bwd_kappa, part_bwd[i].kappa);
    bwd_delta = std::max(bwd_delta, part_bwd[i].delta);
    bwd_cycle = bwd_cycle || part_bwd[i].cycle_only;
    for (const Triplet& t : part_fwd[i].map.triplets())
      ufwd.push_back({offset_sparse + t.row, part_edges[i][static_cast<std::size_t>(t.col)], t.value});
    for (const Triplet& t : part_bwd[i].map.triplets())
      ubwd.push_back({part_edges[i][static_cast<std::size_t>(t.row)], offset_sparse + t.col, t.value});
    offset_sparse += parts[i].graph.edge_count();
  }
  ApproxMap union_fwd{SparseMatrix::from_triplets(offset_sparse, mr, std::move(ufwd)),
                      fwd_kappa, fwd_delta, fwd_cycle};
  ApproxMap union_bwd{SparseMatrix::from_triplets(mr, offset_sparse, std::move(ubwd)),
                      bwd_kappa, bwd_delta, bwd_cycle};

  out.to_sparse = compose(compose(contracted.forward, round_fwd), union_fwd);
  out.from_sparse = compose(union_bwd, compose(round_bwd, contracted.backward));
  return out;
}

}  // namespace pnorm
