#include "pnorm/instance_gen.hpp"

#include <algorithm>
#include <numeric>
#include <utility>
#include <vector>

#include "pnorm/errors.hpp"

namespace pnorm {

Graph random_connected_graph(int n, int m, Rng& rng) {
  if (n <= 0) throw InvalidInputError("random_connected_graph: n must be positive");
  if (n >= 2 && m < n - 1)
    throw InvalidInputError("random_connected_graph: need m >= n - 1 edges");

  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  for (int i = n - 1; i > 0; --i)
    std::swap(order[static_cast<std::size_t>(i)],
              order[rng.index(static_cast<std::size_t>(i) + 1)]);

  std::vector<std::pair<int, int>> edges;
  edges.reserve(static_cast<std::size_t>(m));
  for (int i = 1; i < n; ++i) {
    const int a = order[rng.index(static_cast<std::size_t>(i))];
    const int b = order[static_cast<std::size_t>(i)];
    edges.emplace_back(rng.coin(0.5) ? std::make_pair(a, b) : std::make_pair(b, a));
  }
  while (static_cast<int>(edges.size()) < m) {
    if (n < 2) throw InvalidInputError("random_connected_graph: extra edges need n >= 2");
    const int a = static_cast<int>(rng.index(static_cast<std::size_t>(n)));
    int b = static_cast<int>(rng.index(static_cast<std::size_t>(n) - 1));
    if (b >= a) ++b;  // distinct endpoints, no self-loops
    edges.emplace_back(a, b);
  }
  return Graph(n, std::move(edges));
}

VertexVector random_demands(const Graph& g, Rng& rng) {
  const int n = g.vertex_count();
  VertexVector d = VertexVector::Zero(n);
  if (n < 2) return d;
  const int pairs = std::max(1, n / 4);
  for (int k = 0; k < pairs; ++k) {
    const int a = static_cast<int>(rng.index(static_cast<std::size_t>(n)));
    int b = static_cast<int>(rng.index(static_cast<std::size_t>(n) - 1));
    if (b >= a) ++b;
    d[std::min(a, b)] += 1.0;
    d[std::max(a, b)] -= 1.0;
  }
  return d;
}

namespace {

EdgeVector log_uniform_weights(int m, double lo, double hi, double zero_fraction,
                               Rng& rng) {
  EdgeVector w(m);
  for (int e = 0; e < m; ++e)
    w[e] = rng.coin(zero_fraction) ? 0.0 : rng.log_uniform(lo, hi);
  return w;
}

MatrixXd gaussian(int rows, int cols, Rng& rng) {
  MatrixXd a(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) a(i, j) = rng.normal();
  return a;
}

}  // namespace

GeneratedInstance generate_instance(const GenOptions& opt) {
  if (!(opt.p >= 2.0)) throw InvalidInputError("generate_instance: p must be >= 2");
  if (!(opt.w_min > 0.0) || !(opt.w_max >= opt.w_min))
    throw InvalidInputError("generate_instance: need 0 < w_min <= w_max");
  Rng rng(opt.seed);
  GeneratedInstance out;
  out.kind = opt.kind;

  if (opt.kind == "flow" || opt.kind == "voltage") {
    Rng graph_rng = rng.split(0x11);
    Graph g = random_connected_graph(opt.n, opt.m, graph_rng);
    const int m = g.edge_count();
    Rng w_rng = rng.split(0x12);
    EdgeVector quad =
        log_uniform_weights(m, opt.w_min, opt.w_max, opt.zero_quad_fraction, w_rng);
    Rng s_rng = rng.split(0x13);
    EdgeVector lp =
        log_uniform_weights(m, opt.w_min, opt.w_max, opt.zero_lp_fraction, s_rng);
    Rng d_rng = rng.split(0x14);
    const VertexVector demands = random_demands(g, d_rng);

    if (opt.kind == "flow") {
      Rng g_rng = rng.split(0x15);
      EdgeVector grad(m);
      for (int e = 0; e < m; ++e) grad[e] = g_rng.normal();
      out.flow.graph = std::move(g);
      out.flow.gradient = std::move(grad);
      out.flow.r2 = std::move(quad);
      out.flow.sp = std::move(lp);
      out.flow.p = opt.p;
      out.demands = demands;
      out.flow.validate();
    } else {
      out.voltage.graph = std::move(g);
      out.voltage.w2 = std::move(quad);
      out.voltage.sp = std::move(lp);
      out.voltage.demands = demands;
      out.voltage.p = opt.p;
      out.voltage.validate();
    }
    return out;
  }

  if (opt.kind == "matrix") {
    if (opt.m < opt.n)
      throw InvalidInputError("generate_instance: matrix kind needs m >= n rows");
    const int n = opt.n;
    const int d = std::max(1, n / 4);
    Rng a_rng = rng.split(0x21);
    const MatrixXd a = gaussian(d, n, a_rng);
    Rng m_rng = rng.split(0x22);
    const MatrixXd mm = gaussian(opt.m, n, m_rng);
    Rng n_rng = rng.split(0x23);
    const MatrixXd nn = gaussian(opt.m, n, n_rng);
    Rng b_rng = rng.split(0x24);
    VectorXd b(n), z(n);
    for (int i = 0; i < n; ++i) b[i] = b_rng.normal();
    // c = A z keeps the constraint consistent by construction.
    for (int i = 0; i < n; ++i) z[i] = b_rng.normal();

    out.matrix.a = SparseMatrix::from_dense(a);
    out.matrix.m = SparseMatrix::from_dense(mm);
    out.matrix.n = SparseMatrix::from_dense(nn);
    out.matrix.b = std::move(b);
    out.matrix.c = a * z;
    out.matrix.p = opt.p;
    out.matrix.validate();
    return out;
  }

  throw InvalidInputError("generate_instance: unknown kind '" + opt.kind +
                          "' (expected flow, voltage, or matrix)");
}

PNormProblem as_problem(const GeneratedInstance& inst) {
  if (inst.kind == "flow") return as_pnorm_problem(inst.flow, inst.demands);
  if (inst.kind == "voltage") return as_pnorm_problem(inst.voltage);
  if (inst.kind == "matrix") return inst.matrix;
  throw InvalidInputError("as_problem: unknown kind '" + inst.kind + "'");
}

}  // namespace pnorm
