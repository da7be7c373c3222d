#include "pnorm/spsd.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

#include "pnorm/errors.hpp"

namespace pnorm {

SpsdSolver::SpsdSolver(SparseMatrix s, SpsdOptions opt) : s_(std::move(s)), opt_(opt) {
  if (s_.rows() != s_.cols()) throw InvalidInputError("SpsdSolver: matrix not square");
  const int n = s_.rows();
  dense_ = n < opt_.dense_threshold;
  if (dense_) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(s_.to_dense());
    if (eig.info() != Eigen::Success) throw SolverFailureError("SpsdSolver: eigensolve failed");
    evec_ = eig.eigenvectors();
    const VectorXd& ev = eig.eigenvalues();
    const double lmax = n > 0 ? std::max(0.0, ev.maxCoeff()) : 0.0;
    const double cut = lmax * n * 1e-14;
    inv_eval_ = VectorXd::Zero(n);
    for (int i = 0; i < n; ++i)
      if (ev[i] > cut) inv_eval_[i] = 1.0 / ev[i];
  } else {
    diag_ = VectorXd::Ones(n);
    const VectorXd d = s_.diagonal_values();
    for (int i = 0; i < n; ++i)
      if (d[i] > 0.0) diag_[i] = d[i];
  }
}

VectorXd SpsdSolver::solve(const VectorXd& rhs) const {
  if (rhs.size() != s_.rows()) throw InvalidInputError("SpsdSolver::solve: size mismatch");
  VectorXd x;
  if (dense_) {
    x = evec_ * (inv_eval_.asDiagonal() * (evec_.transpose() * rhs));
  } else {
    x = solve_cg(rhs);
  }
  const double res = (s_.apply(x) - rhs).norm();
  if (res > opt_.tol * (1.0 + rhs.norm()) * std::sqrt(static_cast<double>(s_.rows()) + 1.0))
    throw InfeasibleError("SpsdSolver: right-hand side not in range (residual " +
                          std::to_string(res) + ")");
  return x;
}

VectorXd SpsdSolver::solve_cg(const VectorXd& rhs) const {
  const int n = s_.rows();
  VectorXd x = VectorXd::Zero(n);
  VectorXd r = rhs;
  VectorXd z = r.cwiseQuotient(diag_);
  VectorXd p = z;
  double rz = r.dot(z);
  const double target = opt_.tol * (1.0 + rhs.norm());
  const long max_iter = static_cast<long>(opt_.max_iter_mult) * n;
  for (long it = 0; it < max_iter; ++it) {
    if (r.norm() <= target) return x;
    const VectorXd sp = s_.apply(p);
    const double psp = p.dot(sp);
    if (psp <= 0.0) {
      // Hit the null space; restrict by dropping the direction.
      return x;
    }
    const double a = rz / psp;
    x += a * p;
    r -= a * sp;
    z = r.cwiseQuotient(diag_);
    const double rz_next = r.dot(z);
    p = z + (rz_next / rz) * p;
    rz = rz_next;
  }
  if (r.norm() > target)
    throw SolverFailureError("SpsdSolver: CG did not converge in " + std::to_string(max_iter) +
                             " iterations");
  return x;
}

VectorXd solve_spsd(const SparseMatrix& s, const VectorXd& rhs, const SpsdOptions& opt) {
  return SpsdSolver(s, opt).solve(rhs);
}

VertexVector laplacian_solve(const Graph& g, const EdgeVector& w, const VertexVector& rhs,
                             const SpsdOptions& opt) {
  if (rhs.size() != g.vertex_count()) throw InvalidInputError("laplacian_solve: rhs size");
  // Component structure of the positive-weight support (may be finer than the
  // graph's own components when weights vanish).
  std::vector<std::pair<int, int>> pos_edges;
  for (int e = 0; e < g.edge_count(); ++e)
    if (w[e] > 0.0) pos_edges.push_back(g.edges()[static_cast<std::size_t>(e)]);
  const Graph support(g.vertex_count(), pos_edges);
  const std::vector<int>& comp = support.component_ids();
  const int ncomp = support.component_count();

  VectorXd comp_sum = VectorXd::Zero(ncomp);
  VectorXd comp_size = VectorXd::Zero(ncomp);
  for (int v = 0; v < g.vertex_count(); ++v) {
    comp_sum[comp[static_cast<std::size_t>(v)]] += rhs[v];
    comp_size[comp[static_cast<std::size_t>(v)]] += 1.0;
  }
  const double scale = 1.0 + rhs.cwiseAbs().maxCoeff();
  for (int c = 0; c < ncomp; ++c)
    if (std::abs(comp_sum[c]) > 1e-8 * scale * comp_size[c])
      throw InfeasibleError("laplacian_solve: rhs does not balance on a component");

  VectorXd centered = rhs;
  for (int v = 0; v < g.vertex_count(); ++v) {
    const int c = comp[static_cast<std::size_t>(v)];
    centered[v] -= comp_sum[c] / comp_size[c];
  }
  VectorXd x = SpsdSolver(weighted_laplacian(g, w), opt).solve(centered);
  // Center the result too; the kernel component is arbitrary.
  VectorXd x_sum = VectorXd::Zero(ncomp);
  for (int v = 0; v < g.vertex_count(); ++v) x_sum[comp[static_cast<std::size_t>(v)]] += x[v];
  for (int v = 0; v < g.vertex_count(); ++v) {
    const int c = comp[static_cast<std::size_t>(v)];
    x[v] -= x_sum[c] / comp_size[c];
  }
  return x;
}

EdgeVector project_cycle_space(const Graph& g, const EdgeVector& grad, const SpsdOptions& opt) {
  if (grad.size() != g.edge_count()) throw InvalidInputError("project_cycle_space: grad size");
  if (g.edge_count() == 0) return grad;
  const SparseMatrix b = incidence_matrix(g);
  const VertexVector rhs = b.apply_transpose(grad);
  // B^T grad always balances per component, so this solve is safe.
  const VertexVector psi =
      SpsdSolver(weighted_laplacian(g, EdgeVector::Ones(g.edge_count())), opt).solve(rhs);
  return grad - b.apply(psi);
}

}  // namespace pnorm
