#include "pnorm/kkt.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <functional>
#include <memory>

#include "pnorm/errors.hpp"

namespace pnorm {

VectorXd quad_apply(const std::vector<QuadTerm>& terms, const VectorXd& x) {
  VectorXd y = VectorXd::Zero(x.size());
  for (const QuadTerm& t : terms) {
    const VectorXd fx = t.factor->apply(x);
    y += t.scale * t.factor->apply_transpose(t.weights.cwiseProduct(fx));
  }
  return y;
}

double quad_value(const std::vector<QuadTerm>& terms, const VectorXd& x) {
  double v = 0.0;
  for (const QuadTerm& t : terms) {
    const VectorXd fx = t.factor->apply(x);
    v += t.scale * fx.cwiseProduct(fx).dot(t.weights);
  }
  return v;
}

namespace {

bool all_diagonal(const std::vector<QuadTerm>& terms) {
  for (const QuadTerm& t : terms)
    if (!t.factor->is_diagonal()) return false;
  return true;
}

// Solve S y = rhs for symmetric PSD S; LDLT first, eigen-pinv as the
// rank-deficient fallback (constraints like B^T on a connected graph are
// rank n-1, so singular Schur complements are routine, not exceptional).
VectorXd schur_solve(const MatrixXd& s, const VectorXd& rhs, double tol) {
  if (s.rows() == 0) return VectorXd::Zero(0);
  Eigen::LDLT<MatrixXd> ldlt(s);
  if (ldlt.info() == Eigen::Success) {
    VectorXd y = ldlt.solve(rhs);
    if ((s * y - rhs).norm() <= tol * (1.0 + rhs.norm())) return y;
  }
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(s);
  const VectorXd& ev = eig.eigenvalues();
  const double cut = std::max(0.0, ev.maxCoeff()) * s.rows() * 1e-14;
  VectorXd inv = VectorXd::Zero(s.rows());
  for (int i = 0; i < s.rows(); ++i)
    if (ev[i] > cut) inv[i] = 1.0 / ev[i];
  return eig.eigenvectors() * (inv.asDiagonal() * (eig.eigenvectors().transpose() * rhs));
}

}  // namespace

EqualityQpSolver::EqualityQpSolver(const SparseMatrix& a, double tol)
    : n_(a.cols()), d_(a.rows()), tol_(tol), a_dense_(a.to_dense()) {}

EqualityQpSolver::Result EqualityQpSolver::solve(const std::vector<QuadTerm>& terms,
                                                 const VectorXd& linear,
                                                 const VectorXd& c) const {
  if (linear.size() != n_) throw InvalidInputError("EqualityQpSolver: linear size");
  if (c.size() != d_) throw InvalidInputError("EqualityQpSolver: rhs size");

  // Apply Q^{-1} through either a diagonal divide or a dense Cholesky of the
  // shifted matrix.
  std::function<VectorXd(const VectorXd&)> q_inv;
  if (all_diagonal(terms)) {
    VectorXd qdiag = VectorXd::Zero(n_);
    for (const QuadTerm& t : terms) {
      const VectorXd f = t.factor->diagonal_values();
      qdiag += t.scale * t.weights.cwiseProduct(f).cwiseProduct(f);
    }
    const double shift = 1e-12 * (1.0 + (n_ > 0 ? qdiag.maxCoeff() : 0.0));
    const VectorXd inv = (qdiag.array() + shift).inverse().matrix();
    q_inv = [inv](const VectorXd& v) { return inv.cwiseProduct(v).eval(); };
  } else {
    MatrixXd q = MatrixXd::Zero(n_, n_);
    for (const QuadTerm& t : terms) {
      const MatrixXd f = t.factor->to_dense();
      q.noalias() += t.scale * f.transpose() * t.weights.asDiagonal() * f;
    }
    const double shift = 1e-12 * (1.0 + q.diagonal().maxCoeff());
    q.diagonal().array() += shift;
    auto llt = std::make_shared<Eigen::LLT<MatrixXd>>(q);
    if (llt->info() != Eigen::Success) throw SolverFailureError("EqualityQpSolver: LLT failed");
    q_inv = [llt](const VectorXd& v) { return llt->solve(v).eval(); };
  }

  Result out;
  if (d_ == 0) {
    out.x = q_inv(-0.5 * linear);
    out.multipliers = VectorXd::Zero(0);
    out.feas_error = 0.0;
    return out;
  }

  // Schur complement S = A Q^{-1} A^T, built column by column of A^T.
  MatrixXd w(n_, d_);
  for (int j = 0; j < d_; ++j) w.col(j) = q_inv(a_dense_.row(j).transpose());
  const MatrixXd s = a_dense_ * w;

  const VectorXd qinv_lin = q_inv(linear);
  VectorXd y = schur_solve(s, 2.0 * c + a_dense_ * qinv_lin, tol_);
  VectorXd x = 0.5 * (w * y - qinv_lin);

  // Iterative refinement on the feasibility defect (kills the Tikhonov shift).
  const double c_scale = 1.0 + c.norm();
  for (int round = 0; round < 3; ++round) {
    const VectorXd defect = c - a_dense_ * x;
    if (defect.norm() <= 0.1 * tol_ * c_scale) break;
    const VectorXd dy = schur_solve(s, 2.0 * defect, tol_);
    y += dy;
    x += 0.5 * w * dy;
  }
  out.feas_error = (c - a_dense_ * x).norm();
  if (out.feas_error > tol_ * c_scale)
    throw InfeasibleError("EqualityQpSolver: constraints unreachable (defect " +
                          std::to_string(out.feas_error) + ")");
  out.x = std::move(x);
  out.multipliers = std::move(y);
  return out;
}

}  // namespace pnorm
