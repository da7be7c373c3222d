#include "pnorm/lewis.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>

#include "pnorm/errors.hpp"

namespace pnorm {

namespace {

// q_i = a_i^T (A^T diag(s) A)^+ a_i for all rows at once, through a thin SVD
// of diag(sqrt(s)) A. Singular values below 1e-10 of the largest are treated
// as rank deficiency.
VectorXd weighted_pinv_quadforms(const MatrixXd& a, const VectorXd& s) {
  const MatrixXd b = s.array().sqrt().matrix().asDiagonal() * a;
  Eigen::BDCSVD<MatrixXd> svd(b, Eigen::ComputeThinV);
  const VectorXd& sv = svd.singularValues();
  if (sv.size() == 0 || sv[0] <= 0.0) return VectorXd::Zero(a.rows());
  const double cut = 1e-10 * sv[0];
  int rank = 0;
  while (rank < sv.size() && sv[rank] > cut) ++rank;
  const MatrixXd w =
      a * svd.matrixV().leftCols(rank) * sv.head(rank).cwiseInverse().asDiagonal();
  return w.rowwise().squaredNorm();
}

}  // namespace

VectorXd leverage_scores(const MatrixXd& a) {
  return weighted_pinv_quadforms(a, VectorXd::Ones(a.rows()))
      .cwiseMax(VectorXd::Zero(a.rows()));
}

LewisResult lewis_weights(const MatrixXd& a, double p, int max_iter, double tol) {
  if (p < 2.0 || p >= 4.0)
    throw UnsupportedPError("lewis_weights: only p in [2,4) is supported");

  LewisResult out;
  out.p = p;
  out.tau = leverage_scores(a);

  std::vector<char> zero_row(static_cast<std::size_t>(a.rows()), 0);
  for (int i = 0; i < a.rows(); ++i) {
    if (a.row(i).norm() == 0.0) {
      zero_row[static_cast<std::size_t>(i)] = 1;
      out.tau[i] = 0.0;
    }
  }

  // Relative defect of the defining identity at the current weights; also
  // hands back the quadforms so an update step costs nothing extra.
  auto measure = [&](const VectorXd& w) -> std::pair<VectorXd, double> {
    VectorXd s(w.size());
    for (int i = 0; i < w.size(); ++i)
      s[i] = zero_row[static_cast<std::size_t>(i)]
                 ? 0.0
                 : std::pow(std::max(w[i], 0.0), 1.0 - 2.0 / p);
    VectorXd q = weighted_pinv_quadforms(a, s);
    double worst = 0.0;
    for (int i = 0; i < w.size(); ++i) {
      if (zero_row[static_cast<std::size_t>(i)]) continue;
      const double target = std::pow(std::max(w[i], 0.0), 2.0 / p);
      worst = std::max(worst, std::abs(q[i] - target) / std::max(target, 1e-300));
    }
    return {std::move(q), worst};
  };

  const int budget =
      max_iter > 0
          ? max_iter
          : static_cast<int>(2.0 * std::ceil(std::log(1.0 / tol)) /
                             (1.0 - std::abs(p / 2.0 - 1.0))) +
                1;

  auto [q, defect] = measure(out.tau);
  while (defect > tol && out.iterations < budget) {
    for (int i = 0; i < out.tau.size(); ++i)
      out.tau[i] = zero_row[static_cast<std::size_t>(i)]
                       ? 0.0
                       : std::pow(std::max(q[i], 0.0), p / 2.0);
    ++out.iterations;
    std::tie(q, defect) = measure(out.tau);
  }
  out.fixed_point_residual = defect;
  out.converged = defect <= tol;
  return out;
}

VectorXd mixed_sampling_values(const VectorXd& tau_c, const VectorXd& tau_d,
                               int n, double p, double c_const) {
  if (tau_c.size() != tau_d.size())
    throw InvalidInputError("mixed_sampling_values: score vectors must pair up");
  if (p < 2.0 || p >= 4.0)
    throw UnsupportedPError("mixed_sampling_values: only p in [2,4) is supported");
  const double ln_n = std::log(static_cast<double>(std::max(n, 2)));
  const double lp_boost = std::pow(static_cast<double>(std::max(n, 1)), p / 2.0 - 1.0);
  VectorXd nu(tau_c.size());
  for (int i = 0; i < nu.size(); ++i)
    nu[i] = c_const * std::max(tau_c[i] * ln_n, tau_d[i] * lp_boost * ln_n);
  return nu;
}

SampledRows draw_rows(const VectorXd& nu, double p, Rng& rng) {
  if ((nu.array() < 0.0).any())
    throw InvalidInputError("draw_rows: sampling values must be non-negative");
  const double total = nu.sum();
  if (!(total >= 1.0))
    throw InvalidInputError("draw_rows: total sampling mass must be at least 1");

  std::vector<int> support;
  std::vector<double> cum;
  double acc = 0.0;
  for (int i = 0; i < nu.size(); ++i) {
    if (nu[i] <= 0.0) continue;
    support.push_back(i);
    acc += nu[i] / total;
    cum.push_back(acc);
  }
  cum.back() = 1.0;

  const long count = static_cast<long>(std::ceil(total));
  SampledRows out;
  out.draws.reserve(static_cast<std::size_t>(count));
  out.p_scale.resize(count);
  out.r_scale.resize(count);
  for (long d = 0; d < count; ++d) {
    const double u = rng.uniform();
    const std::size_t slot = static_cast<std::size_t>(
        std::lower_bound(cum.begin(), cum.end(), u) - cum.begin());
    const int b = support[slot];
    out.draws.push_back(b);
    out.p_scale[d] = std::pow(nu[b], -1.0 / p);
    out.r_scale[d] = std::pow(nu[b], 1.0 / p - 0.5);
  }
  return out;
}

std::pair<SparseMatrix, SparseMatrix> sample_rows(const SparseMatrix& c,
                                                  const SparseMatrix& d,
                                                  const VectorXd& nu, double p,
                                                  Rng& rng) {
  if (c.rows() != d.rows() || c.rows() != nu.size())
    throw InvalidInputError("sample_rows: c, d, nu must agree in length");
  const SampledRows sr = draw_rows(nu, p, rng);
  const VectorXd l2_scale = sr.r_scale.cwiseProduct(sr.p_scale);  // nu^{-1/2}
  return {c.gather_rows(sr.draws, l2_scale), d.gather_rows(sr.draws, sr.p_scale)};
}

std::pair<SparseMatrix, SparseMatrix> sparsify_mixed_problem(
    const SparseMatrix& m, const SparseMatrix& n, double p, Rng& rng,
    double c_const) {
  if (m.cols() != n.cols())
    throw InvalidInputError("sparsify_mixed_problem: column counts must match");
  const int rows = std::max(m.rows(), n.rows());
  const SparseMatrix mp = m.rows() == rows
                              ? m
                              : SparseMatrix::vstack(m, SparseMatrix(rows - m.rows(), m.cols()));
  const SparseMatrix np = n.rows() == rows
                              ? n
                              : SparseMatrix::vstack(n, SparseMatrix(rows - n.rows(), n.cols()));

  const VectorXd tau_c = leverage_scores(mp.to_dense());
  const LewisResult lw = lewis_weights(np.to_dense(), p);
  // An unconverged fixed point still yields usable sampling values once the
  // oversampling constant absorbs the extra approximation slack.
  const double c_eff = lw.converged ? c_const : 2.0 * c_const;
  const VectorXd nu = mixed_sampling_values(tau_c, lw.tau, m.cols(), p, c_eff);
  return sample_rows(mp, np, nu, p, rng);
}

LewisScaling lewis_scaling() { return LewisScaling{}; }

}  // namespace pnorm
