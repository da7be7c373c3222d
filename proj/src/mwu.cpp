#include "pnorm/mwu.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>

#include "pnorm/errors.hpp"

namespace pnorm {

namespace {

double pow_int_safe(double base, double e) { return std::pow(base, e); }

long long now_ns() {
  return std::chrono::duration_cast<std::chrono::nanoseconds>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

double p_norm_pow(const VectorXd& v, double p) {
  double acc = 0.0;
  for (int i = 0; i < v.size(); ++i) acc += std::pow(std::abs(v[i]), p);
  return acc;
}

}  // namespace

MwuParams MwuParams::compute(int m1, double p, const MwuConstants& c) {
  if (m1 <= 0) throw InvalidInputError("MwuParams: m1 must be positive");
  if (!(p > 2.0)) throw UnsupportedPError("MwuParams: requires p > 2");
  MwuParams out;
  out.p = p;
  out.m1 = m1;
  const double md = static_cast<double>(m1);
  out.alpha = c.c_alpha / p * pow_int_safe(md, -(p * p - 5.0 * p + 2.0) / (p * (3.0 * p - 2.0)));
  out.beta = c.c_beta * pow_int_safe(md, (p - 2.0) / (3.0 * p - 2.0));
  out.rho = c.c_rho * pow_int_safe(md, (p * p - 4.0 * p + 2.0) / (p * (3.0 * p - 2.0)));
  out.tau = c.c_tau * pow_int_safe(md, (p - 1.0) * (p - 2.0) / (3.0 * p - 2.0));
  out.flow_budget = static_cast<long>(std::ceil(pow_int_safe(md, 1.0 / p) / out.alpha));
  out.width_budget = static_cast<long>(
      std::ceil(std::pow(2.0, -p / (p - 2.0)) * out.rho * out.rho *
                pow_int_safe(md, 2.0 / p) * pow_int_safe(out.beta, -2.0 / (p - 2.0))));
  return out;
}

void MwuInvariantLog::record(bool ok, double rel, const std::string& what) {
  ++checks;
  if (!ok) {
    ++violations;
    if (rel > worst_violation) worst_violation = rel;
    if (first_violation.empty()) first_violation = what;
  }
}

VectorXd oracle_solve(const EqualityQpSolver& kkt, const SparseMatrix& m, const SparseMatrix& n,
                      const VectorXd& c, const VectorXd& r, double p, int m1) {
  std::vector<QuadTerm> terms;
  terms.push_back({&m, VectorXd::Ones(m.rows()), std::pow(static_cast<double>(m1), (p - 2.0) / p)});
  terms.push_back({&n, r, std::pow(3.0, -(p - 2.0))});
  return kkt.solve(terms, VectorXd::Zero(m.cols()), c).x;
}

UnitScaling scale_to_unit(const SparseMatrix& m, const VectorXd& c, double nu, double p) {
  if (!(nu > 0.0)) throw InvalidInputError("scale_to_unit: nu must be > 0");
  UnitScaling out;
  out.m_scaled = m.scaled(std::pow(nu, -(p - 2.0) / (2.0 * p)));
  out.c_scaled = std::pow(nu, -1.0 / p) * c;
  out.descale = std::pow(nu, 1.0 / p);
  return out;
}

double phi_potential(const VectorXd& w, double p) { return p_norm_pow(w, p); }

double psi_potential(const EqualityQpSolver& kkt, const SparseMatrix& m, const SparseMatrix& n,
                     const VectorXd& c, const VectorXd& r, double p, int m1) {
  const VectorXd delta = oracle_solve(kkt, m, n, c, r, p, m1);
  const double quad = m.apply(delta).squaredNorm();
  const VectorXd nd = n.apply(delta);
  return std::pow(static_cast<double>(m1), (p - 2.0) / p) * quad +
         std::pow(3.0, -(p - 2.0)) * nd.cwiseProduct(nd).dot(r);
}

MwuResult residual_solver(const SparseMatrix& a, const SparseMatrix& m, const SparseMatrix& n,
                          const VectorXd& c, double p, double nu, const MwuOptions& opt) {
  if (m.cols() != n.cols() || (a.rows() > 0 && a.cols() != m.cols()))
    throw InvalidInputError("residual_solver: column mismatch");
  MwuResult out;
  EqualityQpSolver kkt(a, opt.kkt_tol);

  if (p == 2.0) {
    // Quadratic problem; one KKT solve is exact.
    std::vector<QuadTerm> terms;
    terms.push_back({&m, VectorXd::Ones(m.rows()), 1.0});
    terms.push_back({&n, VectorXd::Ones(n.rows()), 1.0});
    auto sol = kkt.solve(terms, VectorXd::Zero(m.cols()), c);
    out.x = sol.x;
    out.feas_error = sol.feas_error;
    out.oracle_calls = 1;
    out.quad_energy = m.apply(out.x).squaredNorm();
    out.np_energy = n.apply(out.x).squaredNorm();
    return out;
  }

  const int m1 = n.rows();
  const MwuParams prm = MwuParams::compute(m1, p, opt.constants);
  const UnitScaling scaled = scale_to_unit(m, c, nu, p);
  const double m1d = static_cast<double>(m1);
  const double m1_root = std::pow(m1d, 1.0 / p);

  // Run at alpha_run = m1^{1/p} / T <= alpha so that T equal flow steps add up
  // to exactly m1^{1/p}; the returned m1^{-1/p} x then satisfies A x = c to
  // machine precision instead of missing by ~alpha. Shrinking alpha only
  // slackens the potential bounds.
  const double alpha_run = m1_root / static_cast<double>(prm.flow_budget);

  VectorXd w = VectorXd::Ones(m1);
  VectorXd x = VectorXd::Zero(m.cols());
  const double slack = opt.invariant_slack;

  double psi_prev = -1.0;
  long i = 0, k = 0;
  bool premature = false;
  const long long t0 = now_ns();
  while (i < prm.flow_budget) {
    VectorXd r(m1);
    for (int e = 0; e < m1; ++e) r[e] = std::pow(w[e], p - 2.0);
    const VectorXd delta = oracle_solve(kkt, scaled.m_scaled, n, scaled.c_scaled, r, p, m1);
    ++out.oracle_calls;

    const VectorXd nd = n.apply(delta);
    const double np_energy = p_norm_pow(nd, p);
    const double quad_energy = scaled.m_scaled.apply(delta).squaredNorm();
    const double phi_before = phi_potential(w, p);
    const double weighted = nd.cwiseProduct(nd).dot(r);
    const double psi_now = std::pow(m1d, (p - 2.0) / p) * quad_energy +
                           std::pow(3.0, -(p - 2.0)) * weighted;

    // Oracle bound (needs the optimum <= 1 promise).
    if (opt.certified_bound) {
      const double cap = std::pow(phi_before, (p - 2.0) / p);
      out.invariants.record(weighted <= cap * (1.0 + slack),
                            cap > 0 ? weighted / cap - 1.0 : 0.0, "oracle energy bound");
      const double psi_cap =
          std::pow(m1d, (p - 2.0) / p) + std::pow(3.0, -(p - 2.0)) * cap;
      out.invariants.record(psi_now <= psi_cap * (1.0 + slack),
                            psi_cap > 0 ? psi_now / psi_cap - 1.0 : 0.0, "psi upper sandwich");
    }
    // Psi is monotone in the resistances unconditionally.
    if (psi_prev >= 0.0)
      out.invariants.record(psi_now >= psi_prev * (1.0 - slack) - slack,
                            psi_prev > 0 ? 1.0 - psi_now / psi_prev : 0.0, "psi monotone");
    psi_prev = psi_now;

    bool width_step = false;
    if (np_energy <= prm.tau) {
      w += alpha_run * nd.cwiseAbs();
      x += alpha_run * delta;
      ++i;
      const double phi_after = phi_potential(w, p);
      // Unconditional triangle-inequality growth bound; the tighter 2*alpha
      // form additionally needs the oracle bound's premise.
      const double cap_tri =
          std::pow(std::pow(phi_before, 1.0 / p) + alpha_run * std::pow(np_energy, 1.0 / p), p);
      out.invariants.record(phi_after <= cap_tri * (1.0 + slack),
                            cap_tri > 0 ? phi_after / cap_tri - 1.0 : 0.0, "phi triangle bound");
      if (opt.certified_bound) {
        const double cap2 = std::pow(std::pow(phi_before, 1.0 / p) + 2.0 * alpha_run, p);
        out.invariants.record(phi_after <= cap2 * (1.0 + slack),
                              cap2 > 0 ? phi_after / cap2 - 1.0 : 0.0, "phi flow-step bound");
      }
    } else {
      width_step = true;
      long touched = 0;
      const double bump = std::pow(2.0, 1.0 / (p - 2.0));
      for (int e = 0; e < m1; ++e) {
        if (std::abs(nd[e]) >= prm.rho && r[e] <= prm.beta) {
          w[e] *= bump;
          ++touched;
        }
      }
      ++k;
      if (touched == 0) {
        // Nothing qualifies: the lp energy cannot be tamed, which only happens
        // when the optimum promise is broken. Bail out like a budget overrun.
        out.width_step_stalled = true;
        out.width_budget_exceeded = true;
        premature = true;
        break;
      }
      if (k > prm.width_budget) {
        out.width_budget_exceeded = true;
        premature = true;
        break;
      }
    }

    if (opt.record_trace) {
      out.trace.push_back({i + k, width_step, phi_potential(w, p), psi_now, np_energy,
                           quad_energy, now_ns() - t0});
    }
  }
  out.flow_steps = i;
  out.width_steps = k;

  // Descale: full runs divide by m1^{1/p} (== alpha_run * T); partial runs
  // normalize by the accumulated step weight so A x = c still holds exactly.
  if (i > 0) {
    x /= premature ? alpha_run * static_cast<double>(i) : m1_root;
  } else {
    x.setZero();
  }
  out.x = scaled.descale * x;
  out.quad_energy = m.apply(out.x).squaredNorm();
  out.np_energy = p_norm_pow(n.apply(out.x), p);
  if (a.rows() > 0 && i > 0) out.feas_error = (a.apply(out.x) - c).norm();
  else if (a.rows() > 0) out.feas_error = c.norm();
  return out;
}

void write_trace_csv(const std::vector<MwuTraceRow>& trace, const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (f == nullptr) throw Error("write_trace_csv: cannot open " + path);
  std::fprintf(f, "step_index,kind,phi,psi,np_energy,quad_energy,wallclock_ns\n");
  for (const MwuTraceRow& row : trace) {
    std::fprintf(f, "%ld,%s,%.17g,%.17g,%.17g,%.17g,%lld\n", row.step_index,
                 row.width_step ? "width" : "flow", row.phi, row.psi, row.np_energy,
                 row.quad_energy, row.wallclock_ns);
  }
  std::fclose(f);
}

}  // namespace pnorm
