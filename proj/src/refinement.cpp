#include "pnorm/refinement.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

#include "pnorm/errors.hpp"
#include "pnorm/kkt.hpp"
#include "pnorm/lewis.hpp"
#include "pnorm/voltage_sparsifier.hpp"

namespace pnorm {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// E + F of the exponent-reduction scalings: m^{E+F} is the geometric price of
// trading the p-norm for the p'-norm and back.
double reduction_exponent(double p, double p_prime) {
  return (p / (p - 1.0)) * (1.0 / p_prime - 1.0 / p) + 1.0 / (p_prime - 1.0);
}

// Per-row magnitudes of a row-scaled incidence matrix. The voltage path needs
// the scales to rebuild edge weights; anything that is not incidence-shaped
// (two entries, equal magnitude, opposite sign, on the edge's endpoints) is a
// caller error.
EdgeVector incidence_row_scales(const SparseMatrix& a, const Graph& g,
                                const char* what) {
  if (a.rows() != g.edge_count() || a.cols() != g.vertex_count())
    throw InvalidInputError(std::string(what) +
                            ": matrix shape does not match the graph");
  EdgeVector s(a.rows());
  for (int e = 0; e < a.rows(); ++e) {
    const SparseMatrix::RowRef r = a.row(e);
    if (r.len == 0) {
      s[e] = 0.0;
      continue;
    }
    const int lo = std::min(g.tail(e), g.head(e));
    const int hi = std::max(g.tail(e), g.head(e));
    const bool ok = r.len == 2 && r.cols[0] == lo && r.cols[1] == hi &&
                    std::abs(r.vals[0] + r.vals[1]) <=
                        1e-12 * (std::abs(r.vals[0]) + std::abs(r.vals[1]));
    if (!ok)
      throw InvalidInputError(std::string(what) +
                              ": row is not a scaled incidence row");
    s[e] = std::abs(r.vals[0]);
  }
  return s;
}

SparsifiedResidual sparsify_voltage(const ResidualProblem& res, const Graph& g,
                                    Rng& rng) {
  const double p = res.p;
  const EdgeVector ms = incidence_row_scales(res.m, g, "voltage sparsifier (l2 part)");
  const EdgeVector ns = incidence_row_scales(res.n, g, "voltage sparsifier (lp part)");

  // Edge weights of the residual's quadratic form B^T diag(w) B.
  EdgeVector w_quad = (2.0 / (p * p)) * ms.cwiseProduct(ms);
  if (res.dn.size() > 0)
    w_quad += 2.0 * res.dn.cwiseProduct(ns.cwiseProduct(ns));

  VoltageInstance vi;
  vi.graph = g;
  vi.w2 = w_quad;
  vi.sp = ns;
  vi.demands = VertexVector::Zero(g.vertex_count());
  vi.p = p;
  const SparsifyResult sr = spanner_sparsify(vi, 1e-3, rng);
  const auto [mh, nh] = sparsified_pair(sr);

  SparsifiedResidual out;
  out.res.g = res.g;
  // The sampled quadratic form is sum_e u_e (B_H delta)_e^2; store it in the
  // m slot, undoing the 2/p^2 the residual convention will re-apply.
  out.res.m = mh.scaled(p / std::sqrt(2.0));
  out.res.n = nh;
  out.res.dn = VectorXd::Zero(nh.rows());
  out.res.p = p;
  out.res.dim = res.dim;
  const VoltageScaling vs = voltage_scaling(g.edge_count(), g.vertex_count(), p);
  out.mu2 = vs.mu2;
  out.kappa2 = vs.kappa2;
  return out;
}

SparsifiedResidual sparsify_lewis(const ResidualProblem& res, Rng& rng) {
  const auto [ct, dt] = sparsify_mixed_problem(res.factor(), res.n, res.p, rng);
  SparsifiedResidual out;
  out.res.g = res.g;
  out.res.m = ct.scaled(res.p / std::sqrt(2.0));
  out.res.n = dt;
  out.res.dn = VectorXd::Zero(dt.rows());
  out.res.p = res.p;
  out.res.dim = res.dim;
  const LewisScaling ls = lewis_scaling();
  out.mu2 = ls.mu2;
  out.kappa2 = ls.kappa2;
  return out;
}

struct SweepMeta {
  double nu = 0.0;
  ReductionFactors fac;
  int sched_idx = 0;
};

// One full outer refinement run from a feasible start. Shared by the public
// driver and the homotopy stages (which pass rep == nullptr).
VectorXd refine_loop(const PNormProblem& prob, VectorXd x, const SolveConfig& cfg,
                     const SparsifyContext& ctx, Rng& rng, SolveReport* rep) {
  const double p = prob.p;
  const int d = prob.a.rows();
  const int m_red = prob.n.rows();
  const double m_size = std::max({static_cast<double>(prob.n.rows()),
                                  static_cast<double>(prob.m.rows()),
                                  static_cast<double>(prob.num_vars()), 2.0});
  const double kappa0 = cfg.kappa0 >= 1.0 ? cfg.kappa0 : m_size;
  const double eps = cfg.epsilon;

  // Steps come out of KKT solves with ~1e-9 relative feasibility error; left
  // alone that drifts over hundreds of iterations, so a dense least-squares
  // projector pins x to the constraint manifold throughout.
  MatrixXd a_dense;
  Eigen::CompleteOrthogonalDecomposition<MatrixXd> cod;
  double c_scale = 1.0;
  if (d > 0) {
    a_dense = prob.a.to_dense();
    cod.compute(a_dense);
    c_scale = 1.0 + prob.c.lpNorm<Eigen::Infinity>();
  }
  auto reproject = [&](VectorXd& v) {
    if (d == 0) return;
    const VectorXd gap = prob.c - prob.a.apply(v);
    if (gap.lpNorm<Eigen::Infinity>() > 1e-13 * c_scale) v += cod.solve(gap);
  };
  auto to_kernel = [&](const VectorXd& delta) {
    if (d == 0) return delta;
    return VectorXd(delta - cod.solve(prob.a.apply(delta)));
  };
  reproject(x);

  double f_x = objective_value(prob, x);
  const double f_start = f_x;
  if (rep) rep->f0 = f_start;

  const bool reduce =
      m_red > 0 && p > 2.0 && p > std::log(static_cast<double>(m_red));
  const double p_eff =
      reduce ? std::max(2.0, std::ceil(std::log(static_cast<double>(m_red)))) : p;

  const double nu0 = f_start > 0.0 ? f_start : 1.0 + std::abs(f_start);
  const std::vector<double> sched = nu_schedule(nu0, kappa0, p, eps);
  const int sched_len = static_cast<int>(sched.size());

  // Iteration budget: the theoretical 4 p k2 k1 log(k0 m / eps) is effectively
  // unbounded once the reduction's k1 enters, so it is capped by the
  // schedule-proportional bound the quality tests are written against.
  long budget = cfg.max_outer;
  if (budget <= 0) {
    const double logterm =
        std::ceil(std::max(1.0, std::log(kappa0 * m_size / eps)));
    double kappa1_static = 1.0;
    if (reduce) {
      const double a_win = 1.0 / 33.0;
      kappa1_static = 8.0 * (cfg.reduction_b / (a_win * a_win)) *
                      std::pow(static_cast<double>(m_red),
                               reduction_exponent(p, p_eff));
    }
    double kappa2_static = 1.0;
    if (cfg.sparsifier == SparsifierKind::lewis) {
      kappa2_static = lewis_scaling().kappa2;
    } else if (cfg.sparsifier == SparsifierKind::voltage && ctx.graph != nullptr) {
      kappa2_static = voltage_scaling(ctx.graph->edge_count(),
                                      ctx.graph->vertex_count(), p_eff)
                          .kappa2;
    }
    const double theory = 4.0 * p * kappa2_static * kappa1_static * logterm;
    const double practical = 8.0 * p * logterm * static_cast<double>(sched_len + 1);
    budget = static_cast<long>(std::ceil(std::min(theory, practical)));
    budget = std::max(budget, 1L);
  }
  if (rep) {
    rep->schedule_length = sched_len;
    rep->budget = budget;
  }

  // Accuracy is judged relative to the initial gap, floored at a scale where
  // double-precision objective noise (~1e-15 absolute) cannot decide the
  // outcome: a start that is already nearly optimal only has to stay there.
  const bool have_oracle = std::isfinite(cfg.oracle_optimum);
  const double gap_denom =
      have_oracle ? std::max(f_start - cfg.oracle_optimum,
                             1e-6 * (1.0 + std::abs(cfg.oracle_optimum)))
                  : 0.0;
  auto certified = [&] {
    return have_oracle && f_x - cfg.oracle_optimum <= eps * gap_denom;
  };

  std::string stop = "budget";
  int last_win = 0;
  bool have_winner = false;
  long iter = 0;
  while (iter < budget) {
    if (certified()) {
      stop = "optimal";
      break;
    }
    const double f_before = f_x;
    const ResidualProblem res = build_residual(prob, x);

    // The reduction's nu-dependence is a uniform scaling of the lp matrix, and
    // both sparsifiers' sampling decisions are invariant under it, so one
    // reduce + one sparsify per iteration suffices; the sweep rescales.
    const double nu_ref = sched.empty() ? nu0 : sched.front();
    NormReduction red;
    if (reduce) {
      red = reduce_to_logm_norm(res, nu_ref, m_red, cfg.reduction_b);
    } else {
      red.res = res;
      red.p_prime = p;
      red.applied = false;
    }
    Rng rng_iter = rng.split(0x5200u + static_cast<std::uint64_t>(iter));
    const SparsifiedResidual sp =
        dispatch_sparsify(red.res, cfg.sparsifier, ctx, rng_iter);

    std::vector<VectorXd> cands;
    std::vector<SweepMeta> metas;
    std::vector<int> ray_best;  // candidate index of each nu's line-search best
    long iter_oracle = 0;

    auto sweep = [&](int lo, int hi) {
      for (int idx = std::max(lo, 0); idx <= hi && idx < sched_len; ++idx) {
        const double nu = sched[static_cast<std::size_t>(idx)];
        ResidualProblem work = sp.res;
        if (red.applied && nu != nu_ref) {
          const double ratio = std::pow(nu / nu_ref, 1.0 / p_eff - 1.0 / p);
          work.n = work.n.scaled(ratio);
          if (work.dn.size() > 0) work.dn /= ratio * ratio;
        }
        MwuOptions mo;
        mo.constants = cfg.mwu;
        DecisionSolve ds;
        try {
          ds = solve_decision_form(work, nu, red.factors.a, red.factors.b,
                                   prob.a, mo);
        } catch (const InfeasibleError&) {
          // Near a constrained optimum the gradient loses its kernel
          // component and the decision constraint g^T delta = a nu becomes
          // unreachable; that nu simply contributes no candidate.
          continue;
        } catch (const SolverFailureError&) {
          continue;
        }
        iter_oracle += ds.oracle_calls;
        if (ds.degenerate) continue;

        ReductionFactors fac = red.factors;
        fac.mu2 = sp.mu2;
        fac.kappa2 = sp.kappa2;
        fac.kappa3 = ds.kappa3;
        fac.kappa4 = ds.kappa4;
        if (red.applied) {
          // The inner solve is a beta-approximate residual maximizer with
          // beta = 16 b^2 k3 k4^{1/(p'-1)} / a^2; the reduction factors were
          // filled for beta = 1.
          const double beta = 16.0 * fac.b * fac.b * fac.kappa3 *
                              std::pow(fac.kappa4, 1.0 / (p_eff - 1.0)) /
                              (fac.a * fac.a);
          fac.mu1 /= beta;
          fac.kappa1 *= beta * beta;
        }
        const VectorXd kdelta = to_kernel(ds.delta);
        const double knorm = kdelta.norm();
        if (!kdelta.allFinite() || knorm == 0.0) continue;

        // The decision solve fixes the direction; its magnitude against the
        // true residual model res(t d) = a1 t - a2 t^2 - a4 t^p is a concave
        // 1-d problem solved here exactly. The guaranteed-descent step uses
        // the model optimum t*; the lattice-scaled step and a few multiples
        // of t* round out the candidate set for the argmin.
        VectorXd dir = kdelta / knorm;
        double a1 = res.g.dot(dir);
        if (a1 < 0.0) {
          dir = -dir;
          a1 = -a1;
        }
        if (!(a1 > 0.0)) continue;
        const double a2 = res.quad_form(dir);
        const double a4 =
            res.n.rows() > 0
                ? res.n.apply(dir).cwiseAbs().array().pow(p).sum()
                : 0.0;
        const double reach = 1e12 * (1.0 + x.norm());
        double t_hi = reach;
        if (a2 > 0.0) t_hi = std::min(t_hi, a1 / (2.0 * a2));
        if (a4 > 0.0)
          t_hi = std::min(t_hi, std::pow(a1 / (p * a4), 1.0 / (p - 1.0)));
        auto slope = [&](double t) {
          return a1 - 2.0 * a2 * t - p * a4 * std::pow(t, p - 1.0);
        };
        double t_star = t_hi;
        if (slope(t_hi) < 0.0) {
          double lo_t = 0.0, hi_t = t_hi;
          for (int bis = 0; bis < 200 && hi_t - lo_t > 1e-13 * hi_t; ++bis) {
            const double mid = 0.5 * (lo_t + hi_t);
            (slope(mid) > 0.0 ? lo_t : hi_t) = mid;
          }
          t_star = 0.5 * (lo_t + hi_t);
        }

        double best_f_ray = kInf;
        int best_idx_ray = -1;
        auto try_step = [&](VectorXd cand) {
          if (!cand.allFinite() || cand.norm() > reach) return;
          const double fc = objective_value(prob, refinement_step(x, cand, p));
          cands.push_back(std::move(cand));
          metas.push_back({nu, fac, idx});
          if (fc < best_f_ray) {
            best_f_ray = fc;
            best_idx_ray = static_cast<int>(cands.size()) - 1;
          }
        };
        try_step(decision_scale(kdelta, fac, p_eff));
        for (double sc : {1.0, 0.5, 2.0, 0.25, 4.0}) try_step(sc * t_star * dir);
        if (best_idx_ray >= 0) ray_best.push_back(best_idx_ray);
      }
    };

    int lo = 0, hi = sched_len - 1;
    if (have_winner) {
      lo = std::max(0, last_win - 1);
      hi = std::min(hi, last_win + 6);
    }
    sweep(lo, hi);
    cands.push_back(VectorXd::Zero(prob.num_vars()));
    double best_f = 0.0;
    int best = select_best_step(cands, prob, x, &best_f);

    // A partial sweep that produced nothing gets one full retry before the
    // iteration counts as stalled.
    if (best == static_cast<int>(cands.size()) - 1 && (lo > 0 || hi < sched_len - 1)) {
      cands.pop_back();
      sweep(0, lo - 1);
      sweep(hi + 1, sched_len - 1);
      cands.push_back(VectorXd::Zero(prob.num_vars()));
      best = select_best_step(cands, prob, x, &best_f);
    }

    // Unconditional local-model inequality, checked on each line-search
    // winner: f(x - delta/p) <= f(x) - res(delta), up to roundoff slack.
    if (rep) {
      const double slack = 1e-9 * (1.0 + std::abs(f_x));
      for (int ci : ray_best) {
        const double lhs =
            objective_value(prob, refinement_step(x, cands[static_cast<std::size_t>(ci)], p));
        const double rhs = f_x - residual_value(res, cands[static_cast<std::size_t>(ci)]);
        ++rep->descent_checks;
        if (lhs > rhs + slack) {
          ++rep->descent_violations;
          rep->worst_descent_violation =
              std::max(rep->worst_descent_violation, lhs - rhs);
        }
      }
    }

    const bool zero_won = best == static_cast<int>(cands.size()) - 1;
    double improvement = 0.0;
    if (!zero_won) {
      x = refinement_step(x, cands[static_cast<std::size_t>(best)], p);
      reproject(x);
      f_x = objective_value(prob, x);
      improvement = f_before - f_x;
      last_win = metas[static_cast<std::size_t>(best)].sched_idx;
      have_winner = true;
    }

    ++iter;
    if (rep) {
      rep->total_oracle_calls += iter_oracle;
      rep->nu_candidates_total += static_cast<long>(metas.size());
      if (cfg.collect_trace) {
        OuterIterationRecord rec;
        rec.index = iter - 1;
        rec.objective_before = f_before;
        rec.objective_after = f_x;
        rec.chosen_nu = zero_won ? 0.0 : metas[static_cast<std::size_t>(best)].nu;
        rec.candidates = static_cast<int>(metas.size());
        rec.oracle_calls = iter_oracle;
        if (!zero_won) rec.chosen_factors = metas[static_cast<std::size_t>(best)].fac;
        rep->iterations.push_back(std::move(rec));
      }
    }

    if (zero_won || improvement <= 1e-14 * (1.0 + std::abs(f_x))) {
      if (certified()) {
        stop = "optimal";
      } else {
        stop = "stagnation";
        if (cfg.strict_stagnation)
          throw StagnationError(
              "refinement made no progress before reaching the accuracy target");
      }
      break;
    }
  }
  if (stop == "budget" && certified()) stop = "optimal";

  if (rep) {
    rep->outer_iterations = iter;
    rep->stop_reason = stop;
    rep->converged = stop != "budget";
    rep->objective = f_x;
  }
  return x;
}

std::pair<VectorXd, SolveReport> solve_with_context(const PNormProblem& prob,
                                                    const SolveConfig& cfg,
                                                    const SparsifyContext& ctx) {
  prob.validate();
  if (!(cfg.epsilon > 0.0) || !(cfg.epsilon < 1.0))
    throw InvalidInputError("solve_pnorm: epsilon must lie in (0, 1)");
  if (cfg.kappa0 != 0.0 && cfg.kappa0 < 1.0)
    throw InvalidInputError("solve_pnorm: kappa0 must be >= 1");

  SolveReport rep;
  int stages = 0;
  VectorXd x0 = homotopy_init(prob, cfg, &stages);
  rep.homotopy_stages = stages;

  Rng rng = Rng(cfg.seed).split(0x91u);
  VectorXd x = refine_loop(prob, std::move(x0), cfg, ctx, rng, &rep);
  rep.objective = objective_value(prob, x);
  return {std::move(x), rep};
}

}  // namespace

SparsifierKind sparsifier_from_string(const std::string& name) {
  if (name == "identity") return SparsifierKind::identity;
  if (name == "voltage") return SparsifierKind::voltage;
  if (name == "lewis") return SparsifierKind::lewis;
  throw InvalidInputError("unknown sparsifier '" + name +
                          "' (expected identity, voltage, or lewis)");
}

std::string to_string(SparsifierKind kind) {
  switch (kind) {
    case SparsifierKind::identity: return "identity";
    case SparsifierKind::voltage: return "voltage";
    case SparsifierKind::lewis: return "lewis";
  }
  return "identity";
}

std::vector<double> nu_schedule(double f0, double kappa, double p, double epsilon) {
  if (!(kappa >= 1.0) || !(p >= 2.0) || !(epsilon > 0.0))
    throw InvalidInputError("nu_schedule: need kappa >= 1, p >= 2, epsilon > 0");
  std::vector<double> out;
  if (!(f0 > 0.0)) return out;
  const double floor_nu = epsilon * f0 / (kappa * p);
  double nu = f0;
  out.push_back(nu);
  while (nu / 2.0 >= floor_nu && nu > 1e-300) {
    nu /= 2.0;
    out.push_back(nu);
  }
  return out;
}

NormReduction reduce_to_logm_norm(const ResidualProblem& res, double nu, int m,
                                  double b_window) {
  if (m <= 0) throw InvalidInputError("reduce_to_logm_norm: m must be positive");
  if (!(nu > 0.0)) throw InvalidInputError("reduce_to_logm_norm: nu must be > 0");
  if (!(b_window > 0.0))
    throw InvalidInputError("reduce_to_logm_norm: b must be > 0");

  NormReduction out;
  const double p = res.p;
  const double lm = std::log(static_cast<double>(m));
  if (!(p > lm)) {
    out.res = res;
    out.p_prime = p;
    out.applied = false;
    return out;
  }
  const double pp = std::max(2.0, std::ceil(lm));
  const double sigma = std::pow(2.0, -1.0 / pp) *
                       std::pow(nu / static_cast<double>(m), 1.0 / pp - 1.0 / p);
  out.res = res;
  out.res.p = pp;
  // Exponent swaps rescale the stored pieces so the quadratic form and the
  // dn-weighted term keep their values under the new p.
  out.res.m = res.m.scaled(pp / p);
  out.res.n = res.n.scaled(sigma);
  if (res.dn.size() > 0) out.res.dn = res.dn / (sigma * sigma);
  out.p_prime = pp;
  out.applied = true;
  out.factors.a = 1.0 / 33.0;
  out.factors.b = b_window;
  const double ef = reduction_exponent(p, pp);
  out.factors.mu1 =
      (out.factors.a / (4.0 * out.factors.b)) * std::pow(static_cast<double>(m), -ef);
  out.factors.kappa1 = 8.0 * (out.factors.b / (out.factors.a * out.factors.a)) *
                       std::pow(static_cast<double>(m), ef);
  return out;
}

DecisionSolve solve_decision_form(const ResidualProblem& res, double nu, double a,
                                  double b, const SparseMatrix& a_mat,
                                  const MwuOptions& opt) {
  if (!(nu > 0.0) || !(a > 0.0) || !(b >= a))
    throw InvalidInputError("solve_decision_form: need nu > 0 and 0 < a <= b");
  if (a_mat.rows() > 0 && a_mat.cols() != res.dim)
    throw InvalidInputError("solve_decision_form: constraint width mismatch");

  DecisionSolve out;
  if (res.g.size() == 0 || res.g.lpNorm<Eigen::Infinity>() == 0.0) {
    out.degenerate = true;
    return out;
  }

  MatrixXd grow_dense(1, res.dim);
  grow_dense.row(0) = res.g.transpose();
  const SparseMatrix grow = SparseMatrix::from_dense(grow_dense);
  const SparseMatrix a_aug =
      a_mat.rows() > 0 ? SparseMatrix::vstack(a_mat, grow) : grow;
  VectorXd c_aug = VectorXd::Zero(a_aug.rows());
  c_aug[a_aug.rows() - 1] = a * nu;

  const SparseMatrix f = res.factor();
  const double bound = b * nu;
  double quad = 0.0, npe = 0.0;
  if (res.p == 2.0 || res.n.rows() == 0) {
    // Purely quadratic: one KKT solve is the exact decision answer.
    EqualityQpSolver kkt(a_aug);
    std::vector<QuadTerm> terms;
    terms.push_back({&f, VectorXd::Ones(f.rows()), 1.0});
    if (res.p == 2.0 && res.n.rows() > 0)
      terms.push_back({&res.n, VectorXd::Ones(res.n.rows()), 1.0});
    const auto sol = kkt.solve(terms, VectorXd::Zero(res.dim), c_aug);
    out.delta = sol.x;
    out.feas_error = sol.feas_error;
    out.oracle_calls = 1;
    quad = f.apply(out.delta).squaredNorm();
    if (res.p == 2.0 && res.n.rows() > 0)
      npe = res.n.apply(out.delta).squaredNorm();
  } else {
    const MwuResult r =
        residual_solver(a_aug, f, res.n, c_aug, res.p, bound, opt);
    out.delta = r.x;
    out.feas_error = r.feas_error;
    out.oracle_calls = r.oracle_calls;
    out.width_budget_exceeded = r.width_budget_exceeded;
    quad = r.quad_energy;
    npe = r.np_energy;
  }
  if (!out.delta.allFinite()) {
    out.degenerate = true;
    return out;
  }
  out.kappa3 = std::max(1.0, quad / bound);
  out.kappa4 = std::max(1.0, npe / bound);
  return out;
}

VectorXd decision_scale(const VectorXd& delta, const ReductionFactors& f,
                        double p_prime) {
  if (!(f.a > 0.0) || !(f.b > 0.0) || !(f.kappa3 >= 1.0) || !(f.kappa4 >= 1.0) ||
      !(f.mu1 > 0.0) || !(f.mu2 > 0.0) || !(p_prime > 1.0))
    throw InvalidInputError("decision_scale: factors out of range");
  const double s = f.a /
                   (2.0 * f.b * f.kappa3 * std::pow(f.kappa4, 1.0 / (p_prime - 1.0))) *
                   f.mu2 * f.mu1;
  return s * delta;
}

int select_best_step(const std::vector<VectorXd>& candidates,
                     const PNormProblem& prob, const VectorXd& x,
                     double* best_objective) {
  if (candidates.empty())
    throw InvalidInputError("select_best_step: candidate list is empty");
  int best = 0;
  double bf = kInf;
  for (int i = 0; i < static_cast<int>(candidates.size()); ++i) {
    const double f = objective_value(
        prob, refinement_step(x, candidates[static_cast<std::size_t>(i)], prob.p));
    if (f < bf) {
      bf = f;
      best = i;
    }
  }
  if (best_objective) *best_objective = bf;
  return best;
}

SparsifiedResidual dispatch_sparsify(const ResidualProblem& res, SparsifierKind kind,
                                     const SparsifyContext& ctx, Rng& rng) {
  switch (kind) {
    case SparsifierKind::identity: {
      SparsifiedResidual out;
      out.res = res;
      return out;
    }
    case SparsifierKind::voltage:
      if (ctx.graph == nullptr)
        throw InvalidInputError(
            "voltage sparsifier needs a graph-shaped residual over vertex "
            "potentials");
      return sparsify_voltage(res, *ctx.graph, rng);
    case SparsifierKind::lewis:
      return sparsify_lewis(res, rng);
  }
  throw InvalidInputError("dispatch_sparsify: unknown sparsifier");
}

VectorXd homotopy_init(const PNormProblem& prob, const SolveConfig& cfg,
                       int* stages_out) {
  prob.validate();

  // Exact quadratic start: grad = b + 2 M^T M x + 2 N^T N x restricted to the
  // constraint manifold, which is one KKT solve.
  EqualityQpSolver kkt(prob.a);
  std::vector<QuadTerm> terms;
  if (prob.m.rows() > 0)
    terms.push_back({&prob.m, VectorXd::Ones(prob.m.rows()), 1.0});
  if (prob.n.rows() > 0)
    terms.push_back({&prob.n, VectorXd::Ones(prob.n.rows()), 1.0});
  VectorXd x = kkt.solve(terms, prob.b, prob.c).x;

  int stages = 0;
  if (prob.p > 2.0) {
    Rng hr(cfg.seed);
    double pk = 4.0;
    while (true) {
      pk = std::min(pk, prob.p);
      PNormProblem stage = prob;
      stage.p = pk;
      // Constant accuracy is all a stage owes the next one; the identity
      // sparsifier keeps stages cheap and deterministic in shape.
      SolveConfig scfg = cfg;
      scfg.epsilon = 0.5;
      scfg.sparsifier = SparsifierKind::identity;
      scfg.max_outer = 40;
      scfg.oracle_optimum = std::numeric_limits<double>::quiet_NaN();
      scfg.strict_stagnation = false;
      scfg.collect_trace = false;
      Rng stage_rng = hr.split(0x870u + static_cast<std::uint64_t>(stages));
      x = refine_loop(stage, std::move(x), scfg, SparsifyContext{}, stage_rng,
                      nullptr);
      ++stages;
      if (pk >= prob.p) break;
      pk *= 2.0;
    }
  }
  if (stages_out) *stages_out = stages;
  return x;
}

std::pair<VectorXd, SolveReport> solve_pnorm(const PNormProblem& prob,
                                             const SolveConfig& cfg) {
  return solve_with_context(prob, cfg, SparsifyContext{});
}

std::pair<VectorXd, SolveReport> solve_flow(const FlowInstance& inst,
                                            const VertexVector& demands,
                                            const SolveConfig& cfg) {
  if (cfg.sparsifier == SparsifierKind::voltage)
    throw InvalidInputError(
        "voltage sparsifier does not apply to flow solves (edge-space "
        "variables); use identity or lewis");
  return solve_with_context(as_pnorm_problem(inst, demands), cfg,
                            SparsifyContext{});
}

std::pair<VectorXd, SolveReport> solve_voltage(const VoltageInstance& inst,
                                               const SolveConfig& cfg) {
  SparsifyContext ctx;
  ctx.graph = &inst.graph;
  return solve_with_context(as_pnorm_problem(inst), cfg, ctx);
}

}  // namespace pnorm
