// Command-line surface of the toolkit: instance generation, end-to-end
// solves judged against the Newton reference, one-shot sparsifier runs with
// quality metrics, and an instance invariant checker.
//
// Exit codes: 0 success, 2 invalid input, 3 solver failure, 4 property
// violation.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <Eigen/Core>
#include <json.hpp>

#include "pnorm/errors.hpp"
#include "pnorm/flow_prep.hpp"
#include "pnorm/instance_gen.hpp"
#include "pnorm/json_io.hpp"
#include "pnorm/lewis.hpp"
#include "pnorm/newton_oracle.hpp"
#include "pnorm/refinement.hpp"
#include "pnorm/voltage_sparsifier.hpp"

namespace {

using nlohmann::json;
using namespace pnorm;

constexpr int kOk = 0;
constexpr int kBadInput = 2;
constexpr int kSolverFailure = 3;
constexpr int kPropertyViolation = 4;

double now_ms() {
  return std::chrono::duration<double, std::milli>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot open " + path);
  f << text;
  if (!f) throw Error("write failure on " + path);
}

MwuConstants parse_constants(const std::string& spec) {
  MwuConstants out;
  if (spec.empty()) return out;
  std::size_t pos = 0;
  while (pos < spec.size()) {
    std::size_t comma = spec.find(',', pos);
    if (comma == std::string::npos) comma = spec.size();
    const std::string item = spec.substr(pos, comma - pos);
    const std::size_t eq = item.find('=');
    if (eq == std::string::npos)
      throw InvalidInputError("--constants: expected k=v, got '" + item + "'");
    const std::string key = item.substr(0, eq);
    const double value = std::stod(item.substr(eq + 1));
    if (key == "c_alpha") out.c_alpha = value;
    else if (key == "c_beta") out.c_beta = value;
    else if (key == "c_rho") out.c_rho = value;
    else if (key == "c_tau") out.c_tau = value;
    else throw InvalidInputError("--constants: unknown key '" + key + "'");
    pos = comma + 1;
  }
  return out;
}

json instance_summary(const GeneratedInstance& inst, const std::string& path) {
  const PNormProblem prob = as_problem(inst);
  return json{{"kind", inst.kind},         {"path", path},
              {"variables", prob.num_vars()}, {"constraints", prob.a.rows()},
              {"rows_l2", prob.m.rows()},  {"rows_lp", prob.n.rows()},
              {"p", prob.p}};
}

// ---------------------------------------------------------------------------
// generate

struct GenerateArgs {
  GenOptions opt;
  std::string out = "instance.json";
};

int run_generate(const GenerateArgs& args) {
  const GeneratedInstance inst = generate_instance(args.opt);
  save_instance(inst, args.out);
  std::cout << instance_summary(inst, args.out).dump(2) << "\n";
  return kOk;
}

// ---------------------------------------------------------------------------
// solve

struct SolveArgs {
  std::string input;
  double p_override = 0.0;  // 0 = keep the instance's p
  double eps = 1e-6;
  std::uint64_t seed = 1;
  std::string sparsifier = "identity";
  std::string trace_path;
  std::string report_path;
  std::string oracle = "on";
  std::string constants;
  long max_outer = 0;
  bool strict = false;
};

int run_solve(const SolveArgs& args) {
  const double t0 = now_ms();
  GeneratedInstance inst = load_instance(args.input);
  if (args.p_override != 0.0) {
    if (!(args.p_override >= 2.0))
      throw InvalidInputError("--p must be >= 2");
    inst.flow.p = inst.voltage.p = inst.matrix.p = args.p_override;
  }
  const PNormProblem prob = as_problem(inst);
  const double t_loaded = now_ms();

  SolveConfig cfg;
  cfg.epsilon = args.eps;
  cfg.seed = args.seed;
  cfg.sparsifier = sparsifier_from_string(args.sparsifier);
  cfg.mwu = parse_constants(args.constants);
  cfg.max_outer = args.max_outer;
  cfg.strict_stagnation = args.strict;
  cfg.collect_trace = !args.trace_path.empty();

  const bool oracle_on = args.oracle == "on";
  if (!oracle_on && args.oracle != "off")
    throw InvalidInputError("--oracle takes on or off");

  OracleResult oracle;
  if (oracle_on) {
    if (prob.num_vars() > 2000)
      throw InvalidInputError("--oracle on is limited to 2000 variables");
    oracle = newton_oracle(prob);
    if (!oracle.converged)
      throw SolverFailureError("reference oracle did not converge");
    cfg.oracle_optimum = oracle.objective;
  }
  const double t_oracle = now_ms();

  auto [x, rep] = inst.kind == "flow"
                      ? solve_flow(inst.flow, inst.demands, cfg)
                  : inst.kind == "voltage" ? solve_voltage(inst.voltage, cfg)
                                           : solve_pnorm(prob, cfg);
  const double t_solved = now_ms();

  json report;
  report["instance"] = instance_summary(inst, args.input);
  report["config"] = json{{"epsilon", cfg.epsilon},
                          {"sparsifier", args.sparsifier},
                          {"seed", cfg.seed},
                          {"max_outer", cfg.max_outer},
                          {"oracle", oracle_on},
                          {"constants",
                           json{{"c_alpha", cfg.mwu.c_alpha},
                                {"c_beta", cfg.mwu.c_beta},
                                {"c_rho", cfg.mwu.c_rho},
                                {"c_tau", cfg.mwu.c_tau}}}};
  report["objective"] = rep.objective;
  report["f0"] = rep.f0;
  report["outer_iterations"] = rep.outer_iterations;
  report["total_oracle_calls"] = rep.total_oracle_calls;
  report["schedule_length"] = rep.schedule_length;
  report["budget"] = rep.budget;
  report["homotopy_stages"] = rep.homotopy_stages;
  report["stop_reason"] = rep.stop_reason;
  report["converged"] = rep.converged;
  report["descent_checks"] = rep.descent_checks;
  report["descent_violations"] = rep.descent_violations;
  report["seed"] = cfg.seed;

  double gap = 0.0;
  if (oracle_on) {
    const double denom = std::max(rep.f0 - oracle.objective,
                                  1e-6 * (1.0 + std::abs(oracle.objective)));
    gap = (rep.objective - oracle.objective) / denom;
    report["oracle_objective"] = oracle.objective;
    report["relative_gap"] = gap;
  }
  report["timings_ms"] = json{{"load", t_loaded - t0},
                              {"oracle", t_oracle - t_loaded},
                              {"solve", t_solved - t_oracle},
                              {"total", t_solved - t0}};

  if (!args.trace_path.empty()) {
    std::string csv =
        "iteration,objective_before,objective_after,chosen_nu,candidates,"
        "oracle_calls\n";
    char line[256];
    for (const OuterIterationRecord& r : rep.iterations) {
      std::snprintf(line, sizeof(line), "%ld,%.17g,%.17g,%.17g,%d,%ld\n", r.index,
                    r.objective_before, r.objective_after, r.chosen_nu,
                    r.candidates, r.oracle_calls);
      csv += line;
    }
    write_text(args.trace_path, csv);
  }

  const std::string text = report.dump(2) + "\n";
  if (!args.report_path.empty()) write_text(args.report_path, text);
  std::cout << text;

  if (rep.descent_violations > 0) return kPropertyViolation;
  if (oracle_on && gap < -1e-9) return kPropertyViolation;
  if (oracle_on && gap > cfg.epsilon) return kSolverFailure;
  return kOk;
}

// ---------------------------------------------------------------------------
// sparsify

struct SparsifyArgs {
  std::string input;
  std::string kind = "voltage";  // voltage | lewis | flow
  std::uint64_t seed = 1;
  std::string report_path;
  int samples = 200;
};

json sparsify_voltage_report(const VoltageInstance& inst, std::uint64_t seed,
                             int samples) {
  Rng rng = Rng(seed).split(0x61);
  const SparsifyResult sr = spanner_sparsify(inst, 0.1, rng);
  const auto [mh, nh] = sparsified_pair(sr);
  const SparseMatrix b = incidence_matrix(inst.graph);
  const SparseMatrix sb =
      b.scaled_rows(inst.sp);  // lp matrix of the full instance
  const int n = inst.graph.vertex_count();
  const double p = inst.p;
  const double upper_factor =
      std::pow(static_cast<double>(inst.graph.edge_count()), 1.0 / p) *
      static_cast<double>(sr.stretch);

  Rng probe = Rng(seed).split(0x62);
  bool lower_ok = true, upper_ok = true;
  double worst_lower = 0.0, worst_upper = 0.0;
  for (int t = 0; t < samples; ++t) {
    VectorXd x(n);
    for (int i = 0; i < n; ++i) x[i] = probe.normal();
    const double full =
        std::pow(sb.apply(x).cwiseAbs().array().pow(p).sum(), 1.0 / p);
    const double kept =
        std::pow(nh.apply(x).cwiseAbs().array().pow(p).sum(), 1.0 / p);
    if (kept > full * (1.0 + 1e-9)) {
      lower_ok = false;
      worst_lower = std::max(worst_lower, full > 0 ? kept / full : 1e300);
    }
    if (full > upper_factor * kept * (1.0 + 1e-9)) {
      upper_ok = false;
      worst_upper =
          std::max(worst_upper, kept > 0 ? full / (upper_factor * kept) : 1e300);
    }
  }
  return json{{"kind", "voltage"},
              {"kept_edges", static_cast<int>(sr.kept.size())},
              {"spanner_edges", static_cast<int>(sr.spanner_edges.size())},
              {"spectral_edges", static_cast<int>(sr.spectral_edges.size())},
              {"stretch", sr.stretch},
              {"lp_subset_bound_ok", lower_ok},
              {"lp_stretch_bound_ok", upper_ok},
              {"samples", samples},
              {"pass", lower_ok && upper_ok}};
}

json sparsify_lewis_report(const PNormProblem& prob, std::uint64_t seed,
                           int samples) {
  Rng rng = Rng(seed).split(0x63);
  const auto [mt, nt] = sparsify_mixed_problem(prob.m, prob.n, prob.p, rng);
  Rng probe = Rng(seed).split(0x64);
  double lo = 1e300, hi = 0.0;
  for (int t = 0; t < samples; ++t) {
    VectorXd x(prob.num_vars());
    for (int i = 0; i < x.size(); ++i) x[i] = probe.normal();
    const double full = prob.m.apply(x).squaredNorm() +
                        prob.n.apply(x).cwiseAbs().array().pow(prob.p).sum();
    const double kept = mt.apply(x).squaredNorm() +
                        nt.apply(x).cwiseAbs().array().pow(prob.p).sum();
    if (full <= 0.0) continue;
    const double ratio = kept / full;
    lo = std::min(lo, ratio);
    hi = std::max(hi, ratio);
  }
  const double bound = lewis_scaling().kappa2;
  const bool pass = lo >= 1.0 / bound && hi <= bound;
  return json{{"kind", "lewis"},
              {"rows_kept", mt.rows()},
              {"rows_before", prob.m.rows() + prob.n.rows()},
              {"ratio_min", lo},
              {"ratio_max", hi},
              {"ratio_bound", bound},
              {"samples", samples},
              {"pass", pass}};
}

json sparsify_flow_report(const FlowInstance& inst, const VertexVector& demands,
                          std::uint64_t seed, int samples) {
  Rng rng = Rng(seed).split(0x65);
  const PipelineResult pr =
      flow_sparsify_pipeline(inst, demands, identity_plugin(), rng);
  Rng check_rng = Rng(seed).split(0x66);
  const ApproxCheckReport fwd =
      check_approx_relation(pr.sparse, inst, pr.to_sparse, samples, check_rng);
  Rng back_rng = Rng(seed).split(0x67);
  const ApproxCheckReport bwd = check_approx_relation(
      inst, pr.sparse, pr.from_sparse, samples, back_rng);
  return json{{"kind", "flow"},
              {"edges_before", inst.graph.edge_count()},
              {"edges_after", pr.sparse.graph.edge_count()},
              {"to_sparse", json{{"kappa", pr.to_sparse.kappa},
                                 {"delta", pr.to_sparse.delta},
                                 {"cycle_only", pr.to_sparse.cycle_only}}},
              {"from_sparse", json{{"kappa", pr.from_sparse.kappa},
                                   {"delta", pr.from_sparse.delta},
                                   {"cycle_only", pr.from_sparse.cycle_only}}},
              {"forward_check", fwd.passed},
              {"backward_check", bwd.passed},
              {"samples", samples},
              {"pass", fwd.passed && bwd.passed}};
}

int run_sparsify(const SparsifyArgs& args) {
  const GeneratedInstance inst = load_instance(args.input);
  json report;
  if (args.kind == "voltage") {
    if (inst.kind != "voltage")
      throw InvalidInputError("sparsify --kind voltage needs a voltage instance");
    report = sparsify_voltage_report(inst.voltage, args.seed, args.samples);
  } else if (args.kind == "lewis") {
    report = sparsify_lewis_report(as_problem(inst), args.seed, args.samples);
  } else if (args.kind == "flow") {
    if (inst.kind != "flow")
      throw InvalidInputError("sparsify --kind flow needs a flow instance");
    report = sparsify_flow_report(inst.flow, inst.demands, args.seed, args.samples);
  } else {
    throw InvalidInputError("sparsify: unknown kind '" + args.kind + "'");
  }
  const std::string text = report.dump(2) + "\n";
  if (!args.report_path.empty()) write_text(args.report_path, text);
  std::cout << text;
  return report.at("pass").get<bool>() ? kOk : kPropertyViolation;
}

// ---------------------------------------------------------------------------
// validate

struct ValidateArgs {
  std::string input;
  std::uint64_t seed = 1;
};

int run_validate(const ValidateArgs& args) {
  const GeneratedInstance inst = load_instance(args.input);
  json checks = json::array();
  bool all_ok = true;
  auto add = [&](const std::string& name, bool ok, const std::string& note = "") {
    checks.push_back(json{{"check", name}, {"ok", ok}, {"note", note}});
    all_ok = all_ok && ok;
  };

  add("well_formed", true);  // load_instance already ran validate()

  if (inst.kind == "flow") {
    const auto cycle = detect_unbounded(inst.flow);
    add("bounded_objective", !cycle.has_value(),
        cycle ? "zero-cost cycle with nonzero gradient sum" : "");
    try {
      bucket_edges(inst.flow);
      add("zero_bucket_acyclic", true);
    } catch (const AcyclicityError& e) {
      add("zero_bucket_acyclic", false, e.what());
    }
    // Demands must balance inside every component for a flow to exist.
    bool balanced = true;
    {
      std::vector<double> sums(
          static_cast<std::size_t>(inst.flow.graph.component_count()), 0.0);
      const auto& comp = inst.flow.graph.component_ids();
      for (int v = 0; v < inst.flow.graph.vertex_count(); ++v)
        sums[static_cast<std::size_t>(comp[static_cast<std::size_t>(v)])] +=
            inst.demands[v];
      for (double s : sums)
        if (std::abs(s) > 1e-9) balanced = false;
    }
    add("demands_balanced", balanced);
  } else if (inst.kind == "voltage") {
    add("weights_nonnegative",
        inst.voltage.w2.minCoeff() >= 0.0 && inst.voltage.sp.minCoeff() >= 0.0);
  } else if (inst.kind == "matrix") {
    bool feasible = true;
    std::string note;
    try {
      feasible_point(inst.matrix.a, inst.matrix.c);
    } catch (const InfeasibleError& e) {
      feasible = false;
      note = e.what();
    }
    add("constraints_feasible", feasible, note);
  }

  const json report{{"instance", instance_summary(inst, args.input)},
                    {"checks", checks},
                    {"pass", all_ok}};
  std::cout << report.dump(2) << "\n";
  return all_ok ? kOk : kPropertyViolation;
}

}  // namespace

int main(int argc, char** argv) {
  if (const char* threads = std::getenv("PNORM_THREADS"))
    Eigen::setNbThreads(std::max(1, std::atoi(threads)));

  CLI::App app{"lp-norm flow/voltage solver toolkit"};
  app.require_subcommand(1);

  GenerateArgs gen;
  CLI::App* cgen = app.add_subcommand("generate", "write a random instance file");
  cgen->add_option("--kind", gen.opt.kind, "flow | voltage | matrix");
  cgen->add_option("--n", gen.opt.n, "vertices / variables");
  cgen->add_option("--m", gen.opt.m, "edges / rows");
  cgen->add_option("--p", gen.opt.p, "norm exponent (>= 2)");
  cgen->add_option("--seed", gen.opt.seed, "rng seed");
  cgen->add_option("--wmin", gen.opt.w_min, "weight range low end");
  cgen->add_option("--wmax", gen.opt.w_max, "weight range high end");
  cgen->add_option("--zero-quad", gen.opt.zero_quad_fraction,
                   "fraction of zero quadratic weights");
  cgen->add_option("--zero-lp", gen.opt.zero_lp_fraction,
                   "fraction of zero lp weights");
  cgen->add_option("--out", gen.out, "output path");

  SolveArgs sol;
  CLI::App* csol = app.add_subcommand("solve", "run the solver on an instance");
  csol->add_option("--input", sol.input, "instance file")->required();
  csol->add_option("--p", sol.p_override, "override the instance's exponent");
  csol->add_option("--eps", sol.eps, "target relative accuracy");
  csol->add_option("--seed", sol.seed, "rng seed");
  csol->add_option("--sparsifier", sol.sparsifier, "identity | voltage | lewis");
  csol->add_option("--trace", sol.trace_path, "per-iteration CSV path");
  csol->add_option("--report", sol.report_path, "report JSON path");
  csol->add_option("--oracle", sol.oracle,
                   "on | off: judge against the Newton reference");
  csol->add_option("--constants", sol.constants,
                   "inner-solver constants, k=v comma separated");
  csol->add_option("--max-outer", sol.max_outer, "outer iteration cap");
  csol->add_flag("--strict", sol.strict, "error out on stagnation");

  SparsifyArgs spa;
  CLI::App* cspa = app.add_subcommand("sparsify", "run one sparsifier, report quality");
  cspa->add_option("--input", spa.input, "instance file")->required();
  cspa->add_option("--kind", spa.kind, "voltage | lewis | flow");
  cspa->add_option("--seed", spa.seed, "rng seed");
  cspa->add_option("--samples", spa.samples, "probe vector count");
  cspa->add_option("--report", spa.report_path, "report JSON path");

  ValidateArgs val;
  CLI::App* cval = app.add_subcommand("validate", "check instance invariants");
  cval->add_option("--input", val.input, "instance file")->required();
  cval->add_option("--seed", val.seed, "rng seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kBadInput;
  }

  try {
    if (cgen->parsed()) return run_generate(gen);
    if (csol->parsed()) return run_solve(sol);
    if (cspa->parsed()) return run_sparsify(spa);
    if (cval->parsed()) return run_validate(val);
    return kBadInput;
  } catch (const InvalidInputError& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return kBadInput;
  } catch (const InfeasibleError& e) {
    std::cerr << "infeasible: " << e.what() << "\n";
    return kBadInput;
  } catch (const UnboundedInstanceError& e) {
    std::cerr << "unbounded: " << e.what() << "\n";
    return kBadInput;
  } catch (const AcyclicityError& e) {
    std::cerr << "property violation: " << e.what() << "\n";
    return kPropertyViolation;
  } catch (const StagnationError& e) {
    std::cerr << "solver failure: " << e.what() << "\n";
    return kSolverFailure;
  } catch (const SolverFailureError& e) {
    std::cerr << "solver failure: " << e.what() << "\n";
    return kSolverFailure;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kSolverFailure;
  }
}
