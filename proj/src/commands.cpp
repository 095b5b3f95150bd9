#include "kirchhoff/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>

#include <json.hpp>

namespace kirchhoff::cli {

namespace {

using ordered_json = nlohmann::ordered_json;

void apply_overrides(RunConfig& cfg, const CommandOptions& opt) {
  if (opt.out_dir) cfg.out_dir = opt.out_dir->string();
  if (opt.tol) cfg.tol_fixed_point = *opt.tol;
  if (opt.n) {
    cfg.n = *opt.n;
    cfg.nx = *opt.n;
    cfg.ny = *opt.n;
  }
}

std::filesystem::path prepare_out_dir(const RunConfig& cfg) {
  std::filesystem::path dir(cfg.out_dir);
  std::filesystem::create_directories(dir);
  return dir;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write '" + path.string() + "'");
  out << text;
}

void write_field_csv(const std::filesystem::path& path, const mesh::Field& f) {
  std::ofstream out(path, std::ios::binary);
  mesh::write_csv(f, out);
}

void write_trace_csv(const std::filesystem::path& path,
                     std::vector<nonlocal::TraceSample> samples) {
  std::sort(samples.begin(), samples.end(),
            [](const auto& a, const auto& b) { return a.r < b.r; });
  std::ofstream out(path, std::ios::binary);
  out << "r,S,T,V\n";
  char buf[160];
  for (const auto& s : samples) {
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g\n", s.r, s.S, s.T, s.V);
    out << buf;
  }
}

ordered_json json_of(const model::HypothesisReport& rep) {
  ordered_json results = ordered_json::array();
  for (const auto& r : rep.results) {
    results.push_back({{"name", r.name},
                       {"verdict", std::string(model::verdict_name(r.verdict))},
                       {"detail", r.detail},
                       {"witness", r.witness}});
  }
  return {{"sample_budget", rep.sample_budget}, {"results", results}};
}

ordered_json json_of(const model::LemmaSuiteResult& rep) {
  ordered_json checks = ordered_json::array();
  for (const auto& c : rep.checks) {
    checks.push_back({{"name", c.name},
                      {"pass", c.pass},
                      {"worst", c.worst},
                      {"threshold", c.threshold},
                      {"witness", c.witness},
                      {"detail", c.detail}});
  }
  return {{"sample_budget", rep.sample_budget}, {"all_pass", rep.all_pass}, {"checks", checks}};
}

ordered_json json_of(const nonlocal::EigenCondition& c) {
  return {{"symbolic", c.symbolic}, {"lambda1", c.lambda}, {"holds", c.holds}, {"note", c.note}};
}

ordered_json json_of(const nonlocal::F5Report& rep) {
  ordered_json per_r = ordered_json::array();
  for (const auto& s : rep.per_r) {
    per_r.push_back({{"r", s.r},
                     {"left", json_of(s.left)},
                     {"right", json_of(s.right)},
                     {"holds", s.holds}});
  }
  return {{"per_r", per_r},
          {"all_hold", rep.all_hold},
          {"r_free_check",
           {{"applicable", rep.condicao_applicable},
            {"premise_m3", rep.premise_m3},
            {"premise_f6", rep.premise_f6},
            {"left", json_of(rep.condicao_left)},
            {"right", json_of(rep.condicao_right)},
            {"holds", rep.condicao_holds}}},
          {"m_zero_below_one", rep.m_zero_below_one},
          {"satisfied", rep.satisfied()}};
}

ordered_json json_of(const nonlocal::ContractionReport& rep) {
  return {{"theta", rep.theta},
          {"m_lower", rep.m_lower},
          {"lambda1", rep.lambda1},
          {"bound_theta_over_m", rep.bound},
          {"condition_theta_below_m_lambda1", rep.condition_holds},
          {"sampled_lipschitz_worst_slack", rep.sampled_worst},
          {"sampled_lipschitz_ok", rep.sampled_ok},
          {"delta_is_one", rep.delta_is_one},
          {"nu", rep.nu},
          {"nu_below_lambda1", rep.nu_ok},
          {"all_ok", rep.all_ok}};
}

ordered_json config_summary(const RunConfig& cfg) {
  ordered_json domain = {{"dimension", cfg.dimension},
                         {"xmin", cfg.xmin},
                         {"xmax", cfg.xmax}};
  if (cfg.dimension == 2) {
    domain["ymin"] = cfg.ymin;
    domain["ymax"] = cfg.ymax;
    domain["nx"] = cfg.nx;
    domain["ny"] = cfg.ny;
  } else {
    domain["n"] = cfg.n;
  }
  ordered_json model_block;
  if (cfg.family) {
    model_block["family"] = *cfg.family;
    if (*cfg.family == "polynomial") model_block["p"] = cfg.family_p;
  } else {
    model_block["m"] = *cfg.m_expr;
    if (cfg.closed_primitive_expr) model_block["M"] = *cfg.closed_primitive_expr;
  }
  model_block["m_lower"] = cfg.m_lower;
  return {{"domain", domain},
          {"model", model_block},
          {"regime", std::string(model::regime_name(cfg.regime))},
          {"f", cfg.f_expr},
          {"tol_fixed_point", cfg.tol_fixed_point},
          {"tol_inner", cfg.tol_inner}};
}

// Hypothesis gate of cmd_solve / cmd_check_conditions. Fatal names depend on
// the regime: (m2) is a hard requirement only for the sublinear pipeline,
// a warning elsewhere.
struct HypothesisGate {
  bool fatal = false;
  std::vector<std::string> failures;
  std::vector<std::string> warnings;
};

HypothesisGate evaluate_gate(const model::HypothesisReport& rep, model::Regime regime) {
  HypothesisGate gate;
  for (const auto& r : rep.results) {
    if (r.verdict == model::Verdict::pass) continue;
    const bool warning_only =
        (r.name == "m2" && regime != model::Regime::sublinear) ||
        (r.name == "m3") ||  // only consumed by the r-free shortcut
        r.verdict == model::Verdict::inconclusive;
    if (warning_only) {
      gate.warnings.push_back(r.name);
    } else {
      gate.failures.push_back(r.name);
      gate.fatal = true;
    }
  }
  return gate;
}

int emit_and_fail(const std::filesystem::path& dir, ordered_json summary, int code,
                  const std::string& reason) {
  summary["status"] = "failed";
  summary["failure"] = reason;
  summary["exit_code"] = code;
  write_text(dir / "summary.json", summary.dump(2) + "\n");
  std::cerr << "error: " << reason << "\n";
  return code;
}

}  // namespace

int cmd_solve(RunConfig cfg, const CommandOptions& opt) {
  apply_overrides(cfg, opt);
  const auto dir = prepare_out_dir(cfg);
  ordered_json summary = {{"schema", "kirchhoff-summary/1"},
                          {"command", "solve"},
                          {"config", config_summary(cfg)}};
  if (cfg.regime == model::Regime::growth) {
    std::cerr << "error: the growth regime has no constructive solver; "
                 "use check-conditions instead\n";
    return exit_usage;
  }

  auto problem = cfg.make_problem();
  auto hyp = model::check_hypotheses(problem.coefficient(), &problem.nonlinearity(),
                                     &problem.grid(), cfg.sample_budget, cfg.sample_ranges());
  summary["hypotheses"] = json_of(hyp);
  const auto gate = evaluate_gate(hyp, cfg.regime);
  summary["hypothesis_warnings"] = gate.warnings;
  if (gate.fatal) {
    std::string names;
    for (const auto& n : gate.failures) names += (names.empty() ? "" : ", ") + n;
    return emit_and_fail(dir, summary, exit_hypothesis, "hypothesis check failed: " + names);
  }

  try {
    if (cfg.regime == model::Regime::sublinear) {
      const double r_samples[3] = {0.0, 1.0, 10.0};
      auto f5 = nonlocal::check_f5(problem, r_samples, &hyp);
      summary["conditions"] = {{"f5", json_of(f5)}};
      if (!f5.satisfied()) {
        return emit_and_fail(dir, summary, exit_condition,
                             "eigenvalue condition (f5) violated; no solve attempted");
      }
    } else if (cfg.regime == model::Regime::lipschitz) {
      auto con = nonlocal::check_contraction(problem);
      summary["conditions"] = {{"contraction", json_of(con)}};
      if (!con.all_ok) {
        return emit_and_fail(dir, summary, exit_condition,
                             "contraction condition violated; no solve attempted");
      }
    }

    auto trace = nonlocal::find_fixed_point(problem, cfg.tol_fixed_point);
    const double mhat = problem.coefficient().lower_bound();
    double chain_violation = 0.0;
    for (const auto& s : trace.samples) {
      chain_violation = std::max(chain_violation, s.S - s.T / mhat);
      chain_violation = std::max(chain_violation, s.T / mhat - s.V / (mhat * mhat));
    }
    const double u_energy = mesh::gradient_energy(trace.u_star);
    summary["fixed_point"] = {
        {"r_star", trace.r_star},
        {"residual", trace.residual},
        {"evaluations", trace.evaluations},
        {"sup_V", trace.sup_V},
        {"u_energy", u_energy},
        {"u_linf", mesh::linf_norm(trace.u_star)},
        {"v_linf", mesh::linf_norm(trace.v_star)},
        {"nonlocal_residual", nonlocal::nonlocal_residual(problem, trace.u_star, trace.r_star)},
    };
    summary["chain_max_violation"] = chain_violation;
    summary["status"] = "ok";
    summary["exit_code"] = 0;
    if (cfg.write_fields) {
      write_field_csv(dir / "u.csv", trace.u_star);
      write_field_csv(dir / "v.csv", trace.v_star);
      summary["outputs"] = {{"u", "u.csv"}, {"v", "v.csv"}, {"trace", "trace.csv"}};
    }
    write_trace_csv(dir / "trace.csv", trace.samples);
    write_text(dir / "summary.json", summary.dump(2) + "\n");
    std::cerr << "solve: r* = " << trace.r_star << ", |S(r*)-r*| = " << trace.residual << "\n";
    return exit_ok;
  } catch (const nonlocal::TrivialProblemError& e) {
    return emit_and_fail(dir, summary, exit_trivial, e.what());
  } catch (const nonlocal::BracketError& e) {
    summary["v_samples"] = e.v_samples();
    return emit_and_fail(dir, summary, exit_solver, e.what());
  } catch (const localsolve::LocalSolveError& e) {
    return emit_and_fail(dir, summary, exit_solver, e.what());
  } catch (const linalg::SolverError& e) {
    return emit_and_fail(dir, summary, exit_solver, e.what());
  } catch (const nonlocal::NonlocalError& e) {
    return emit_and_fail(dir, summary, exit_solver, e.what());
  } catch (const model::ModelError& e) {
    return emit_and_fail(dir, summary, exit_hypothesis, e.what());
  }
}

int cmd_trace_S(RunConfig cfg, const CommandOptions& opt, double r_max, int samples) {
  apply_overrides(cfg, opt);
  const auto dir = prepare_out_dir(cfg);
  ordered_json summary = {{"schema", "kirchhoff-summary/1"},
                          {"command", "trace-S"},
                          {"config", config_summary(cfg)},
                          {"r_max", r_max},
                          {"samples", samples}};
  if (cfg.regime == model::Regime::growth) {
    std::cerr << "error: the growth regime has no constructive solver\n";
    return exit_usage;
  }
  auto problem = cfg.make_problem();
  try {
    auto curve = nonlocal::trace_curve(problem, r_max, samples, cfg.tol_fixed_point);
    write_trace_csv(dir / "trace.csv", curve.samples);
    summary["crossings"] = curve.crossings;
    summary["status"] = "ok";
    summary["exit_code"] = 0;
    write_text(dir / "trace_summary.json", summary.dump(2) + "\n");
    std::cerr << "trace-S: " << curve.samples.size() << " samples, " << curve.crossings.size()
              << " crossing(s)\n";
    return exit_ok;
  } catch (const nonlocal::TrivialProblemError& e) {
    return emit_and_fail(dir, summary, exit_trivial, e.what());
  } catch (const std::exception& e) {
    return emit_and_fail(dir, summary, exit_solver, e.what());
  }
}

int cmd_convergence(RunConfig cfg, const CommandOptions& opt, int levels) {
  apply_overrides(cfg, opt);
  const auto dir = prepare_out_dir(cfg);
  if (!cfg.manufactured_v) {
    std::cerr << "error: convergence needs a manufactured solution (manufactured.v)\n";
    return exit_usage;
  }
  if (levels < 1) {
    std::cerr << "error: need at least one level\n";
    return exit_usage;
  }
  auto exact_expr = expr::Expression::parse(
      *cfg.manufactured_v,
      cfg.dimension == 1 ? std::vector<std::string>{"x"} : std::vector<std::string>{"x", "y"});
  auto exact = [&](double x, double y) {
    if (cfg.dimension == 1) {
      const double args[1] = {x};
      return exact_expr.eval(std::span<const double>(args, 1));
    }
    const double args[2] = {x, y};
    return exact_expr.eval(std::span<const double>(args, 2));
  };

  struct Row {
    int n;
    double h, err_linf, err_l2;
  };
  std::vector<Row> rows;
  try {
    RunConfig level_cfg = cfg;
    for (int level = 0; level < levels; ++level) {
      auto problem = level_cfg.make_problem();
      auto eval = nonlocal::evaluate_S(problem, 0.0);
      mesh::Field diff(problem.grid());
      for (int i = 0; i < diff.size(); ++i) {
        diff[i] = eval.v[i] - exact(problem.grid().node_x(i), problem.grid().node_y(i));
      }
      rows.push_back({cfg.dimension == 1 ? level_cfg.n : level_cfg.nx, problem.grid().hx(),
                      mesh::linf_norm(diff), mesh::l2_norm(diff)});
      level_cfg.n = 2 * level_cfg.n + 1;  // keeps nested dyadic spacing on (a,b)
      level_cfg.nx = 2 * level_cfg.nx + 1;
      level_cfg.ny = 2 * level_cfg.ny + 1;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_solver;
  }

  std::string csv = "n,h,err_linf,err_l2,order\n";
  char buf[200];
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (i == 0) {
      std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g,\n", rows[i].n, rows[i].h,
                    rows[i].err_linf, rows[i].err_l2);
    } else {
      const double order = std::log2(rows[i - 1].err_linf / rows[i].err_linf);
      std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g,%.17g\n", rows[i].n, rows[i].h,
                    rows[i].err_linf, rows[i].err_l2, order);
    }
    csv += buf;
  }
  write_text(dir / "convergence.csv", csv);
  std::cerr << csv;
  return exit_ok;
}

int cmd_verify_lemma(RunConfig cfg, const CommandOptions& opt, int budget) {
  apply_overrides(cfg, opt);
  const auto dir = prepare_out_dir(cfg);
  auto coefficient = cfg.make_coefficient();
  auto suite = model::verify_lemma_properties(coefficient, budget > 0 ? budget : cfg.sample_budget,
                                              cfg.sample_ranges(), cfg.quadrature_tol);
  ordered_json summary = {{"schema", "kirchhoff-summary/1"},
                          {"command", "verify-lemma"},
                          {"config", config_summary(cfg)},
                          {"lemma", json_of(suite)},
                          {"status", suite.all_pass ? "ok" : "failed"},
                          {"exit_code", suite.all_pass ? 0 : exit_hypothesis}};
  write_text(dir / "lemma_report.json", summary.dump(2) + "\n");
  for (const auto& c : suite.checks) {
    std::cerr << "verify-lemma: " << c.name << " " << (c.pass ? "pass" : "FAIL")
              << " (worst " << c.worst << ", threshold " << c.threshold << ")\n";
  }
  return suite.all_pass ? exit_ok : exit_hypothesis;
}

int cmd_check_conditions(RunConfig cfg, const CommandOptions& opt) {
  apply_overrides(cfg, opt);
  const auto dir = prepare_out_dir(cfg);
  auto problem = cfg.make_problem();
  auto hyp = model::check_hypotheses(problem.coefficient(), &problem.nonlinearity(),
                                     &problem.grid(), cfg.sample_budget, cfg.sample_ranges());
  ordered_json summary = {{"schema", "kirchhoff-summary/1"},
                          {"command", "check-conditions"},
                          {"config", config_summary(cfg)},
                          {"hypotheses", json_of(hyp)}};
  const auto gate = evaluate_gate(hyp, cfg.regime);
  summary["hypothesis_warnings"] = gate.warnings;

  int code = gate.fatal ? exit_hypothesis : exit_ok;
  try {
    if (!gate.fatal && cfg.regime == model::Regime::sublinear) {
      const double r_samples[3] = {0.0, 1.0, 10.0};
      auto f5 = nonlocal::check_f5(problem, r_samples, &hyp);
      summary["conditions"] = {{"f5", json_of(f5)}};
      if (!f5.satisfied()) code = exit_condition;
    } else if (!gate.fatal && cfg.regime == model::Regime::lipschitz) {
      auto con = nonlocal::check_contraction(problem);
      summary["conditions"] = {{"contraction", json_of(con)}};
      if (!con.all_ok) code = exit_condition;
    }
  } catch (const std::exception& e) {
    summary["conditions_error"] = e.what();
    code = exit_solver;
  }
  summary["status"] = code == exit_ok ? "ok" : "failed";
  summary["exit_code"] = code;
  write_text(dir / "conditions.json", summary.dump(2) + "\n");
  std::cerr << "check-conditions: " << (code == exit_ok ? "all conditions hold" : "violations found")
            << "\n";
  return code;
}

}  // namespace kirchhoff::cli
