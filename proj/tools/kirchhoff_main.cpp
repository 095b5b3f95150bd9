// Command-line front end: solves the nonlocal problem described by a config
// file and runs the verification harnesses around it.
#include <iostream>

#include <CLI11.hpp>

#include "kirchhoff/commands.hpp"

using namespace kirchhoff;

int main(int argc, char** argv) {
  CLI::App app{"Nonlocal Kirchhoff-type solver via primitive inversion and scalar fixed point"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  double tol = -1.0;
  int n_override = -1;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "path to the run config")->required();
    cmd->add_option("--out", out_dir, "output directory (overrides output.dir)");
    cmd->add_option("--tol", tol, "fixed-point tolerance override");
    cmd->add_option("--n", n_override, "interior node count override");
  };

  auto* solve = app.add_subcommand("solve", "run checks and locate the fixed point r* = S(r*)");
  add_common(solve);

  auto* trace = app.add_subcommand("trace-S", "sample the (r, S, T, V) curve and its crossings");
  add_common(trace);
  double r_max = 10.0;
  int samples = 33;
  trace->add_option("--r-max", r_max, "right end of the sampled r range");
  trace->add_option("--samples", samples, "number of uniform samples");

  auto* conv = app.add_subcommand("convergence", "grid-refinement study against manufactured.v");
  add_common(conv);
  int levels = 3;
  conv->add_option("--levels", levels, "number of refinement levels");

  auto* lemma = app.add_subcommand("verify-lemma", "run the primitive-map property suite");
  add_common(lemma);
  int budget = 0;
  lemma->add_option("--budget", budget, "sample budget (default: hypotheses.sample_budget)");

  auto* conditions = app.add_subcommand("check-conditions",
                                        "hypothesis and condition verdicts without solving");
  add_common(conditions);

  CLI11_PARSE(app, argc, argv);

  cli::CommandOptions opt;
  if (!out_dir.empty()) opt.out_dir = out_dir;
  if (tol > 0.0) opt.tol = tol;
  if (n_override > 0) opt.n = n_override;

  try {
    const cli::RunConfig cfg = cli::load_config(config_path);
    if (solve->parsed()) return cli::cmd_solve(cfg, opt);
    if (trace->parsed()) return cli::cmd_trace_S(cfg, opt, r_max, samples);
    if (conv->parsed()) return cli::cmd_convergence(cfg, opt, levels);
    if (lemma->parsed()) return cli::cmd_verify_lemma(cfg, opt, budget);
    if (conditions->parsed()) return cli::cmd_check_conditions(cfg, opt);
  } catch (const cli::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return cli::exit_usage;
  } catch (const expr::ExprError& e) {
    std::cerr << "expression error: " << e.what() << "\n";
    return cli::exit_usage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return cli::exit_solver;
  }
  return cli::exit_usage;
}
