// Subcommand implementations shared by the CLI binary and the tests.
#pragma once

#include <filesystem>
#include <optional>

#include "kirchhoff/config.hpp"

namespace kirchhoff::cli {

// Exit-code taxonomy; every failure path of a command maps onto one of these.
enum ExitCode : int {
  exit_ok = 0,
  exit_usage = 2,       // bad invocation, config error, unsupported regime
  exit_hypothesis = 3,  // a sampled model/nonlinearity hypothesis failed
  exit_condition = 4,   // a theorem-level condition check failed, no solve ran
  exit_solver = 5,      // solver breakdown (bracket, convergence, budget)
  exit_trivial = 6,     // S(0) at tolerance: nothing nontrivial to solve
};

struct CommandOptions {
  std::optional<std::filesystem::path> out_dir;
  std::optional<double> tol;  // overrides solver.tol_fixed_point
  std::optional<int> n;       // overrides domain.n (or nx = ny in 2D)
};

int cmd_solve(RunConfig cfg, const CommandOptions& opt);
int cmd_trace_S(RunConfig cfg, const CommandOptions& opt, double r_max, int samples);
int cmd_convergence(RunConfig cfg, const CommandOptions& opt, int levels);
int cmd_verify_lemma(RunConfig cfg, const CommandOptions& opt, int budget);
int cmd_check_conditions(RunConfig cfg, const CommandOptions& opt);

}  // namespace kirchhoff::cli
