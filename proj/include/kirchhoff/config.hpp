// Run configuration: the flat "section.key = value" file format, schema
// validation, and construction of the problem objects.
#pragma once

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>

#include "kirchhoff/model.hpp"
#include "kirchhoff/nonlocal.hpp"

namespace kirchhoff::cli {

class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  // domain
  int dimension = 1;
  double xmin = 0.0, xmax = 1.0, ymin = 0.0, ymax = 1.0;
  int n = 64;             // 1D interior nodes
  int nx = 16, ny = 16;   // 2D interior nodes

  // model: either a named family or an expression over {t, r}
  std::optional<std::string> family;
  double family_p = 1.0;
  std::optional<std::string> m_expr;
  std::optional<std::string> closed_primitive_expr;  // model.M
  double m_lower = 1.0;

  // nonlinearity
  model::Regime regime = model::Regime::source;
  std::string f_expr;
  model::NonlinearityConstants constants;
  std::optional<std::string> mu_expr;
  bool monotone = false;

  // solver
  double tol_fixed_point = 1e-8;
  double tol_inner = 1e-10;   // linear-solve residual budget
  double tol_local = 1e-10;   // outer Picard / monotone stopping
  double quadrature_tol = 1e-10;
  int max_local = 500;
  int max_cg = 200000;

  // hypothesis sampling
  int sample_budget = 2000;
  double hyp_t_max = 10.0;
  double hyp_r_max = 10.0;

  // manufactured reduced solution (convergence harness)
  std::optional<std::string> manufactured_v;

  // output
  std::string out_dir = "out";
  bool write_fields = true;

  mesh::Mesh make_mesh() const;
  model::CoefficientModel make_coefficient() const;
  model::Nonlinearity make_nonlinearity() const;
  nonlocal::Problem make_problem() const;
  model::SampleRanges sample_ranges() const { return {hyp_t_max, hyp_r_max}; }
};

// Parses and validates a config file; every expression is parsed eagerly so
// that errors surface with file/line context before any solving starts.
RunConfig load_config(const std::filesystem::path& path);
RunConfig parse_config_text(std::string_view text, const std::string& origin);

}  // namespace kirchhoff::cli
