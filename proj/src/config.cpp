#include "kirchhoff/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace kirchhoff::cli {

namespace {

struct RawValue {
  std::string text;
  bool quoted = false;
  int line = 0;
};

class RawConfig {
public:
  RawConfig(std::string_view text, std::string origin) : origin_(std::move(origin)) {
    std::istringstream in{std::string(text)};
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      parse_line(line, lineno);
    }
  }

  [[noreturn]] void fail(int line, const std::string& message) const {
    throw ConfigError(origin_ + ":" + std::to_string(line) + ": " + message);
  }

  const RawValue* find(const std::string& key) const {
    auto it = values_.find(key);
    return it == values_.end() ? nullptr : &it->second;
  }

  std::string require_string(const std::string& key) const {
    const RawValue* v = find(key);
    if (!v) throw ConfigError(origin_ + ": missing required key '" + key + "'");
    return v->text;
  }

  std::optional<std::string> get_string(const std::string& key) const {
    const RawValue* v = find(key);
    if (!v) return std::nullopt;
    return v->text;
  }

  std::optional<double> get_double(const std::string& key) const {
    const RawValue* v = find(key);
    if (!v) return std::nullopt;
    double out = 0.0;
    const char* begin = v->text.c_str();
    const char* end = begin + v->text.size();
    auto res = std::from_chars(begin, end, out);
    if (res.ec != std::errc{} || res.ptr != end) {
      fail(v->line, "expected a number for '" + key + "', got '" + v->text + "'");
    }
    return out;
  }

  std::optional<int> get_int(const std::string& key) const {
    const RawValue* v = find(key);
    if (!v) return std::nullopt;
    int out = 0;
    const char* begin = v->text.c_str();
    const char* end = begin + v->text.size();
    auto res = std::from_chars(begin, end, out);
    if (res.ec != std::errc{} || res.ptr != end) {
      fail(v->line, "expected an integer for '" + key + "', got '" + v->text + "'");
    }
    return out;
  }

  std::optional<bool> get_bool(const std::string& key) const {
    const RawValue* v = find(key);
    if (!v) return std::nullopt;
    if (v->text == "true") return true;
    if (v->text == "false") return false;
    fail(v->line, "expected true/false for '" + key + "', got '" + v->text + "'");
  }

  void check_known_keys(const std::set<std::string>& known) const {
    for (const auto& [key, value] : values_) {
      if (!known.contains(key)) {
        fail(value.line, "unknown key '" + key + "'");
      }
    }
  }

  int line_of(const std::string& key) const {
    const RawValue* v = find(key);
    return v ? v->line : 0;
  }

  const std::string& origin() const { return origin_; }

private:
  void parse_line(std::string line, int lineno) {
    // strip comments outside quotes
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (line[i] == '"') quoted = !quoted;
      if (line[i] == '#' && !quoted) {
        line.erase(i);
        break;
      }
    }
    auto trim = [](std::string s) {
      const auto is_space = [](unsigned char c) { return std::isspace(c); };
      while (!s.empty() && is_space(s.front())) s.erase(s.begin());
      while (!s.empty() && is_space(s.back())) s.pop_back();
      return s;
    };
    line = trim(line);
    if (line.empty()) return;
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail(lineno, "expected 'section.key = value'");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty() || key.find('.') == std::string::npos) {
      fail(lineno, "keys must be of the form 'section.key'");
    }
    RawValue raw;
    raw.line = lineno;
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') {
      raw.text = value.substr(1, value.size() - 2);
      raw.quoted = true;
    } else if (!value.empty()) {
      raw.text = value;
    } else {
      fail(lineno, "empty value for '" + key + "'");
    }
    if (values_.contains(key)) fail(lineno, "duplicate key '" + key + "'");
    values_.emplace(std::move(key), std::move(raw));
  }

  std::string origin_;
  std::map<std::string, RawValue> values_;
};

const std::set<std::string> kKnownKeys = {
    "domain.dimension", "domain.xmin", "domain.xmax", "domain.ymin", "domain.ymax",
    "domain.n", "domain.nx", "domain.ny",
    "model.family", "model.p", "model.m", "model.M", "model.m_lower",
    "nonlinearity.regime", "nonlinearity.f", "nonlinearity.c", "nonlinearity.p",
    "nonlinearity.theta", "nonlinearity.delta", "nonlinearity.nu", "nonlinearity.mu",
    "nonlinearity.monotone",
    "solver.tol_fixed_point", "solver.tol_inner", "solver.tol_local",
    "solver.quadrature_tol", "solver.max_local", "solver.max_cg",
    "hypotheses.sample_budget", "hypotheses.t_max", "hypotheses.r_max",
    "manufactured.v",
    "output.dir", "output.write_fields",
};

std::vector<std::string> spatial_vars(int dimension) {
  return dimension == 1 ? std::vector<std::string>{"x"} : std::vector<std::string>{"x", "y"};
}

std::vector<std::string> f_vars(int dimension) {
  auto vars = spatial_vars(dimension);
  vars.push_back("t");
  return vars;
}

void parse_checked(const RawConfig& raw, const std::string& key, const std::string& source,
                   const std::vector<std::string>& vars) {
  try {
    expr::Expression::parse(source, vars);
  } catch (const expr::ExprError& e) {
    raw.fail(raw.line_of(key), "in expression '" + key + "': " + e.what());
  }
}

}  // namespace

RunConfig parse_config_text(std::string_view text, const std::string& origin) {
  RawConfig raw(text, origin);
  raw.check_known_keys(kKnownKeys);
  RunConfig cfg;

  auto fail_key = [&](const std::string& key, const std::string& message) {
    raw.fail(raw.line_of(key), message);
  };

  cfg.dimension = raw.get_int("domain.dimension").value_or(1);
  if (cfg.dimension != 1 && cfg.dimension != 2) {
    fail_key("domain.dimension", "dimension must be 1 or 2");
  }
  cfg.xmin = raw.get_double("domain.xmin").value_or(0.0);
  cfg.xmax = raw.get_double("domain.xmax").value_or(1.0);
  cfg.ymin = raw.get_double("domain.ymin").value_or(0.0);
  cfg.ymax = raw.get_double("domain.ymax").value_or(1.0);
  if (cfg.dimension == 1) {
    cfg.n = raw.get_int("domain.n").value_or(64);
    if (cfg.n < 2) fail_key("domain.n", "need at least 2 interior nodes");
  } else {
    cfg.nx = raw.get_int("domain.nx").value_or(16);
    cfg.ny = raw.get_int("domain.ny").value_or(16);
    if (cfg.nx < 2 || cfg.ny < 2) fail_key("domain.nx", "need at least 2 interior nodes per axis");
  }

  cfg.family = raw.get_string("model.family");
  cfg.family_p = raw.get_double("model.p").value_or(1.0);
  cfg.m_expr = raw.get_string("model.m");
  cfg.closed_primitive_expr = raw.get_string("model.M");
  cfg.m_lower = raw.get_double("model.m_lower").value_or(1.0);
  if (!(cfg.m_lower > 0.0)) fail_key("model.m_lower", "m_lower must be positive");
  if (cfg.family && cfg.m_expr) {
    fail_key("model.family", "give either model.family or model.m, not both");
  }
  if (!cfg.family && !cfg.m_expr) {
    throw ConfigError(raw.origin() + ": missing model block (model.family or model.m)");
  }
  if (cfg.family && *cfg.family != "polynomial" && *cfg.family != "exponential" &&
      *cfg.family != "constant") {
    fail_key("model.family", "unknown family '" + *cfg.family +
                                 "' (polynomial, exponential, constant)");
  }
  if (cfg.m_expr) parse_checked(raw, "model.m", *cfg.m_expr, {"t", "r"});
  if (cfg.closed_primitive_expr) parse_checked(raw, "model.M", *cfg.closed_primitive_expr, {"t", "r"});

  const std::string regime_text = raw.require_string("nonlinearity.regime");
  const auto regime = model::regime_from_name(regime_text);
  if (!regime) {
    fail_key("nonlinearity.regime",
             "unknown regime '" + regime_text + "' (source, growth, sublinear, lipschitz)");
  }
  cfg.regime = *regime;
  cfg.f_expr = raw.require_string("nonlinearity.f");
  parse_checked(raw, "nonlinearity.f", cfg.f_expr, f_vars(cfg.dimension));
  cfg.constants.c = raw.get_double("nonlinearity.c").value_or(0.0);
  cfg.constants.p = raw.get_double("nonlinearity.p").value_or(0.0);
  cfg.constants.theta = raw.get_double("nonlinearity.theta").value_or(0.0);
  cfg.constants.delta = raw.get_double("nonlinearity.delta").value_or(0.0);
  cfg.constants.nu = raw.get_double("nonlinearity.nu").value_or(0.0);
  cfg.mu_expr = raw.get_string("nonlinearity.mu");
  if (cfg.mu_expr) parse_checked(raw, "nonlinearity.mu", *cfg.mu_expr, spatial_vars(cfg.dimension));
  cfg.monotone = raw.get_bool("nonlinearity.monotone").value_or(false);

  // regime/constant consistency
  {
    auto parsed_f = expr::Expression::parse(cfg.f_expr, f_vars(cfg.dimension));
    const int t_slot = static_cast<int>(f_vars(cfg.dimension).size()) - 1;
    switch (cfg.regime) {
      case model::Regime::source:
        if (parsed_f.uses_variable(t_slot)) {
          fail_key("nonlinearity.f", "the source regime requires f = f(x); drop t or declare "
                                     "another regime");
        }
        break;
      case model::Regime::growth:
        if (!(cfg.constants.c > 0.0)) fail_key("nonlinearity.c", "growth regime requires c > 0");
        if (!(cfg.constants.p > 1.0)) fail_key("nonlinearity.p", "growth regime requires p > 1");
        break;
      case model::Regime::sublinear:
        if (!(cfg.constants.c > 0.0)) {
          fail_key("nonlinearity.c", "sublinear regime requires the (f1) constant c > 0");
        }
        if (!cfg.monotone) {
          fail_key("nonlinearity.monotone",
                   "the monotone solver needs nonlinearity.monotone = true (condition (f6))");
        }
        break;
      case model::Regime::lipschitz:
        if (!(cfg.constants.theta > 0.0)) {
          fail_key("nonlinearity.theta", "lipschitz regime requires theta > 0");
        }
        if (!(cfg.constants.nu > 0.0)) {
          fail_key("nonlinearity.nu", "lipschitz regime requires nu > 0");
        }
        if (!(cfg.constants.delta > 0.0 && cfg.constants.delta <= 1.0)) {
          fail_key("nonlinearity.delta", "lipschitz regime requires delta in (0, 1]");
        }
        if (!cfg.mu_expr) {
          fail_key("nonlinearity.mu", "lipschitz regime requires the bound weight mu");
        }
        break;
    }
  }

  cfg.tol_fixed_point = raw.get_double("solver.tol_fixed_point").value_or(1e-8);
  cfg.tol_inner = raw.get_double("solver.tol_inner").value_or(1e-10);
  cfg.tol_local = raw.get_double("solver.tol_local").value_or(1e-10);
  cfg.quadrature_tol = raw.get_double("solver.quadrature_tol").value_or(1e-10);
  cfg.max_local = raw.get_int("solver.max_local").value_or(500);
  cfg.max_cg = raw.get_int("solver.max_cg").value_or(200000);
  for (const auto& [key, value] :
       std::initializer_list<std::pair<std::string, double>>{
           {"solver.tol_fixed_point", cfg.tol_fixed_point},
           {"solver.tol_inner", cfg.tol_inner},
           {"solver.tol_local", cfg.tol_local},
           {"solver.quadrature_tol", cfg.quadrature_tol}}) {
    if (!(value > 0.0)) fail_key(key, "tolerances must be positive");
  }

  cfg.sample_budget = raw.get_int("hypotheses.sample_budget").value_or(2000);
  cfg.hyp_t_max = raw.get_double("hypotheses.t_max").value_or(10.0);
  cfg.hyp_r_max = raw.get_double("hypotheses.r_max").value_or(10.0);

  cfg.manufactured_v = raw.get_string("manufactured.v");
  if (cfg.manufactured_v) {
    parse_checked(raw, "manufactured.v", *cfg.manufactured_v, spatial_vars(cfg.dimension));
  }

  cfg.out_dir = raw.get_string("output.dir").value_or("out");
  cfg.write_fields = raw.get_bool("output.write_fields").value_or(true);
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_config_text(buffer.str(), path.string());
}

mesh::Mesh RunConfig::make_mesh() const {
  return dimension == 1 ? mesh::Mesh::interval(xmin, xmax, n)
                        : mesh::Mesh::rectangle(xmin, xmax, ymin, ymax, nx, ny);
}

model::CoefficientModel RunConfig::make_coefficient() const {
  if (family) {
    if (*family == "polynomial") return model::CoefficientModel::polynomial_family(family_p);
    if (*family == "exponential") return model::CoefficientModel::exponential_family();
    return model::CoefficientModel::constant(m_lower);
  }
  auto m = expr::Expression::parse(*m_expr, {"t", "r"});
  std::optional<expr::Expression> primitive;
  if (closed_primitive_expr) {
    primitive = expr::Expression::parse(*closed_primitive_expr, {"t", "r"});
  }
  return model::CoefficientModel::from_expression(std::move(m), m_lower, std::move(primitive));
}

model::Nonlinearity RunConfig::make_nonlinearity() const {
  auto f = expr::Expression::parse(f_expr, f_vars(dimension));
  std::optional<expr::Expression> mu;
  if (mu_expr) mu = expr::Expression::parse(*mu_expr, spatial_vars(dimension));
  return model::Nonlinearity::from_expression(std::move(f), dimension, regime, constants,
                                              std::move(mu), monotone);
}

nonlocal::Problem RunConfig::make_problem() const {
  nonlocal::Problem p(make_mesh(), make_coefficient(), make_nonlinearity());
  p.quad_tol = quadrature_tol;
  p.solver.cg_tol = 0.5 * tol_inner;  // leaves headroom for recomputed residuals
  p.solver.cg_maxit = max_cg;
  p.solver.tol = tol_local;
  p.solver.maxit = max_local;
  return p;
}

}  // namespace kirchhoff::cli
