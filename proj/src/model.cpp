#include "kirchhoff/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace kirchhoff::model {

namespace {

constexpr double kKnotSpacing = 0.5;
constexpr double kEps = std::numeric_limits<double>::epsilon();

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

// Adaptive Simpson with Richardson correction. At least two refinement
// levels are forced so that symmetric integrands cannot stop the recursion
// prematurely; a rounding floor proportional to the local magnitudes keeps
// huge-scale integrands (the exponential family grows past 1e28) from
// recursing to full depth chasing unattainable absolute accuracy.
template <class F>
double simpson_rec(const F& f, double a, double fa, double mid, double fm, double b, double fb,
                   double whole, double tol, int depth, int min_depth) {
  const double lm = 0.5 * (a + mid), rm = 0.5 * (mid + b);
  const double flm = f(lm), frm = f(rm);
  const double left = (mid - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - mid) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  const double floor = 60.0 * kEps * (std::fabs(left) + std::fabs(right) + std::fabs(whole));
  if (depth <= 0 || std::fabs(delta) <= floor ||
      (min_depth <= 0 && std::fabs(delta) <= 15.0 * tol)) {
    return left + right + delta / 15.0;
  }
  return simpson_rec(f, a, fa, lm, flm, mid, fm, left, 0.5 * tol, depth - 1, min_depth - 1) +
         simpson_rec(f, mid, fm, rm, frm, b, fb, right, 0.5 * tol, depth - 1, min_depth - 1);
}

template <class F>
double adaptive_simpson(const F& f, double a, double b, double tol) {
  if (a == b) return 0.0;
  const double fa = f(a), fb = f(b);
  const double mid = 0.5 * (a + b);
  const double fm = f(mid);
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return simpson_rec(f, a, fa, mid, fm, b, fb, whole, tol, 24, 2);
}

}  // namespace

double halton(unsigned long long index, int base) {
  double f = 1.0, r = 0.0;
  while (index > 0) {
    f /= base;
    r += f * static_cast<double>(index % static_cast<unsigned long long>(base));
    index /= static_cast<unsigned long long>(base);
  }
  return r;
}

// ---------------------------------------------------------------------------
// CoefficientModel

CoefficientModel CoefficientModel::from_expression(expr::Expression m, double m_lower,
                                                   std::optional<expr::Expression> closed_primitive) {
  if (!(m_lower > 0.0)) throw ModelError("coefficient model: m_lower must be positive");
  CoefficientModel out;
  out.name_ = m.source();
  auto shared = std::make_shared<expr::Expression>(std::move(m));
  out.fn_ = [shared](double t, double r) {
    const double args[2] = {t, r};
    return shared->eval(std::span<const double>(args, 2));
  };
  if (closed_primitive) {
    auto prim = std::make_shared<expr::Expression>(std::move(*closed_primitive));
    out.primitive_fn_ = [prim](double t, double r) {
      const double args[2] = {t, r};
      return prim->eval(std::span<const double>(args, 2));
    };
  }
  out.m_lower_ = m_lower;
  return out;
}

CoefficientModel CoefficientModel::from_function(std::string name,
                                                 std::function<double(double, double)> m,
                                                 double m_lower,
                                                 std::function<double(double, double)> closed_primitive) {
  if (!(m_lower > 0.0)) throw ModelError("coefficient model: m_lower must be positive");
  CoefficientModel out;
  out.name_ = std::move(name);
  out.fn_ = std::move(m);
  out.primitive_fn_ = std::move(closed_primitive);
  out.m_lower_ = m_lower;
  return out;
}

CoefficientModel CoefficientModel::polynomial_family(double p) {
  return from_function(
      "t^2*(r^" + fmt(p) + "+1)+1",
      [p](double t, double r) { return t * t * (std::pow(r, p) + 1.0) + 1.0; }, 1.0,
      [p](double t, double r) { return (std::pow(r, p) + 1.0) * t * t * t / 3.0 + t; });
}

CoefficientModel CoefficientModel::exponential_family() {
  return from_function(
      "t^2*(exp(t^2*exp(r))+1)+1",
      [](double t, double r) { return t * t * (std::exp(t * t * std::exp(r)) + 1.0) + 1.0; }, 1.0);
}

CoefficientModel CoefficientModel::constant(double value) {
  if (!(value > 0.0)) throw ModelError("coefficient model: constant must be positive");
  return from_function(fmt(value), [value](double, double) { return value; }, value,
                       [value](double t, double) { return value * t; });
}

double CoefficientModel::operator()(double t, double r) const {
  double v;
  try {
    v = fn_(t, r);
  } catch (const std::exception& e) {
    throw ModelError("m(" + fmt(t) + ", " + fmt(r) + "): " + e.what());
  }
  if (!std::isfinite(v)) {
    throw ModelError("m(" + fmt(t) + ", " + fmt(r) + "): non-finite value");
  }
  return v;
}

double CoefficientModel::closed_primitive(double t, double r) const {
  if (!primitive_fn_) throw ModelError("coefficient model: no closed primitive available");
  double v;
  try {
    v = primitive_fn_(t, r);
  } catch (const std::exception& e) {
    throw ModelError("M(" + fmt(t) + ", " + fmt(r) + "): " + e.what());
  }
  if (!std::isfinite(v)) {
    throw ModelError("M(" + fmt(t) + ", " + fmt(r) + "): non-finite value");
  }
  return v;
}

CoefficientModel::InfinityProbe CoefficientModel::m_at_infinity(double r) const {
  const double probes_at[3] = {1e2, 1e4, 1e6};
  double values[3];
  for (int i = 0; i < 3; ++i) {
    try {
      values[i] = (*this)(probes_at[i], r);
    } catch (const std::exception&) {
      return {true, 0.0};  // overflow while growing: divergent limit
    }
  }
  if (values[2] > 10.0 * values[1]) return {true, 0.0};
  return {false, values[2]};
}

// ---------------------------------------------------------------------------
// PrimitiveMap

PrimitiveMap::PrimitiveMap(const CoefficientModel& model, double r, double quad_tol)
    : model_(&model), r_(r), quad_tol_(quad_tol) {
  if (!(r >= 0.0)) throw ModelError("primitive map: r must be nonnegative");
  if (!(quad_tol > 0.0)) throw ModelError("primitive map: quadrature tolerance must be positive");
  knots_pos_.push_back(0.0);  // M_r(0) = 0
  knots_neg_.push_back(0.0);
}

double PrimitiveMap::slope(double t) const { return (*model_)(t, r_); }

double PrimitiveMap::integrate_segment(double a, double b) const {
  auto f = [this](double t) { return (*model_)(t, r_); };
  return adaptive_simpson(f, a, b, quad_tol_ / 64.0);
}

// M at the ladder point +-k * spacing, extending the cached ladder by
// chained segment integrals. Ladder values never depend on which queries
// populated them, so results are call-order independent. The ladder is
// capped at 64 knots (|t| <= 32); evaluations beyond that integrate from
// the last knot directly.
double PrimitiveMap::knot_value(int k, bool negative) const {
  std::lock_guard<std::mutex> lock(cache_mutex_);
  auto& knots = negative ? knots_neg_ : knots_pos_;
  const double direction = negative ? -1.0 : 1.0;
  while (static_cast<int>(knots.size()) <= k) {
    const int next = static_cast<int>(knots.size());
    const double a = direction * kKnotSpacing * (next - 1);
    const double b = direction * kKnotSpacing * next;
    const double value = knots.back() + integrate_segment(a, b);
    // monotone in the direction of integration since m > 0
    if (negative ? !(value < knots.back()) : !(value > knots.back())) {
      throw ModelError("primitive map: ladder not strictly monotone near t = " + fmt(b) +
                       " ((m1) violated or quadrature failure)");
    }
    knots.push_back(value);
  }
  return knots[static_cast<std::size_t>(k)];
}

double PrimitiveMap::eval(double t) const {
  if (!std::isfinite(t)) throw ModelError("primitive map: non-finite argument");
  if (model_->has_closed_primitive()) {
    return model_->closed_primitive(t, r_) - model_->closed_primitive(0.0, r_);
  }
  if (t == 0.0) return 0.0;
  const bool negative = t < 0.0;
  const int kMaxKnot = 64;
  const int k = std::min(kMaxKnot, static_cast<int>(std::floor(std::fabs(t) / kKnotSpacing)));
  const double base = knot_value(k, negative);
  const double anchor = (negative ? -1.0 : 1.0) * kKnotSpacing * k;
  return base + integrate_segment(anchor, t);
}

double PrimitiveMap::invert(double s) const {
  if (!std::isfinite(s)) throw ModelError("primitive map: non-finite argument");
  if (s == 0.0) return 0.0;
  const double mhat = model_->lower_bound();
  // a-priori bracket is [0, s/m_lower] (mirrored for s < 0); the far end is
  // approached geometrically so that fast-growing primitives are never
  // evaluated far past the root.
  const double cap = std::fabs(s) / mhat;
  const double sign = s > 0.0 ? 1.0 : -1.0;
  double inner = 0.0, g_inner = -s;  // G(t) = M(t) - s, sign convention below
  double outer = sign * std::min(cap, 0.5);
  double g_outer = eval(outer) - s;
  while (sign * g_outer < 0.0 && std::fabs(outer) < cap) {
    inner = outer;
    g_inner = g_outer;
    outer = sign * std::min(cap, 2.0 * std::fabs(outer));
    g_outer = eval(outer) - s;
  }
  if (sign * g_outer < 0.0) {
    throw ModelError("primitive map: inverse bracket [0, s/m_lower] failed at s = " + fmt(s) +
                     " (declared lower bound violated, see (m1))");
  }
  double a, b, ga, gb;  // bracket with G(a) <= 0 <= G(b)
  if (s > 0.0) {
    a = inner;
    ga = g_inner;
    b = outer;
    gb = g_outer;
  } else {
    a = outer;
    ga = g_outer;
    b = inner;
    gb = g_inner;
  }
  if (ga > 0.0 || gb < 0.0) {
    throw ModelError("primitive map: inverse bracketing failed at s = " + fmt(s) +
                     " (primitive not monotone, see (m1))");
  }

  // Newton accelerated bisection. A Newton step that fails to reduce |G| is
  // followed by a midpoint step, so the bracket keeps shrinking even when
  // the primitive is strongly convex and Newton approaches from the far side.
  const double floor_tol = 4.0 * kEps * (1.0 + std::fabs(s));
  if (std::fabs(ga) <= floor_tol) return a;
  if (std::fabs(gb) <= floor_tol) return b;
  double t = 0.5 * (a + b);
  double g = eval(t) - s;
  double best_t = t;
  double best_abs = std::fabs(g);
  bool newton_grew = false;
  for (int iter = 0; iter < 200 && best_abs > floor_tol; ++iter) {
    if (b - a <= kEps * (std::fabs(a) + std::fabs(b) + 1.0)) break;
    if (g <= 0.0) {
      a = t;
    } else {
      b = t;
    }
    const double deriv = slope(t);
    double next = (!newton_grew && deriv > 0.0) ? t - g / deriv : 0.5 * (a + b);
    if (!(next >= a && next <= b)) next = 0.5 * (a + b);
    if (next == t) break;
    const double g_next = eval(next) - s;
    newton_grew = std::fabs(g_next) >= std::fabs(g);
    t = next;
    g = g_next;
    if (std::fabs(g) < best_abs) {
      best_abs = std::fabs(g);
      best_t = t;
    }
  }
  return best_t;
}

double PrimitiveMap::mean_value_point(double s) const {
  if (s == 0.0) throw ModelError("mean_value_point: s must be nonzero");
  const double T = invert(s);  // same sign as s
  auto G = [&](double t) { return eval(s / slope(t)) - s; };

  // scan (0,T) for the sign change; the equation is G(t) = 0 with G of one
  // sign at 0 and the opposite sign at T when m is strictly t-monotone
  const int scan = 32;
  double ts[scan + 1], gs[scan + 1];
  double max_abs = 0.0;
  for (int i = 0; i <= scan; ++i) {
    ts[i] = T * static_cast<double>(i) / scan;
    gs[i] = G(ts[i]);
    max_abs = std::max(max_abs, std::fabs(gs[i]));
  }
  if (max_abs <= 64.0 * kEps * (1.0 + std::fabs(s))) {
    throw ModelError("mean_value_point: equation degenerate at s = " + fmt(s) +
                     " (m constant in t, (m2) violated)");
  }
  int bracket = -1;
  int changes = 0;
  for (int i = 0; i < scan; ++i) {
    if (gs[i] == 0.0 || gs[i] * gs[i + 1] < 0.0) {
      ++changes;
      if (bracket < 0) bracket = i;
    }
  }
  if (changes == 0) {
    throw ModelError("mean_value_point: no interior root found at s = " + fmt(s) +
                     " ((m2) violated)");
  }
  if (changes > 1) {
    throw ModelError("mean_value_point: multiple roots detected at s = " + fmt(s) +
                     " ((m2) violated)");
  }

  double lo = std::min(ts[bracket], ts[bracket + 1]);
  double hi = std::max(ts[bracket], ts[bracket + 1]);
  double glo = G(lo);
  double t_best = lo, g_best = std::fabs(glo);
  for (int iter = 0; iter < 200; ++iter) {
    const double mid = 0.5 * (lo + hi);
    const double gm = G(mid);
    if (std::fabs(gm) < g_best) {
      g_best = std::fabs(gm);
      t_best = mid;
    }
    if (gm == 0.0) break;
    if ((gm > 0.0) == (glo > 0.0)) {
      lo = mid;
      glo = gm;
    } else {
      hi = mid;
    }
    if (hi - lo <= kEps * (std::fabs(lo) + std::fabs(hi) + 1e-300)) break;
  }

  // strict inequalities |t| < |M^{-1}(s)| <= |s|/m_lower
  if (!(std::fabs(t_best) < std::fabs(T)) || t_best * s < 0.0) {
    throw ModelError("mean_value_point: root escaped (0, M^{-1}(s)) at s = " + fmt(s));
  }
  return t_best;
}

// ---------------------------------------------------------------------------
// Nonlinearity

std::string_view regime_name(Regime r) {
  switch (r) {
    case Regime::source: return "source";
    case Regime::growth: return "growth";
    case Regime::sublinear: return "sublinear";
    case Regime::lipschitz: return "lipschitz";
  }
  return "?";
}

std::optional<Regime> regime_from_name(std::string_view name) {
  if (name == "source") return Regime::source;
  if (name == "growth") return Regime::growth;
  if (name == "sublinear") return Regime::sublinear;
  if (name == "lipschitz") return Regime::lipschitz;
  return std::nullopt;
}

Nonlinearity Nonlinearity::from_expression(expr::Expression f, int dimension, Regime regime,
                                           NonlinearityConstants constants,
                                           std::optional<expr::Expression> mu,
                                           bool monotone_declared) {
  Nonlinearity out;
  out.name_ = f.source();
  out.dimension_ = dimension;
  out.regime_ = regime;
  out.constants_ = constants;
  out.monotone_declared_ = monotone_declared;
  const int t_slot = static_cast<int>(f.variables().size()) - 1;
  out.depends_on_t_ = f.uses_variable(t_slot);
  auto shared = std::make_shared<expr::Expression>(std::move(f));
  if (dimension == 1) {
    out.fn_ = [shared](double x, double, double t) {
      const double args[2] = {x, t};
      return shared->eval(std::span<const double>(args, 2));
    };
  } else {
    out.fn_ = [shared](double x, double y, double t) {
      const double args[3] = {x, y, t};
      return shared->eval(std::span<const double>(args, 3));
    };
  }
  if (mu) {
    auto shared_mu = std::make_shared<expr::Expression>(std::move(*mu));
    if (dimension == 1) {
      out.mu_ = [shared_mu](double x, double) {
        const double args[1] = {x};
        return shared_mu->eval(std::span<const double>(args, 1));
      };
    } else {
      out.mu_ = [shared_mu](double x, double y) {
        const double args[2] = {x, y};
        return shared_mu->eval(std::span<const double>(args, 2));
      };
    }
  }
  return out;
}

Nonlinearity Nonlinearity::from_function(std::string name,
                                         std::function<double(double, double, double)> f,
                                         int dimension, Regime regime,
                                         NonlinearityConstants constants,
                                         std::function<double(double, double)> mu,
                                         bool monotone_declared) {
  Nonlinearity out;
  out.name_ = std::move(name);
  out.fn_ = std::move(f);
  out.mu_ = std::move(mu);
  out.dimension_ = dimension;
  out.regime_ = regime;
  out.constants_ = constants;
  out.monotone_declared_ = monotone_declared;
  out.depends_on_t_ = regime != Regime::source;
  return out;
}

double Nonlinearity::operator()(double x, double y, double t) const {
  if (regime_ == Regime::sublinear && t < 0.0) t = 0.0;  // constant extension below zero
  double v;
  try {
    v = fn_(x, y, t);
  } catch (const std::exception& e) {
    throw ModelError("f(" + fmt(x) + (dimension_ == 2 ? ", " + fmt(y) : std::string()) + ", " +
                     fmt(t) + "): " + e.what());
  }
  if (!std::isfinite(v)) {
    throw ModelError("f(" + fmt(x) + (dimension_ == 2 ? ", " + fmt(y) : std::string()) + ", " +
                     fmt(t) + "): non-finite value");
  }
  return v;
}

double Nonlinearity::mu(double x, double y) const {
  if (!mu_) throw ModelError("nonlinearity: mu is not declared");
  double v = mu_(x, y);
  if (!std::isfinite(v)) throw ModelError("mu(" + fmt(x) + "): non-finite value");
  return v;
}

double ReducedNonlinearity::lipschitz_bound() const {
  return f_->constants().theta / pm_->model().lower_bound();
}

double ReducedNonlinearity::growth_constant() const {
  return f_->constants().c * std::max(1.0, 1.0 / pm_->model().lower_bound());
}

// ---------------------------------------------------------------------------
// Limit ratios

namespace {

// Richardson extrapolation of a decade ladder: assumes ratio(t) = L + C*t.
double decade_extrapolate(double q_last, double q_prev) {
  return q_last + (q_last - q_prev) / 9.0;
}

}  // namespace

AlphaLimits alpha_limits(const Nonlinearity& f, const CoefficientModel& m, double r, double x,
                         double y) {
  if (f.regime() != Regime::sublinear) {
    throw ModelError("alpha_limits: requires the sublinear regime");
  }
  AlphaLimits out;

  double q0[6], qi[6];
  for (int k = 1; k <= 6; ++k) {
    const double t_small = std::pow(10.0, -k);
    const double t_large = std::pow(10.0, k);
    q0[k - 1] = f(x, y, t_small) / t_small;
    qi[k - 1] = f(x, y, t_large) / t_large;
  }
  // under the decreasing-ratio hypothesis the small-t ladder is nondecreasing
  // and the large-t ladder nonincreasing
  for (int k = 1; k < 6; ++k) {
    const double slack0 = 1e-9 * std::max(1.0, std::fabs(q0[k - 1]));
    if (q0[k] < q0[k - 1] - slack0) {
      throw ModelError("alpha_limits: ratio f(x,t)/t not monotone near t -> 0 (t = 1e-" +
                       std::to_string(k + 1) + "), (f4) suspect");
    }
    const double slacki = 1e-9 * std::max(1.0, std::fabs(qi[k - 1]));
    if (qi[k] > qi[k - 1] + slacki) {
      throw ModelError("alpha_limits: ratio f(x,t)/t not monotone as t -> inf (t = 1e" +
                       std::to_string(k + 1) + "), (f4) suspect");
    }
  }

  const bool geometric_growth = q0[5] >= 2.0 * q0[4] && q0[4] >= 2.0 * q0[3] &&
                                q0[3] >= 2.0 * q0[2] && q0[5] > 10.0 * std::max(1.0, q0[0]);
  out.alpha0_infinite = q0[5] > 1e8 || geometric_growth;
  out.alpha0 = out.alpha0_infinite ? std::numeric_limits<double>::infinity()
                                   : decade_extrapolate(q0[5], q0[4]);
  out.alpha_inf = decade_extrapolate(qi[5], qi[4]);

  const double m_zero = m(0.0, r);
  if (!out.alpha0_infinite) out.alpha0_r = out.alpha0 / m_zero;
  const auto probe = m.m_at_infinity(r);
  out.m_inf_diverges = probe.diverges;
  out.alphainf_r = probe.diverges ? 0.0 : out.alpha_inf / probe.value;
  return out;
}

// ---------------------------------------------------------------------------
// Hypothesis checks

std::string_view verdict_name(Verdict v) {
  switch (v) {
    case Verdict::pass: return "pass";
    case Verdict::fail: return "fail";
    case Verdict::inconclusive: return "inconclusive";
  }
  return "?";
}

const HypothesisResult* HypothesisReport::find(std::string_view name) const {
  for (const auto& r : results) {
    if (r.name == name) return &r;
  }
  return nullptr;
}

bool HypothesisReport::passed(std::string_view name) const {
  const auto* r = find(name);
  return r && r->verdict == Verdict::pass;
}

bool HypothesisReport::failed(std::string_view name) const {
  const auto* r = find(name);
  return r && r->verdict == Verdict::fail;
}

namespace {

struct CheckRunner {
  HypothesisReport& report;

  template <class Body>
  void run(const std::string& name, Body&& body) {
    HypothesisResult result;
    result.name = name;
    try {
      body(result);
    } catch (const std::exception& e) {
      result.verdict = Verdict::inconclusive;
      result.detail = std::string("evaluation failed: ") + e.what();
    }
    report.results.push_back(std::move(result));
  }
};

}  // namespace

HypothesisReport check_hypotheses(const CoefficientModel& m, const Nonlinearity* f,
                                  const mesh::Mesh* domain, int sample_budget,
                                  SampleRanges ranges) {
  HypothesisReport report;
  report.sample_budget = sample_budget;
  CheckRunner runner{report};
  const int budget = std::max(sample_budget, 16);
  const double t_max = ranges.t_max;
  const double r_max = ranges.r_max;
  const double mono_tol = 1e-12;

  // (m0): continuity via local oscillation under refinement
  runner.run("m0", [&](HypothesisResult& res) {
    const int points = std::min(budget, 512);
    for (int i = 1; i <= points; ++i) {
      const double t = t_max * (2.0 * halton(i, 2) - 1.0);
      const double r = r_max * halton(i, 3);
      for (int axis = 0; axis < 2; ++axis) {
        const double d1 = axis == 0 ? 1e-3 * std::max(1.0, std::fabs(t)) : 1e-3 * std::max(1.0, r);
        const double d2 = d1 / 16.0;
        auto osc = [&](double d) {
          const double tp = axis == 0 ? t + d : t;
          const double rp = axis == 0 ? r : std::max(0.0, r + d);
          return std::fabs(m(tp, rp) - m(t, r));
        };
        const double o1 = osc(d1), o2 = osc(d2);
        if (o2 > 0.5 * o1 + 1e-9 * std::max(1.0, std::fabs(m(t, r)))) {
          res.verdict = Verdict::fail;
          res.detail = "oscillation does not shrink under refinement (axis " +
                       std::string(axis == 0 ? "t" : "r") + ")";
          res.witness = {t, r};
          return;
        }
      }
    }
    res.detail = "local oscillation shrinks under refinement at all samples";
  });

  // (m1): declared lower bound audited by sampling
  runner.run("m1", [&](HypothesisResult& res) {
    double worst = std::numeric_limits<double>::infinity();
    std::vector<double> witness;
    for (int i = 1; i <= budget; ++i) {
      const double t = t_max * (2.0 * halton(i, 2) - 1.0);
      const double r = r_max * halton(i, 3);
      const double v = m(t, r);
      if (v < worst) {
        worst = v;
        witness = {t, r};
      }
    }
    for (int i = 0; i <= 32; ++i) {  // the t = 0 line is where minima typically sit
      const double r = r_max * i / 32.0;
      const double v = m(0.0, r);
      if (v < worst) {
        worst = v;
        witness = {0.0, r};
      }
    }
    if (worst < m.lower_bound() - 1e-12 * std::max(1.0, m.lower_bound())) {
      res.verdict = Verdict::fail;
      res.detail = "sampled m = " + fmt(worst) + " below declared lower bound " +
                   fmt(m.lower_bound());
      res.witness = witness;
    } else {
      res.detail = "sampled minimum " + fmt(worst) + " respects declared bound " +
                   fmt(m.lower_bound());
    }
  });

  // (m2): strict t-monotonicity on each half line, per sampled r
  runner.run("m2", [&](HypothesisResult& res) {
    const int n_r = std::clamp(budget / 64, 4, 64);
    const int n_t = 48;
    for (int j = 0; j <= n_r; ++j) {
      const double r = r_max * (j == 0 ? 0.0 : halton(j, 3));
      for (int side = 0; side < 2; ++side) {
        double flat_span = 0.0;
        double prev_t = 0.0, prev_m = m(0.0, r);
        for (int i = 1; i <= n_t; ++i) {
          const double mag = t_max * i / n_t;
          const double t = side == 0 ? mag : -mag;
          const double v = m(t, r);
          // moving away from 0 the coefficient must increase on both sides
          if (v < prev_m - mono_tol * std::max(1.0, std::fabs(prev_m))) {
            res.verdict = Verdict::fail;
            res.detail = std::string("m decreases away from 0 on the ") +
                         (side == 0 ? "positive" : "negative") + " side";
            res.witness = {t, r};
            return;
          }
          flat_span = std::max(flat_span, std::fabs(v - prev_m));
          prev_t = t;
          prev_m = v;
        }
        (void)prev_t;
        if (flat_span <= mono_tol * std::max(1.0, m.lower_bound())) {
          res.verdict = Verdict::fail;
          res.detail = std::string("m is constant in t on the ") +
                       (side == 0 ? "positive" : "negative") + " side (not strictly monotone)";
          res.witness = {side == 0 ? t_max : -t_max, r};
          return;
        }
      }
    }
    res.detail = "strictly decreasing on t<0 and increasing on t>0 at all sampled r";
  });

  // (m3): m(0,r) equals the declared minimum for every r
  runner.run("m3", [&](HypothesisResult& res) {
    for (int j = 0; j <= 64; ++j) {
      const double r = r_max * j / 64.0;
      const double v = m(0.0, r);
      if (std::fabs(v - m.lower_bound()) > 1e-9 * std::max(1.0, m.lower_bound())) {
        res.verdict = Verdict::fail;
        res.detail = "m(0," + fmt(r) + ") = " + fmt(v) + " != declared " + fmt(m.lower_bound());
        res.witness = {0.0, r};
        return;
      }
    }
    res.detail = "m(0,r) = " + fmt(m.lower_bound()) + " along the sampled r ladder";
  });

  if (!f) return report;

  const auto& k = f->constants();
  const double ax = domain ? domain->xmin() : 0.0;
  const double bx = domain ? domain->xmax() : 1.0;
  const double ay = domain ? domain->ymin() : 0.0;
  const double by = domain ? domain->ymax() : 1.0;
  const bool two_d = f->dimension() == 2;
  auto sample_x = [&](unsigned long long i, double& x, double& y) {
    x = ax + (bx - ax) * halton(i, 2);
    y = two_d ? ay + (by - ay) * halton(i, 5) : 0.0;
  };

  if (f->regime() == Regime::sublinear) {
    // (f1): 0 <= f <= c(1+t) on t >= 0
    runner.run("f1", [&](HypothesisResult& res) {
      for (int i = 1; i <= budget; ++i) {
        double x, y;
        sample_x(i, x, y);
        const double t = t_max * halton(i, 3);
        const double v = f->operator()(x, y, t);
        const double bound = k.c * (1.0 + t);
        if (v < -1e-12 || v > bound + 1e-12 * std::max(1.0, bound)) {
          res.verdict = Verdict::fail;
          res.detail = "f = " + fmt(v) + " outside [0, c(1+t)] = [0, " + fmt(bound) + "]";
          res.witness = two_d ? std::vector<double>{x, y, t} : std::vector<double>{x, t};
          return;
        }
      }
      res.detail = "0 <= f <= c(1+t) at all samples with c = " + fmt(k.c);
    });

    // (f2): continuity in t
    runner.run("f2", [&](HypothesisResult& res) {
      const int points = std::min(budget, 256);
      for (int i = 1; i <= points; ++i) {
        double x, y;
        sample_x(i, x, y);
        const double t = t_max * halton(i, 3);
        const double d1 = 1e-3 * std::max(1.0, t);
        const double base = f->operator()(x, y, t);
        const double o1 = std::fabs(f->operator()(x, y, t + d1) - base);
        const double o2 = std::fabs(f->operator()(x, y, t + d1 / 16.0) - base);
        if (o2 > 0.5 * o1 + 1e-9 * std::max(1.0, std::fabs(base))) {
          res.verdict = Verdict::fail;
          res.detail = "oscillation in t does not shrink under refinement";
          res.witness = two_d ? std::vector<double>{x, y, t} : std::vector<double>{x, t};
          return;
        }
      }
      res.detail = "t-oscillation shrinks under refinement at all samples";
    });

    // (f3): x -> f(x,t) bounded (finite) over sampled x for fixed t
    runner.run("f3", [&](HypothesisResult& res) {
      double worst = 0.0;
      for (int j = 0; j <= 8; ++j) {
        const double t = t_max * j / 8.0;
        for (int i = 1; i <= std::min(budget, 256); ++i) {
          double x, y;
          sample_x(i, x, y);
          worst = std::max(worst, std::fabs(f->operator()(x, y, t)));
        }
      }
      res.detail = "sup over samples of |f(.,t)| = " + fmt(worst);
    });

    // (f4): t -> f(x,t)/t nonincreasing on (0, inf)
    runner.run("f4", [&](HypothesisResult& res) {
      const int n_x = std::clamp(budget / 64, 4, 64);
      const int n_t = 48;
      for (int j = 1; j <= n_x; ++j) {
        double x, y;
        sample_x(j, x, y);
        double prev_ratio = std::numeric_limits<double>::infinity();
        for (int i = 1; i <= n_t; ++i) {
          const double t = t_max * i / n_t;
          const double ratio = f->operator()(x, y, t) / t;
          if (ratio > prev_ratio + 1e-9 * std::max(1.0, std::fabs(prev_ratio))) {
            res.verdict = Verdict::fail;
            res.detail = "f(x,t)/t increases along the t ladder";
            res.witness = two_d ? std::vector<double>{x, y, t} : std::vector<double>{x, t};
            return;
          }
          prev_ratio = ratio;
        }
      }
      res.detail = "f(x,t)/t nonincreasing along all sampled ladders";
    });

    // (f6): optional monotonicity used by the monotone solver
    if (f->monotone_declared()) {
      runner.run("f6", [&](HypothesisResult& res) {
        const int n_x = std::clamp(budget / 64, 4, 64);
        const int n_t = 48;
        for (int j = 1; j <= n_x; ++j) {
          double x, y;
          sample_x(j, x, y);
          double prev = f->operator()(x, y, 0.0);
          for (int i = 1; i <= n_t; ++i) {
            const double t = t_max * i / n_t;
            const double v = f->operator()(x, y, t);
            if (v < prev - 1e-12 * std::max(1.0, std::fabs(prev))) {
              res.verdict = Verdict::fail;
              res.detail = "f decreases in t although (f6) was declared";
              res.witness = two_d ? std::vector<double>{x, y, t} : std::vector<double>{x, t};
              return;
            }
            prev = v;
          }
        }
        res.detail = "f nondecreasing in t along all sampled ladders";
      });
    }
  }

  if (f->regime() == Regime::lipschitz) {
    // (f7): f(x,0) != 0
    runner.run("f7", [&](HypothesisResult& res) {
      for (int i = 1; i <= std::min(budget, 512); ++i) {
        double x, y;
        sample_x(i, x, y);
        const double v = f->operator()(x, y, 0.0);
        if (std::fabs(v) <= 1e-12) {
          res.verdict = Verdict::fail;
          res.detail = "f(x,0) vanishes at a sampled point";
          res.witness = two_d ? std::vector<double>{x, y, 0.0} : std::vector<double>{x, 0.0};
          return;
        }
      }
      res.detail = "f(x,0) != 0 at all sampled x";
    });

    // (f8): |f| <= mu(x) + nu |t|^delta
    runner.run("f8", [&](HypothesisResult& res) {
      if (!f->has_mu()) {
        res.verdict = Verdict::inconclusive;
        res.detail = "mu is not declared";
        return;
      }
      for (int i = 1; i <= budget; ++i) {
        double x, y;
        sample_x(i, x, y);
        const double t = t_max * (2.0 * halton(i, 3) - 1.0);
        const double bound = f->mu(x, y) + k.nu * std::pow(std::fabs(t), k.delta);
        const double v = std::fabs(f->operator()(x, y, t));
        if (v > bound + 1e-12 * std::max(1.0, bound)) {
          res.verdict = Verdict::fail;
          res.detail = "|f| = " + fmt(v) + " exceeds mu(x) + nu|t|^delta = " + fmt(bound);
          res.witness = two_d ? std::vector<double>{x, y, t} : std::vector<double>{x, t};
          return;
        }
      }
      res.detail = "|f| <= mu(x) + nu|t|^delta at all samples";
    });

    // (f9): global Lipschitz bound in t
    runner.run("f9", [&](HypothesisResult& res) {
      for (int i = 1; i <= budget; ++i) {
        double x, y;
        sample_x(i, x, y);
        const double t1 = t_max * (2.0 * halton(i, 3) - 1.0);
        const double t2 = t_max * (2.0 * halton(i, 7) - 1.0);
        const double lhs = std::fabs(f->operator()(x, y, t1) - f->operator()(x, y, t2));
        const double rhs = k.theta * std::fabs(t1 - t2);
        if (lhs > rhs + 1e-12 * std::max(1.0, rhs)) {
          res.verdict = Verdict::fail;
          res.detail = "|f(x,t1)-f(x,t2)| = " + fmt(lhs) + " exceeds theta|t1-t2| = " + fmt(rhs);
          res.witness = two_d ? std::vector<double>{x, y, t1} : std::vector<double>{x, t1};
          return;
        }
      }
      res.detail = "Lipschitz bound holds at all sampled pairs with theta = " + fmt(k.theta);
    });
  }

  if (f->regime() == Regime::growth) {
    runner.run("C", [&](HypothesisResult& res) {
      for (int i = 1; i <= budget; ++i) {
        double x, y;
        sample_x(i, x, y);
        const double t = t_max * (2.0 * halton(i, 3) - 1.0);
        const double bound = k.c * (1.0 + std::pow(std::fabs(t), k.p));
        const double v = std::fabs(f->operator()(x, y, t));
        if (v > bound + 1e-12 * std::max(1.0, bound)) {
          res.verdict = Verdict::fail;
          res.detail = "|f| = " + fmt(v) + " exceeds c(1+|t|^p) = " + fmt(bound);
          res.witness = two_d ? std::vector<double>{x, y, t} : std::vector<double>{x, t};
          return;
        }
      }
      res.detail = "|f| <= c(1+|t|^p) at all samples";
    });
  }

  return report;
}

// ---------------------------------------------------------------------------
// Lemma property suite

const LemmaCheck* LemmaSuiteResult::find(std::string_view name) const {
  for (const auto& c : checks) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

LemmaSuiteResult verify_lemma_properties(const CoefficientModel& m, int sample_budget,
                                         SampleRanges ranges, double quad_tol) {
  LemmaSuiteResult out;
  out.sample_budget = sample_budget;
  const int budget = std::max(sample_budget, 64);
  const double t_max = ranges.t_max;
  const double r_max = ranges.r_max;
  const double mhat = m.lower_bound();

  auto run = [&](LemmaCheck c, auto&& body) {
    try {
      body(c);
      c.pass = c.worst <= c.threshold;
    } catch (const std::exception& e) {
      c.pass = false;
      c.worst = std::numeric_limits<double>::infinity();
      c.detail = e.what();
    }
    out.all_pass = out.all_pass && c.pass;
    out.checks.push_back(std::move(c));
  };

  // (a) strict increase, quantitatively M(t2)-M(t1) >= m_lower (t2-t1).
  // Slacks are measured relative to max(1, scale of the values involved):
  // at unit scale they are absolute, while huge-scale primitives are judged
  // against what IEEE doubles can represent.
  run({"strict_increase", true, 0.0, 10.0 * quad_tol, {}, {}}, [&](LemmaCheck& c) {
    for (int i = 1; i <= budget; ++i) {
      const double r = r_max * halton(i, 5);
      double t1 = t_max * (2.0 * halton(i, 2) - 1.0);
      double t2 = t_max * (2.0 * halton(i, 3) - 1.0);
      if (t1 > t2) std::swap(t1, t2);
      if (t2 - t1 < 1e-6) continue;
      PrimitiveMap pm(m, r, quad_tol);
      const double m1 = pm.eval(t1), m2 = pm.eval(t2);
      const double scale = std::max({1.0, std::fabs(m1), std::fabs(m2)});
      const double slack = (mhat * (t2 - t1) - (m2 - m1)) / scale;
      if (slack > c.worst) {
        c.worst = slack;
        c.witness = {t1, t2, r};
      }
    }
  });

  // inverse consistency |M(M^{-1}(s)) - s| over s = M(t) samples
  run({"inverse_consistency", true, 0.0, 10.0 * quad_tol, {}, {}}, [&](LemmaCheck& c) {
    for (int i = 1; i <= budget; ++i) {
      const double r = r_max * halton(i, 3);
      const double t = t_max * (2.0 * halton(i, 2) - 1.0);
      PrimitiveMap pm(m, r, quad_tol);
      const double s = pm.eval(t);
      const double back = pm.invert(s);
      const double res = std::fabs(pm.eval(back) - s) / std::max(1.0, std::fabs(s));
      if (res > c.worst) {
        c.worst = res;
        c.witness = {s, r};
      }
    }
  });

  // (b) Lipschitz inverse: |M^{-1}(s1)-M^{-1}(s2)| <= |s1-s2| / m_lower
  run({"lipschitz_inverse", true, 0.0, 1e-9, {}, {}}, [&](LemmaCheck& c) {
    for (int i = 1; i <= budget / 2; ++i) {
      const double r = r_max * halton(i, 7);
      PrimitiveMap pm(m, r, quad_tol);
      const double s1 = pm.eval(t_max * (2.0 * halton(i, 2) - 1.0));
      const double s2 = pm.eval(t_max * (2.0 * halton(i, 3) - 1.0));
      const double slack = std::fabs(pm.invert(s1) - pm.invert(s2)) - std::fabs(s1 - s2) / mhat;
      if (slack > c.worst) {
        c.worst = slack;
        c.witness = {s1, s2, r};
      }
    }
  });

  // (b) bound |M^{-1}(s)| <= |s| / m_lower
  run({"inverse_bound", true, 0.0, 1e-9, {}, {}}, [&](LemmaCheck& c) {
    for (int i = 1; i <= budget / 2; ++i) {
      const double r = r_max * halton(i, 7);
      PrimitiveMap pm(m, r, quad_tol);
      const double s = pm.eval(t_max * (2.0 * halton(i, 2) - 1.0));
      const double slack = std::fabs(pm.invert(s)) - std::fabs(s) / mhat;
      if (slack > c.worst) {
        c.worst = slack;
        c.witness = {s, r};
      }
    }
  });

  // (d) s -> M^{-1}(s)/s strictly decreasing on (0,inf), increasing on
  // (-inf,0): on both half lines the ratio decays as |s| grows
  run({"ratio_monotonicity", true, 0.0, 1e-9, {}, {}}, [&](LemmaCheck& c) {
    for (int i = 1; i <= budget / 2; ++i) {
      const double r = r_max * halton(i, 5);
      PrimitiveMap pm(m, r, quad_tol);
      for (int side = 0; side < 2; ++side) {
        double m1 = t_max * std::max(halton(i, 2), 1e-3);
        double m2 = t_max * std::max(halton(i, 3), 1e-3);
        if (m1 == m2) continue;
        if (m1 > m2) std::swap(m1, m2);  // 0 < m1 < m2
        const double sign = side == 0 ? 1.0 : -1.0;
        const double s_small = pm.eval(sign * m1);
        const double s_large = pm.eval(sign * m2);
        const double rho_small = pm.invert(s_small) / s_small;
        const double rho_large = pm.invert(s_large) / s_large;
        const double slack = rho_large - rho_small;
        if (slack > c.worst) {
          c.worst = slack;
          c.witness = {s_small, s_large, r};
        }
      }
    }
  });

  // (c) joint continuity: along halving perturbations of (s, r) the
  // consecutive inverse values form a Cauchy sequence whose differences
  // shrink geometrically toward the unperturbed value
  run({"joint_continuity", true, 0.0, 0.0, {}, {}}, [&](LemmaCheck& c) {
    const int bases = std::min(128, std::max(budget / 16, 8));
    const int levels = 10;
    for (int i = 1; i <= bases; ++i) {
      const double r0 = r_max * halton(i, 3);
      const double t0 = t_max * (2.0 * halton(i, 2) - 1.0);
      PrimitiveMap pm0(m, r0, quad_tol);
      const double s0 = pm0.eval(t0);
      const double base = pm0.invert(s0);
      const double ds = 0.1 * (1.0 + std::fabs(s0));
      const double dr = 0.1 * (1.0 + r0);
      std::vector<double> inv(levels + 1);
      for (int kk = 0; kk <= levels; ++kk) {
        const double scale = std::pow(0.5, kk);
        PrimitiveMap pmk(m, std::max(0.0, r0 + dr * scale), quad_tol);
        inv[static_cast<std::size_t>(kk)] = pmk.invert(s0 + ds * scale);
      }
      auto gap = [&](int kk) { return std::fabs(inv[static_cast<std::size_t>(kk)] - inv[static_cast<std::size_t>(kk + 1)]); };
      const double start = std::max(gap(1), gap(2));
      const double tail = std::max(gap(levels - 2), gap(levels - 1));
      const double last = std::fabs(inv[static_cast<std::size_t>(levels)] - base);
      const double floor = 1e-8 * (1.0 + std::fabs(base));
      // the tail differences must have decayed and the last iterate must
      // sit near the limit predicted by the remaining geometric tail
      const double slack =
          std::max(tail - 0.25 * start - floor, last - (start + 4.0 * tail) - floor) /
          (1.0 + std::fabs(base));
      if (slack > c.worst) {
        c.worst = slack;
        c.witness = {s0, r0};
      }
    }
  });

  return out;
}

}  // namespace kirchhoff::model
