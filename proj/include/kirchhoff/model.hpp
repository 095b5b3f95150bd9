// Coefficient m(t,r), its primitive M_r with monotone inverse and
// mean-value point, the nonlinearity f with its reduced form h_r, and
// sampling-based verifiers for every model hypothesis.
#pragma once

#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "kirchhoff/expr.hpp"
#include "kirchhoff/mesh.hpp"

namespace kirchhoff::model {

class ModelError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// m : R x [0,inf) -> (0,inf), backed by either a parsed expression over
// {t, r} or a native function (builtin families, hand-built test models).
// m_lower is the user-declared uniform lower bound; it is audited by the
// hypothesis checker, never estimated.
class CoefficientModel {
public:
  static CoefficientModel from_expression(expr::Expression m, double m_lower,
                                          std::optional<expr::Expression> closed_primitive = {});
  static CoefficientModel from_function(std::string name,
                                        std::function<double(double, double)> m, double m_lower,
                                        std::function<double(double, double)> closed_primitive = {});

  // m(t,r) = t^2 (r^p + 1) + 1 with the closed primitive (r^p+1) t^3/3 + t.
  static CoefficientModel polynomial_family(double p);
  // m(t,r) = t^2 (e^{t^2 e^r} + 1) + 1; the primitive is quadrature-backed.
  static CoefficientModel exponential_family();
  static CoefficientModel constant(double value);

  double operator()(double t, double r) const;
  double lower_bound() const { return m_lower_; }
  bool has_closed_primitive() const { return static_cast<bool>(primitive_fn_); }
  double closed_primitive(double t, double r) const;
  const std::string& name() const { return name_; }

  struct InfinityProbe {
    bool diverges = false;
    double value = 0.0;  // meaningful when finite
  };
  // lim_{s->inf} m(s,r), probed at s in {1e2, 1e4, 1e6}: classified as
  // divergent when the last probe exceeds 10x the previous (or evaluation
  // overflows), otherwise the last probe value is returned.
  InfinityProbe m_at_infinity(double r) const;

private:
  CoefficientModel() = default;
  std::string name_;
  std::function<double(double, double)> fn_;
  std::function<double(double, double)> primitive_fn_;
  double m_lower_ = 1.0;
};

// M_r(t) = int_0^t m(s,r) ds for one fixed r, with the monotone inverse and
// the mean-value point t_{r,s}. Evaluation uses the closed primitive when
// the model has one, otherwise adaptive Simpson quadrature over a fixed
// ladder of cached knots at spacing 1/2; values are independent of call
// order, so concurrent use matches serial execution bit for bit.
class PrimitiveMap {
public:
  PrimitiveMap(const CoefficientModel& model, double r, double quad_tol = 1e-10);

  double r() const { return r_; }
  double quadrature_tolerance() const { return quad_tol_; }
  const CoefficientModel& model() const { return *model_; }

  double eval(double t) const;    // M_r(t), absolute error within quad_tol
  double slope(double t) const;   // m(t,r)
  // Monotone inverse via bracketed Newton inside [0, s/m_lower]; polished
  // until |M(t)-s| stops improving, so the residual lands near the floating
  // point floor of the primitive itself.
  double invert(double s) const;
  // The unique t strictly between 0 and M_r^{-1}(s) with
  // s = M(s/m(t,r), r). Requires s != 0 and a (t-monotone) model.
  double mean_value_point(double s) const;

  PrimitiveMap(const PrimitiveMap&) = delete;
  PrimitiveMap& operator=(const PrimitiveMap&) = delete;

private:
  double integrate_segment(double a, double b) const;
  double knot_value(int k, bool negative) const;  // M at +-k/2, lazily extended

  const CoefficientModel* model_;
  double r_;
  double quad_tol_;
  mutable std::vector<double> knots_pos_;  // knots_pos_[k] = M(k * spacing)
  mutable std::vector<double> knots_neg_;  // knots_neg_[k] = M(-k * spacing)
  mutable std::mutex cache_mutex_;
};

enum class Regime { source, growth, sublinear, lipschitz };

std::string_view regime_name(Regime r);
std::optional<Regime> regime_from_name(std::string_view name);

struct NonlinearityConstants {
  double c = 0.0;      // (f1) / growth bound
  double p = 0.0;      // growth exponent
  double theta = 0.0;  // Lipschitz constant
  double delta = 0.0;  // sublinear exponent in the Lipschitz regime bound
  double nu = 0.0;     // companion constant of delta
};

// f(x[,y],t) with its declared regime and constants. In the sublinear
// regime f is extended below t=0 by the constant value f(x,0).
class Nonlinearity {
public:
  static Nonlinearity from_expression(expr::Expression f, int dimension, Regime regime,
                                      NonlinearityConstants constants,
                                      std::optional<expr::Expression> mu = {},
                                      bool monotone_declared = false);
  static Nonlinearity from_function(std::string name,
                                    std::function<double(double, double, double)> f, int dimension,
                                    Regime regime, NonlinearityConstants constants,
                                    std::function<double(double, double)> mu = {},
                                    bool monotone_declared = false);

  double operator()(double x, double y, double t) const;
  Regime regime() const { return regime_; }
  const NonlinearityConstants& constants() const { return constants_; }
  bool monotone_declared() const { return monotone_declared_; }
  int dimension() const { return dimension_; }
  bool has_mu() const { return static_cast<bool>(mu_); }
  double mu(double x, double y) const;
  const std::string& name() const { return name_; }
  bool depends_on_t() const { return depends_on_t_; }

private:
  Nonlinearity() = default;
  std::string name_;
  std::function<double(double, double, double)> fn_;
  std::function<double(double, double)> mu_;
  int dimension_ = 1;
  Regime regime_ = Regime::source;
  NonlinearityConstants constants_;
  bool monotone_declared_ = false;
  bool depends_on_t_ = true;
};

// h_r(x,s) = f(x, M_r^{-1}(s)).
class ReducedNonlinearity {
public:
  ReducedNonlinearity(const Nonlinearity& f, const PrimitiveMap& pm) : f_(&f), pm_(&pm) {}

  double operator()(double x, double y, double s) const {
    return (*f_)(x, y, pm_->invert(s));
  }
  // theta / m_lower, the Lipschitz constant inherited through the inverse.
  double lipschitz_bound() const;
  // c * max(1, 1/m_lower): |h_r(x,s)| <= growth_constant() * (1 + |s|).
  double growth_constant() const;
  const PrimitiveMap& primitive() const { return *pm_; }
  const Nonlinearity& source() const { return *f_; }

private:
  const Nonlinearity* f_;
  const PrimitiveMap* pm_;
};

struct AlphaLimits {
  double alpha0 = 0.0;        // lim_{t->0+} f(x,t)/t (ignoring division by m)
  double alpha_inf = 0.0;     // lim_{t->inf} f(x,t)/t
  bool alpha0_infinite = false;
  double alpha0_r = 0.0;      // alpha0 / m(0,r); meaningless when infinite
  double alphainf_r = 0.0;    // alpha_inf / m(inf,r); 0 when m diverges
  bool m_inf_diverges = false;
};

// Limit ratios estimated on decade ladders t = 10^{-k} and 10^{k}, k=1..6,
// with Richardson extrapolation of the last two samples. A ratio exceeding
// 1e8, or sustained geometric growth across the last decades, is classified
// as +infinity. Throws ModelError when the sampled ratios are not monotone
// beyond tolerance (the decreasing-ratio hypothesis is then suspect).
AlphaLimits alpha_limits(const Nonlinearity& f, const CoefficientModel& m, double r, double x,
                         double y = 0.0);

enum class Verdict { pass, fail, inconclusive };
std::string_view verdict_name(Verdict v);

struct HypothesisResult {
  std::string name;
  Verdict verdict = Verdict::pass;
  std::string detail;
  std::vector<double> witness;  // (t,r) or (x[,y],t) of the worst sample
};

struct HypothesisReport {
  std::vector<HypothesisResult> results;
  int sample_budget = 0;
  const HypothesisResult* find(std::string_view name) const;
  bool passed(std::string_view name) const;   // absent counts as not passed
  bool failed(std::string_view name) const;
};

struct SampleRanges {
  double t_max = 10.0;
  double r_max = 10.0;
};

// Deterministic low-discrepancy verification of (m0)-(m3) and, when a
// nonlinearity is supplied, of the conditions matching its regime. Failures
// are data, not errors; each carries a witness point.
HypothesisReport check_hypotheses(const CoefficientModel& m, const Nonlinearity* f,
                                  const mesh::Mesh* domain, int sample_budget,
                                  SampleRanges ranges = {});

struct LemmaCheck {
  std::string name;
  bool pass = true;
  double worst = 0.0;       // worst observed slack / residual
  double threshold = 0.0;
  std::vector<double> witness;
  std::string detail;
};

struct LemmaSuiteResult {
  std::vector<LemmaCheck> checks;
  bool all_pass = true;
  int sample_budget = 0;
  const LemmaCheck* find(std::string_view name) const;
};

// Property suite for the primitive map: strict monotonicity, inverse
// consistency, the 1/m_lower Lipschitz bound of the inverse, monotonicity
// of M^{-1}(s)/s on both half-lines and joint (s,r) continuity along
// halving perturbation sequences.
LemmaSuiteResult verify_lemma_properties(const CoefficientModel& m, int sample_budget,
                                         SampleRanges ranges = {}, double quad_tol = 1e-10);

// Deterministic low-discrepancy sequence (radical inverse), shared by the
// verifiers and the tests.
double halton(unsigned long long index, int base);

}  // namespace kirchhoff::model
