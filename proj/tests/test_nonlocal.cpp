#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "kirchhoff/nonlocal.hpp"

using namespace kirchhoff;
using mesh::Mesh;
using model::CoefficientModel;
using model::Nonlinearity;
using model::NonlinearityConstants;
using model::Regime;
using nonlocal::Problem;

namespace {
constexpr double kPi = std::numbers::pi;

Nonlinearity sine_source() {
  return Nonlinearity::from_function(
      "pi^2*sin(pi*x)",
      [](double x, double, double) { return kPi * kPi * std::sin(kPi * x); }, 1, Regime::source,
      {});
}

Nonlinearity sublinear_lambda(double lambda, double c) {
  NonlinearityConstants k;
  k.c = c;
  return Nonlinearity::from_function(
      "lam*t/(1+t)", [lambda](double, double, double t) { return lambda * t / (1.0 + t); }, 1,
      Regime::sublinear, k, {}, true);
}

// scalar root of r (1+r)^2 = target by damped Newton, as an oracle
// independent of the bisection driver
double cubic_root(double target) {
  double r = std::cbrt(target);
  for (int i = 0; i < 200; ++i) {
    const double g = r * (1 + r) * (1 + r) - target;
    const double dg = (1 + r) * (1 + r) + 2 * r * (1 + r);
    r -= g / dg;
  }
  return r;
}

}  // namespace

TEST_CASE("evaluate_S: identity coefficient keeps u = v") {
  Problem p(Mesh::interval(0, 1, 255), CoefficientModel::constant(1.0), sine_source());
  auto e0 = nonlocal::evaluate_S(p, 0.0);
  auto e3 = nonlocal::evaluate_S(p, 3.0);
  CHECK(e0.S == doctest::Approx(kPi * kPi / 2).epsilon(0.01));
  CHECK(e0.S == e3.S);  // S constant in r
  for (int i = 0; i < e0.u.size(); ++i) CHECK(e0.u[i] == e0.v[i]);

  // the linear solution is solved once and reused bitwise
  const auto& v1 = p.linear_solution().solution;
  const auto& v2 = p.linear_solution().solution;
  CHECK(&v1 == &v2);
  for (int i = 0; i < e3.v.size(); ++i) CHECK(e3.v[i] == e0.v[i]);
}

TEST_CASE("evaluate_S: the linear-in-r family scales by 1/(1+r)^2") {
  auto linear_r = CoefficientModel::from_function(
      "1+r", [](double, double r) { return 1.0 + r; }, 1.0,
      [](double t, double r) { return (1.0 + r) * t; });
  Problem p(Mesh::interval(0, 1, 255), linear_r, sine_source());
  const double S0 = nonlocal::evaluate_S(p, 0.0).S;
  for (double r : {0.5, 1.0, 2.0}) {
    auto e = nonlocal::evaluate_S(p, r);
    CHECK(e.S == doctest::Approx(S0 / ((1 + r) * (1 + r))).epsilon(1e-12));
  }
}

TEST_CASE("chain S <= T/m <= V/m^2 holds literally on computed samples") {
  auto poly = CoefficientModel::polynomial_family(1.0);
  Problem p(Mesh::interval(0, 1, 255), poly, sine_source());
  const double mhat = poly.lower_bound();
  for (double r : {0.0, 0.7, 2.0, 10.0}) {
    auto e = nonlocal::evaluate_S(p, r);
    CHECK(e.S <= e.T / mhat * (1 + 1e-10) + 1e-10);
    CHECK(e.T / mhat <= e.V / (mhat * mhat) * (1 + 1e-10) + 1e-10);
  }
}

TEST_CASE("fixed point of the identity-coefficient problem is S itself") {
  Problem p(Mesh::interval(0, 1, 511), CoefficientModel::constant(1.0), sine_source());
  auto trace = nonlocal::find_fixed_point(p, 1e-8);
  CHECK(trace.r_star == doctest::Approx(kPi * kPi / 2).epsilon(0.01));
  CHECK(trace.residual <= 1e-8);
  CHECK(std::fabs(mesh::gradient_energy(trace.u_star) - trace.r_star) <= 1e-8);

  // bisection bracket invariant: g(a) > 0 >= g(b) throughout
  for (const auto& bracket : trace.bracket_history) {
    CHECK(bracket[0] < bracket[1]);
  }
}

TEST_CASE("fixed point of the 1+r family matches the scalar cubic oracle") {
  auto linear_r = CoefficientModel::from_function(
      "1+r", [](double, double r) { return 1.0 + r; }, 1.0,
      [](double t, double r) { return (1.0 + r) * t; });
  Problem p(Mesh::interval(0, 1, 255), linear_r, sine_source());
  const double V0 = nonlocal::evaluate_S(p, 0.0).V;
  auto trace = nonlocal::find_fixed_point(p, 1e-10);
  CHECK(std::fabs(trace.r_star - cubic_root(V0)) <= 1e-8);
}

TEST_CASE("fixed point of t^2+1+r is self-consistent") {
  auto fam = CoefficientModel::from_function(
      "t^2+1+r", [](double t, double r) { return t * t + 1.0 + r; }, 1.0,
      [](double t, double r) { return t * t * t / 3.0 + (1.0 + r) * t; });
  Problem p(Mesh::interval(0, 1, 255), fam, sine_source());
  auto trace = nonlocal::find_fixed_point(p, 1e-8);
  CHECK(trace.residual <= 1e-8);
  CHECK(std::fabs(mesh::gradient_energy(trace.u_star) - trace.r_star) <= 1e-8);
  CHECK(trace.r_star > 0.0);

  // the recomputed divergence-form residual stays at solver accuracy
  CHECK(nonlocal::nonlocal_residual(p, trace.u_star, trace.r_star) <= 1e-9);
}

TEST_CASE("trivial source is rejected") {
  Problem p(Mesh::interval(0, 1, 63), CoefficientModel::constant(1.0),
            Nonlinearity::from_function(
                "0", [](double, double, double) { return 0.0; }, 1, Regime::source, {}));
  CHECK_THROWS_AS(nonlocal::find_fixed_point(p, 1e-8), nonlocal::TrivialProblemError);
}

TEST_CASE("trace curve exposes the crossing") {
  Problem p(Mesh::interval(0, 1, 255), CoefficientModel::constant(1.0), sine_source());
  auto curve = nonlocal::trace_curve(p, 8.0, 9, 1e-8);
  CHECK(curve.samples.size() == 9);
  REQUIRE(curve.crossings.size() == 1);
  CHECK(curve.crossings[0] == doctest::Approx(kPi * kPi / 2).epsilon(0.01));

  auto single = nonlocal::trace_curve(p, 0.0, 5, 1e-8);
  CHECK(single.samples.size() == 1);
  CHECK(single.samples[0].S > 0.0);
}

TEST_CASE("check_f5 on the sublinear benchmark") {
  auto poly = CoefficientModel::polynomial_family(1.0);
  Problem p(Mesh::interval(0, 1, 255), poly, sublinear_lambda(20.0, 5.0));
  const double r_samples[3] = {0.0, 1.0, 5.0};
  auto rep = nonlocal::check_f5(p, r_samples);
  CHECK(rep.all_hold);
  CHECK(rep.condicao_applicable);
  CHECK(rep.condicao_holds);
  CHECK(rep.satisfied());
  // alpha0 = 20, m(0,r) = 1: lambda1(-Lap - 20) = pi^2 - 20 by the shift identity
  CHECK(rep.condicao_left.lambda == doctest::Approx(kPi * kPi - 20.0).epsilon(1e-3));
  CHECK(rep.condicao_left.lambda < 0.0);
  CHECK(rep.condicao_right.lambda == doctest::Approx(kPi * kPi).epsilon(1e-3));
  // the polynomial family diverges at infinity: right side is symbolic per r
  CHECK(rep.per_r[0].right.symbolic);

  // lambda = 5 < pi^2: the left inequality fails and no solve should run
  Problem q(Mesh::interval(0, 1, 255), poly, sublinear_lambda(5.0, 1.3));
  auto bad = nonlocal::check_f5(q, r_samples);
  CHECK(!bad.condicao_holds);
  CHECK(!bad.all_hold);
  CHECK(!bad.satisfied());
  CHECK(bad.condicao_left.lambda == doctest::Approx(kPi * kPi - 5.0).epsilon(1e-3));
}

TEST_CASE("check_f5 with x-dependent alpha") {
  auto identity = CoefficientModel::constant(1.0);
  NonlinearityConstants k;
  k.c = 8.0;
  // alpha0(x) = 20 + 10x is x-dependent; alpha_inf = 0
  auto f = Nonlinearity::from_function(
      "(20+10*x)*t/(1+t)",
      [](double x, double, double t) { return (20.0 + 10.0 * x) * t / (1.0 + t); }, 1,
      Regime::sublinear, k, {}, true);
  Problem p(Mesh::interval(0, 1, 127), identity, f);
  const double r_samples[1] = {0.0};
  auto rep = nonlocal::check_f5(p, r_samples);
  CHECK(rep.all_hold);
  // lambda1(-Lap - (20+10x)) lies between the constant-potential shifts
  CHECK(rep.per_r[0].left.lambda <= kPi * kPi - 20.0 + 1e-6);
  CHECK(rep.per_r[0].left.lambda >= kPi * kPi - 30.0 - 1e-6);
}

TEST_CASE("check_contraction verdicts") {
  auto identity = CoefficientModel::constant(1.0);
  auto make = [&](double theta, double delta, double nu) {
    NonlinearityConstants k;
    k.theta = theta;
    k.delta = delta;
    k.nu = nu;
    return Nonlinearity::from_function(
        "th*sin(t)+1", [theta](double, double, double t) { return theta * std::sin(t) + 1.0; }, 1,
        Regime::lipschitz, k, [](double, double) { return 2.0; });
  };

  Problem ok(Mesh::interval(0, 1, 255), identity, make(1.0, 0.5, 1.0));
  auto rep = nonlocal::check_contraction(ok);
  CHECK(rep.condition_holds);  // 1 < pi^2
  CHECK(rep.sampled_ok);
  CHECK(rep.all_ok);

  Problem bad(Mesh::interval(0, 1, 255), identity, make(10.0, 0.5, 1.0));
  auto rep2 = nonlocal::check_contraction(bad);
  CHECK(!rep2.condition_holds);  // 10 > pi^2
  CHECK(!rep2.all_ok);
  CHECK(rep2.bound - rep2.lambda1 > 0.0);  // reported margin

  // delta = 1 requires nu < lambda1; 9.8 < pi^2 passes only barely
  Problem tight(Mesh::interval(0, 1, 255), identity, make(1.0, 1.0, 9.8));
  auto rep3 = nonlocal::check_contraction(tight);
  CHECK(rep3.delta_is_one);
  CHECK(rep3.nu_ok);
  CHECK(rep3.all_ok);
  Problem over(Mesh::interval(0, 1, 255), identity, make(1.0, 1.0, 9.9));
  CHECK(!nonlocal::check_contraction(over).nu_ok);
}

TEST_CASE("continuity probe of S") {
  // identity coefficient: S constant, oscillation identically zero
  Problem flat(Mesh::interval(0, 1, 127), CoefficientModel::constant(1.0), sine_source());
  auto rep = nonlocal::continuity_probe_S(flat, 1.0);
  CHECK(rep.decaying);
  CHECK(rep.oscillation.back() == 0.0);

  // smooth family: oscillation decays under halving
  Problem smooth(Mesh::interval(0, 1, 127), CoefficientModel::polynomial_family(1.0),
                 sine_source());
  auto rep2 = nonlocal::continuity_probe_S(smooth, 1.0);
  CHECK(rep2.decaying);
  CHECK(rep2.oscillation.back() < rep2.oscillation.front());

  // hand-built discontinuity in r: the probe must flag it
  auto jump = CoefficientModel::from_function(
      "jump", [](double t, double r) { return t * t + (r < 1.0 ? 1.0 : 3.0); }, 1.0);
  Problem broken(Mesh::interval(0, 1, 127), jump, sine_source());
  auto rep3 = nonlocal::continuity_probe_S(broken, 1.0);
  CHECK(!rep3.decaying);
}

TEST_CASE("growth regime has no constructive solver") {
  NonlinearityConstants k;
  k.c = 1.0;
  k.p = 1.5;
  Problem p(Mesh::interval(0, 1, 63), CoefficientModel::constant(1.0),
            Nonlinearity::from_function(
                "t^1.5ish", [](double, double, double t) { return std::fabs(t); }, 1,
                Regime::growth, k));
  CHECK_THROWS_AS(nonlocal::evaluate_S(p, 0.0), nonlocal::NonlocalError);
}
