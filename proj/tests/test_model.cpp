#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <thread>

#include "kirchhoff/expr.hpp"
#include "kirchhoff/model.hpp"

using namespace kirchhoff;
using model::CoefficientModel;
using model::Nonlinearity;
using model::NonlinearityConstants;
using model::PrimitiveMap;
using model::Regime;

namespace {

Nonlinearity sublinear_lambda(double lambda, double c) {
  NonlinearityConstants k;
  k.c = c;
  return Nonlinearity::from_function(
      "lam*t/(1+t)", [lambda](double, double, double t) { return lambda * t / (1.0 + t); }, 1,
      Regime::sublinear, k, {}, true);
}

}  // namespace

TEST_CASE("primitive evaluation against closed forms") {
  auto poly = CoefficientModel::polynomial_family(1.0);
  PrimitiveMap pm0(poly, 0.0);
  CHECK(pm0.eval(1.0) == doctest::Approx(4.0 / 3.0).epsilon(1e-14));
  CHECK(pm0.eval(0.0) == 0.0);

  PrimitiveMap pm1(poly, 1.0);
  CHECK(pm1.eval(2.0) == doctest::Approx(22.0 / 3.0).epsilon(1e-14));

  // quadrature backend must agree with the closed form to tolerance
  auto poly_quad = CoefficientModel::from_function(
      "t^2*(r+1)+1", [](double t, double r) { return t * t * (r + 1.0) + 1.0; }, 1.0);
  PrimitiveMap qm(poly_quad, 1.0, 1e-10);
  CHECK(std::fabs(qm.eval(2.0) - 22.0 / 3.0) <= 1e-10);
  CHECK(std::fabs(qm.eval(-2.0) + 22.0 / 3.0) <= 1e-10);
  CHECK(std::fabs(qm.eval(7.3) - pm1.eval(7.3)) <= 1e-9);

  // M(t) >= m_lower * t for t >= 0 and <= for t <= 0
  for (double t : {0.25, 1.0, 3.0}) {
    CHECK(pm1.eval(t) >= 1.0 * t);
    CHECK(pm1.eval(-t) <= -1.0 * t);
  }
}

TEST_CASE("primitive inversion") {
  auto poly = CoefficientModel::polynomial_family(1.0);  // at r=0: m = t^2 + 1
  PrimitiveMap pm(poly, 0.0);

  CHECK(pm.invert(4.0 / 3.0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(pm.invert(0.0) == 0.0);

  double t10 = pm.invert(10.0);
  CHECK(t10 > 0.0);
  CHECK(t10 <= 10.0);  // |M^{-1}(s)| <= |s| / m_lower with m_lower = 1
  CHECK(std::fabs(pm.eval(t10) - 10.0) <= 1e-12);

  CHECK(pm.invert(-4.0 / 3.0) == doctest::Approx(-1.0).epsilon(1e-12));

  // declared lower bound too large: the a-priori bracket misses the root
  auto wrong = CoefficientModel::from_function(
      "0.5", [](double, double) { return 0.5; }, 1.0);  // true m = 0.5 < declared 1
  PrimitiveMap bad(wrong, 0.0);
  CHECK_THROWS_AS(bad.invert(2.0), model::ModelError);
}

TEST_CASE("mean value point satisfies the defining equation") {
  auto poly = CoefficientModel::polynomial_family(1.0);
  PrimitiveMap pm(poly, 0.0);
  const double s = 4.0 / 3.0;

  // independent bisection oracle on g(t) = M(s/m(t,0), 0) - s over (0, 1)
  auto M = [](double t) { return t * t * t / 3.0 + t; };
  auto g = [&](double t) { return M(s / (t * t + 1.0)) - s; };
  double lo = 0.0, hi = 1.0;
  for (int i = 0; i < 200; ++i) {
    double mid = 0.5 * (lo + hi);
    (g(mid) > 0.0 ? lo : hi) = mid;
  }
  const double oracle = 0.5 * (lo + hi);

  const double t_rs = pm.mean_value_point(s);
  CHECK(t_rs == doctest::Approx(oracle).epsilon(1e-10));
  CHECK(std::fabs(pm.eval(s / (t_rs * t_rs + 1.0)) - s) <= 1e-10);  // residual of the equation
  CHECK(t_rs > 0.0);
  CHECK(t_rs < pm.invert(s));
  CHECK(pm.invert(s) <= s / 1.0 + 1e-12);

  // even symmetry of this family in t
  CHECK(pm.mean_value_point(-s) == doctest::Approx(-t_rs).epsilon(1e-10));

  // identity M^{-1}(s) = s / m(t_rs, r)
  CHECK(pm.invert(s) == doctest::Approx(s / (t_rs * t_rs + 1.0)).epsilon(1e-10));

  CHECK_THROWS_AS(pm.mean_value_point(0.0), model::ModelError);
  auto flat = CoefficientModel::constant(2.0);
  PrimitiveMap pf(flat, 0.0);
  CHECK_THROWS_AS(pf.mean_value_point(1.0), model::ModelError);
}

TEST_CASE("alpha limits") {
  auto identity = CoefficientModel::constant(1.0);
  auto f = sublinear_lambda(20.0, 5.0);
  auto lim = model::alpha_limits(f, identity, 0.0, 0.5);
  CHECK(!lim.alpha0_infinite);
  CHECK(lim.alpha0 == doctest::Approx(20.0).epsilon(1e-8));
  CHECK(std::fabs(lim.alpha_inf) <= 1e-8);
  CHECK(lim.alpha0_r == doctest::Approx(20.0).epsilon(1e-8));
  CHECK(!lim.m_inf_diverges);
  CHECK(std::fabs(lim.alphainf_r) <= 1e-8);

  // sublinear power: f = sqrt(t) has alpha0 = +inf, alpha_inf = 0
  NonlinearityConstants k;
  k.c = 1.0;
  auto root = Nonlinearity::from_function(
      "sqrt(t)", [](double, double, double t) { return std::sqrt(std::max(t, 0.0)); }, 1,
      Regime::sublinear, k, {}, true);
  auto rlim = model::alpha_limits(root, identity, 0.0, 0.5);
  CHECK(rlim.alpha0_infinite);
  CHECK(std::isinf(rlim.alpha0));
  CHECK(std::fabs(rlim.alpha_inf) <= 1e-3);

  // divergent m(inf, r): alpha_inf^r = 0 regardless of f
  auto poly = CoefficientModel::polynomial_family(1.0);
  auto plim = model::alpha_limits(f, poly, 2.0, 0.5);
  CHECK(plim.m_inf_diverges);
  CHECK(plim.alphainf_r == 0.0);
  CHECK(plim.alpha0_r == doctest::Approx(20.0).epsilon(1e-8));  // m(0,r) = 1

  auto exp_fam = CoefficientModel::exponential_family();
  CHECK(exp_fam.m_at_infinity(1.0).diverges);
  CHECK(!identity.m_at_infinity(3.0).diverges);
}

TEST_CASE("hypothesis checks on the reference families") {
  auto poly = CoefficientModel::polynomial_family(1.0);
  auto rep = model::check_hypotheses(poly, nullptr, nullptr, 2000);
  CHECK(rep.passed("m0"));
  CHECK(rep.passed("m1"));
  CHECK(rep.passed("m2"));
  CHECK(rep.passed("m3"));

  // constant in t: (m2) fails with a witness
  auto linear_r = CoefficientModel::from_function(
      "1+r", [](double, double r) { return 1.0 + r; }, 1.0,
      [](double t, double r) { return (1.0 + r) * t; });
  auto rep2 = model::check_hypotheses(linear_r, nullptr, nullptr, 2000);
  CHECK(rep2.passed("m0"));
  CHECK(rep2.passed("m1"));
  CHECK(rep2.failed("m2"));
  CHECK(!rep2.find("m2")->witness.empty());

  // declared lower bound too big: (m1) fails
  auto wrong = CoefficientModel::from_function(
      "t^2+1", [](double t, double) { return t * t + 1.0; }, 2.0);
  CHECK(model::check_hypotheses(wrong, nullptr, nullptr, 2000).failed("m1"));

  // m(0,r) above the declared minimum: (m3) fails
  auto shifted = CoefficientModel::from_function(
      "t^2+r+1", [](double t, double r) { return t * t + r + 1.0; }, 1.0);
  auto rep3 = model::check_hypotheses(shifted, nullptr, nullptr, 2000);
  CHECK(rep3.passed("m1"));
  CHECK(rep3.failed("m3"));
}

TEST_CASE("hypothesis checks for the lipschitz regime") {
  auto identity = CoefficientModel::constant(1.0);
  NonlinearityConstants k;
  k.theta = 1.0;
  k.delta = 0.5;
  k.nu = 1.0;
  auto f = Nonlinearity::from_function(
      "1+sin(t)", [](double, double, double t) { return 1.0 + std::sin(t); }, 1, Regime::lipschitz,
      k, [](double, double) { return 2.0; });
  auto rep = model::check_hypotheses(identity, &f, nullptr, 4000);
  CHECK(rep.passed("f7"));  // f(x,0) = 1 != 0
  CHECK(rep.passed("f8"));  // |f| <= 2 <= mu + nu |t|^delta
  CHECK(rep.passed("f9"));  // |sin a - sin b| <= |a - b|

  // theta declared too small: (f9) must fail
  NonlinearityConstants k2 = k;
  k2.theta = 0.5;
  auto f2 = Nonlinearity::from_function(
      "1+sin(t)", [](double, double, double t) { return 1.0 + std::sin(t); }, 1, Regime::lipschitz,
      k2, [](double, double) { return 2.0; });
  CHECK(model::check_hypotheses(identity, &f2, nullptr, 4000).failed("f9"));
}

TEST_CASE("hypothesis checks for the sublinear regime") {
  auto poly = CoefficientModel::polynomial_family(1.0);
  auto f = sublinear_lambda(20.0, 5.0);  // 20t/(1+t) <= 5(1+t) for all t >= 0
  mesh::Mesh dom = mesh::Mesh::interval(0.0, 1.0, 8);
  auto rep = model::check_hypotheses(poly, &f, &dom, 4000);
  CHECK(rep.passed("f1"));
  CHECK(rep.passed("f2"));
  CHECK(rep.passed("f4"));
  CHECK(rep.passed("f6"));

  // c declared too small: (f1) fails
  auto tight = sublinear_lambda(20.0, 1.0);
  CHECK(model::check_hypotheses(poly, &tight, &dom, 4000).failed("f1"));

  // superlinear growth breaks the decreasing-ratio condition (f4)
  NonlinearityConstants k;
  k.c = 100.0;
  auto super = Nonlinearity::from_function(
      "t^2", [](double, double, double t) { return t * t; }, 1, Regime::sublinear, k, {}, true);
  CHECK(model::check_hypotheses(poly, &super, &dom, 4000).failed("f4"));
}

TEST_CASE("lemma property suite on the reference families") {
  model::SampleRanges wide{5.0, 5.0};
  for (double p : {1.0, 2.0}) {
    auto fam = CoefficientModel::polynomial_family(p);
    auto res = model::verify_lemma_properties(fam, 2000, wide);
    for (const auto& c : res.checks) {
      INFO(c.name, " worst=", c.worst);
      CHECK(c.pass);
    }
  }
  model::SampleRanges narrow{3.0, 2.0};
  auto res = model::verify_lemma_properties(CoefficientModel::exponential_family(), 500, narrow);
  for (const auto& c : res.checks) {
    INFO(c.name, " worst=", c.worst);
    CHECK(c.pass);
  }

  // constant declared above the true bound: the Lipschitz-inverse slack fails
  auto wrong = CoefficientModel::from_function(
      "0.25*t^2+0.5", [](double t, double) { return 0.25 * t * t + 0.5; }, 1.0);
  auto bad = model::verify_lemma_properties(wrong, 500, wide);
  CHECK(!bad.all_pass);
}

TEST_CASE("claim inheritance: h_r keeps the growth and ratio conditions") {
  auto poly = CoefficientModel::polynomial_family(1.0);
  auto f = sublinear_lambda(20.0, 5.0);
  for (double r : {0.0, 1.5}) {
    PrimitiveMap pm(poly, r);
    model::ReducedNonlinearity hr(f, pm);
    CHECK(hr.growth_constant() == doctest::Approx(5.0));
    double prev_ratio = std::numeric_limits<double>::infinity();
    for (int i = 1; i <= 64; ++i) {
      const double s = 8.0 * i / 64.0;
      const double v = hr(0.5, 0.0, s);
      CHECK(std::fabs(v) <= hr.growth_constant() * (1.0 + std::fabs(s)) + 1e-9);
      const double ratio = v / s;
      CHECK(ratio <= prev_ratio + 1e-9);
      prev_ratio = ratio;
    }
    // negative arguments use the constant extension f(x,0) = 0
    CHECK(hr(0.5, 0.0, -1.0) == 0.0);
  }
}

TEST_CASE("reduced nonlinearity inherits theta / m_lower") {
  auto two = CoefficientModel::constant(2.0);
  NonlinearityConstants k;
  k.theta = 1.0;
  auto f = Nonlinearity::from_function(
      "1+sin(t)", [](double, double, double t) { return 1.0 + std::sin(t); }, 1, Regime::lipschitz,
      k);
  PrimitiveMap pm(two, 0.0);
  model::ReducedNonlinearity hr(f, pm);
  CHECK(hr.lipschitz_bound() == doctest::Approx(0.5));
  for (int i = 0; i < 64; ++i) {
    const double s1 = -6.0 + 12.0 * model::halton(i + 1, 2);
    const double s2 = -6.0 + 12.0 * model::halton(i + 1, 3);
    CHECK(std::fabs(hr(0.3, 0.0, s1) - hr(0.3, 0.0, s2)) <=
          hr.lipschitz_bound() * std::fabs(s1 - s2) + 1e-9);
  }
}

TEST_CASE("concurrent primitive evaluation matches serial execution") {
  auto exp_fam = CoefficientModel::exponential_family();
  PrimitiveMap serial(exp_fam, 1.0);
  std::vector<double> args, expected;
  for (int i = 1; i <= 64; ++i) {
    args.push_back(3.0 * (2.0 * model::halton(i, 2) - 1.0));
    expected.push_back(serial.eval(args.back()));
  }
  PrimitiveMap shared(exp_fam, 1.0);
  std::vector<double> got(args.size());
  std::vector<std::thread> pool;
  for (int t = 0; t < 4; ++t) {
    pool.emplace_back([&, t]() {
      for (std::size_t i = static_cast<std::size_t>(t); i < args.size(); i += 4) {
        got[i] = shared.eval(args[i]);
      }
    });
  }
  for (auto& th : pool) th.join();
  for (std::size_t i = 0; i < args.size(); ++i) CHECK(got[i] == expected[i]);
}

TEST_CASE("inverse consistency over random draws per family") {
  std::mt19937 rng(2024);
  std::uniform_real_distribution<double> t_draw(-4.0, 4.0);
  std::uniform_real_distribution<double> r_draw(0.0, 4.0);
  auto fam = CoefficientModel::from_function(
      "t^2*(r^2+1)+1", [](double t, double r) { return t * t * (r * r + 1.0) + 1.0; }, 1.0);
  for (int i = 0; i < 400; ++i) {
    const double r = r_draw(rng);
    PrimitiveMap pm(fam, r, 1e-10);
    const double s = pm.eval(t_draw(rng));
    CHECK(std::fabs(pm.eval(pm.invert(s)) - s) <= 1e-9);
  }
}
