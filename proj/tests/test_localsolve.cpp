#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "kirchhoff/localsolve.hpp"

using namespace kirchhoff;
using mesh::Field;
using mesh::Mesh;
using model::CoefficientModel;
using model::Nonlinearity;
using model::NonlinearityConstants;
using model::PrimitiveMap;
using model::Regime;

namespace {
constexpr double kPi = std::numbers::pi;

struct Setup {
  Mesh m;
  linalg::SparseOperator A;
  explicit Setup(int n) : m(Mesh::interval(0, 1, n)), A(linalg::assemble_laplacian(m)) {}
};

}  // namespace

TEST_CASE("linear solve against closed forms") {
  Setup s(255);
  localsolve::Options opt;

  // -v'' = pi^2 sin(pi x)  =>  v = sin(pi x)
  Field f1 = mesh::sample(s.m, [](double x, double) { return kPi * kPi * std::sin(kPi * x); });
  auto r1 = localsolve::solve_linear(s.m, s.A, f1, opt);
  double err = 0.0;
  for (int i = 0; i < r1.solution.size(); ++i) {
    err = std::max(err, std::fabs(r1.solution[i] - std::sin(kPi * s.m.node_x(i))));
  }
  CHECK(err <= 4.0 * s.m.hx() * s.m.hx());
  CHECK(r1.residual <= opt.cg_tol);

  // f = 0 => v = 0
  auto r0 = localsolve::solve_linear(s.m, s.A, Field(s.m), opt);
  CHECK(mesh::linf_norm(r0.solution) == 0.0);
  CHECK(!r0.nontrivial);

  // -v'' = 1  =>  v = x(1-x)/2
  Field ones(s.m);
  for (int i = 0; i < ones.size(); ++i) ones[i] = 1.0;
  auto r2 = localsolve::solve_linear(s.m, s.A, ones, opt);
  for (int i = 0; i < r2.solution.size(); ++i) {
    const double x = s.m.node_x(i);
    CHECK(r2.solution[i] == doctest::Approx(x * (1 - x) / 2).epsilon(1e-8));
  }

  // energy identity <Av, v> = <f, v>
  const double lhs = s.A.quadratic_form(r1.solution.values());
  const double rhs = linalg::dot(f1.values(), r1.solution.values());
  CHECK(lhs == doctest::Approx(rhs).epsilon(1e-10));

  // weak-form residual recomputed from a fresh assembly matches the report
  CHECK(std::fabs(localsolve::weak_residual(s.m, r1.solution, f1) - r1.residual) <= 1e-12);
}

TEST_CASE("picard contraction on f = 1 + sin(t)") {
  Setup s(255);
  auto eig = linalg::smallest_eigenvalue(s.A, 1e-12);
  auto identity = CoefficientModel::constant(1.0);
  PrimitiveMap pm(identity, 0.0);
  NonlinearityConstants k;
  k.theta = 1.0;
  auto f = Nonlinearity::from_function(
      "1+sin(t)", [](double, double, double t) { return 1.0 + std::sin(t); }, 1, Regime::lipschitz,
      k);
  model::ReducedNonlinearity hr(f, pm);

  localsolve::Options opt;
  opt.tol = 1e-9;
  opt.cg_tol = 1e-11;
  auto rep = localsolve::solve_semilinear_contraction(s.m, s.A, eig.lambda, hr, opt);
  CHECK(rep.nontrivial);
  CHECK(rep.residual <= 1e-9);
  REQUIRE(rep.contraction_factors.size() >= 4);
  for (std::size_t i = 3; i < rep.contraction_factors.size(); ++i) {
    CHECK(rep.contraction_factors[i] <= 1.0 / (kPi * kPi) + 0.01);
  }

  // Banach uniqueness: a random restart lands on the same solution
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> dist(-2.0, 2.0);
  Field start(s.m);
  for (int i = 0; i < start.size(); ++i) start[i] = dist(rng);
  auto rep2 = localsolve::solve_semilinear_contraction(s.m, s.A, eig.lambda, hr, opt, &start);
  double gap = 0.0;
  for (int i = 0; i < start.size(); ++i) {
    gap = std::max(gap, std::fabs(rep2.solution[i] - rep.solution[i]));
  }
  CHECK(gap <= 10.0 * opt.tol);
}

TEST_CASE("picard refuses when the contraction condition fails") {
  Setup s(63);
  auto eig = linalg::smallest_eigenvalue(s.A, 1e-12);
  auto identity = CoefficientModel::constant(1.0);
  PrimitiveMap pm(identity, 0.0);
  NonlinearityConstants k;
  k.theta = 10.0;  // above pi^2
  auto f = Nonlinearity::from_function(
      "10*sin(t)", [](double, double, double t) { return 10.0 * std::sin(t); }, 1,
      Regime::lipschitz, k);
  model::ReducedNonlinearity hr(f, pm);
  CHECK_THROWS_AS(
      localsolve::solve_semilinear_contraction(s.m, s.A, eig.lambda, hr, localsolve::Options{}),
      localsolve::LocalSolveError);
}

TEST_CASE("picard on a constant source converges immediately") {
  Setup s(63);
  auto eig = linalg::smallest_eigenvalue(s.A, 1e-12);
  auto identity = CoefficientModel::constant(1.0);
  PrimitiveMap pm(identity, 0.0);
  NonlinearityConstants k;
  k.theta = 0.0;
  auto f = Nonlinearity::from_function(
      "3", [](double, double, double) { return 3.0; }, 1, Regime::lipschitz, k);
  model::ReducedNonlinearity hr(f, pm);
  localsolve::Options opt;
  opt.cg_tol = 1e-12;
  auto rep = localsolve::solve_semilinear_contraction(s.m, s.A, eig.lambda, hr, opt);
  CHECK(rep.iterations <= 2);
  for (int i = 0; i < rep.solution.size(); ++i) {
    const double x = s.m.node_x(i);
    CHECK(rep.solution[i] == doctest::Approx(3.0 * x * (1 - x) / 2).epsilon(1e-9));
  }
}

TEST_CASE("manufactured contraction problem recovers sin(pi x) at second order") {
  // h(x,t) = pi^2 sin(pi x) + (t - sin(pi x))/2 has Lipschitz constant 1/2
  // and the exact reduced solution v* = sin(pi x)
  auto identity = CoefficientModel::constant(1.0);
  PrimitiveMap pm(identity, 0.0);
  NonlinearityConstants k;
  k.theta = 0.5;
  auto f = Nonlinearity::from_function(
      "manufactured",
      [](double x, double, double t) {
        return kPi * kPi * std::sin(kPi * x) + 0.5 * (t - std::sin(kPi * x));
      },
      1, Regime::lipschitz, k);
  model::ReducedNonlinearity hr(f, pm);

  double errs[2];
  int idx = 0;
  for (int n : {127, 255}) {
    Setup s(n);
    auto eig = linalg::smallest_eigenvalue(s.A, 1e-12);
    localsolve::Options opt;
    opt.tol = 1e-10;
    opt.cg_tol = 1e-12;
    auto rep = localsolve::solve_semilinear_contraction(s.m, s.A, eig.lambda, hr, opt);
    double err = 0.0;
    for (int i = 0; i < rep.solution.size(); ++i) {
      err = std::max(err, std::fabs(rep.solution[i] - std::sin(kPi * s.m.node_x(i))));
    }
    errs[idx++] = err;
  }
  const double order = std::log2(errs[0] / errs[1]);
  CHECK(order == doctest::Approx(2.0).epsilon(0.1));
}

TEST_CASE("monotone iteration on the sublinear benchmark") {
  Setup s(255);
  auto eig = linalg::smallest_eigenvalue(s.A, 1e-12);
  auto identity = CoefficientModel::constant(1.0);
  PrimitiveMap pm(identity, 0.0);
  NonlinearityConstants k;
  k.c = 5.0;  // sharp (f1) constant for 20t/(1+t)
  auto f = Nonlinearity::from_function(
      "20t/(1+t)", [](double, double, double t) { return 20.0 * t / (1.0 + t); }, 1,
      Regime::sublinear, k, {}, true);
  model::ReducedNonlinearity hr(f, pm);

  localsolve::Options opt;
  opt.tol = 1e-10;
  auto rep = localsolve::solve_semilinear_monotone(s.m, s.A, eig, hr, opt);
  CHECK(rep.nontrivial);
  CHECK(rep.solution_linf > 0.1);
  for (int i = 0; i < rep.solution.size(); ++i) CHECK(rep.solution[i] >= 0.0);
  // bracket gaps shrink monotonically from the supersolution
  for (std::size_t i = 1; i < rep.bracket_gaps.size(); ++i) {
    CHECK(rep.bracket_gaps[i] <= rep.bracket_gaps[i - 1] + 1e-12);
  }
  CHECK(rep.residual <= 1e-9);

  // self-convergence against a refined grid (looser inner tolerance: the
  // attainable CG floor rises with the condition number)
  Setup fine(2047);
  auto eig_f = linalg::smallest_eigenvalue(fine.A, 1e-11, 400, 1e-10);
  localsolve::Options opt_f = opt;
  opt_f.cg_tol = 1e-10;
  auto rep_f = localsolve::solve_semilinear_monotone(fine.m, fine.A, eig_f, hr, opt_f);
  CHECK(mesh::linf_gap_interpolated(rep.solution, rep_f.solution) <= 1e-3);
}

TEST_CASE("monotone iteration collapses to zero for f = 0") {
  Setup s(63);
  auto eig = linalg::smallest_eigenvalue(s.A, 1e-12);
  auto identity = CoefficientModel::constant(1.0);
  PrimitiveMap pm(identity, 0.0);
  NonlinearityConstants k;
  k.c = 0.5;
  auto f = Nonlinearity::from_function(
      "0", [](double, double, double) { return 0.0; }, 1, Regime::sublinear, k, {}, true);
  model::ReducedNonlinearity hr(f, pm);
  auto rep = localsolve::solve_semilinear_monotone(s.m, s.A, eig, hr, localsolve::Options{});
  CHECK(!rep.nontrivial);  // "no nontrivial solution found"
  CHECK(rep.solution_linf <= 1e-9);
}

TEST_CASE("monotone iteration refuses an unusable growth constant") {
  Setup s(63);
  auto eig = linalg::smallest_eigenvalue(s.A, 1e-12);
  auto identity = CoefficientModel::constant(1.0);
  PrimitiveMap pm(identity, 0.0);
  NonlinearityConstants k;
  k.c = 20.0;  // above lambda1: the linear supersolution problem is indefinite
  auto f = Nonlinearity::from_function(
      "20t/(1+t)", [](double, double, double t) { return 20.0 * t / (1.0 + t); }, 1,
      Regime::sublinear, k, {}, true);
  model::ReducedNonlinearity hr(f, pm);
  CHECK_THROWS_WITH_AS(
      localsolve::solve_semilinear_monotone(s.m, s.A, eig, hr, localsolve::Options{}),
      doctest::Contains("supersolution"), localsolve::LocalSolveError);
}

TEST_CASE("manufactured t-independent right side converges in one sweep") {
  Setup s(127);
  auto eig = linalg::smallest_eigenvalue(s.A, 1e-12);
  auto identity = CoefficientModel::constant(1.0);
  PrimitiveMap pm(identity, 0.0);
  NonlinearityConstants k;
  k.c = 2.0;
  auto f = Nonlinearity::from_function(
      "2", [](double, double, double) { return 2.0; }, 1, Regime::sublinear, k, {}, true);
  model::ReducedNonlinearity hr(f, pm);
  localsolve::Options opt;
  opt.cg_tol = 1e-12;
  auto rep = localsolve::solve_semilinear_monotone(s.m, s.A, eig, hr, opt);
  // -v'' = 2  =>  v = x(1-x)
  for (int i = 0; i < rep.solution.size(); ++i) {
    const double x = s.m.node_x(i);
    CHECK(rep.solution[i] == doctest::Approx(x * (1 - x)).epsilon(1e-8));
  }
  CHECK(rep.iterations <= 3);
}
