#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "kirchhoff/linalg.hpp"
#include "kirchhoff/mesh.hpp"

using namespace kirchhoff;
using mesh::Field;
using mesh::Mesh;

namespace {
constexpr double kPi = std::numbers::pi;

Field sine_1d(int n) {
  return mesh::sample(Mesh::interval(0.0, 1.0, n),
                      [](double x, double) { return std::sin(kPi * x); });
}
}  // namespace

TEST_CASE("mesh geometry") {
  Mesh m = Mesh::interval(0.0, 1.0, 3);
  CHECK(m.hx() == doctest::Approx(0.25));
  CHECK(m.node_x(0) == doctest::Approx(0.25));
  CHECK(m.node_x(2) == doctest::Approx(0.75));
  CHECK(m.interior_count() == 3);

  Mesh r = Mesh::rectangle(0.0, 1.0, 0.0, 2.0, 3, 7);
  CHECK(r.hx() == doctest::Approx(0.25));
  CHECK(r.hy() == doctest::Approx(0.25));
  CHECK(r.interior_count() == 21);
  CHECK(r.node_x(4) == doctest::Approx(0.5));   // idx 4 -> (i=1, j=1)
  CHECK(r.node_y(4) == doctest::Approx(0.5));
  CHECK(r.cell_measure() == doctest::Approx(0.0625));

  CHECK_THROWS_AS(Mesh::interval(0.0, 1.0, 1), mesh::MeshError);
  CHECK_THROWS_AS(Mesh::interval(1.0, 0.0, 8), mesh::MeshError);
}

TEST_CASE("gradient energy: analytic oracles") {
  // zero field
  CHECK(mesh::gradient_energy(Field(Mesh::interval(0, 1, 16))) == 0.0);

  // int_0^1 (pi cos(pi x))^2 dx = pi^2/2
  double e1 = mesh::gradient_energy(sine_1d(512));
  CHECK(e1 == doctest::Approx(kPi * kPi / 2).epsilon(0.01));

  // 2D separable: int |grad sin(pi x) sin(pi y)|^2 = pi^2/2
  Mesh sq = Mesh::rectangle(0, 1, 0, 1, 128, 128);
  Field uv = mesh::sample(sq, [](double x, double y) { return std::sin(kPi * x) * std::sin(kPi * y); });
  CHECK(mesh::gradient_energy(uv) == doctest::Approx(kPi * kPi / 2).epsilon(0.01));
}

TEST_CASE("norms") {
  CHECK(mesh::l2_norm(Field(Mesh::interval(0, 1, 8))) == 0.0);
  CHECK(mesh::l2_norm(sine_1d(512)) == doctest::Approx(std::sqrt(0.5)).epsilon(1e-3));
  Field ones(Mesh::interval(0, 1, 33));
  for (int i = 0; i < ones.size(); ++i) ones[i] = 1.0;
  CHECK(mesh::linf_norm(ones) == 1.0);
  CHECK(mesh::linf_norm(sine_1d(64)) <= 1.0);
}

TEST_CASE("apply_pointwise") {
  Field v = sine_1d(64);
  Field same = mesh::apply_pointwise(v, [](double t) { return t; });
  for (int i = 0; i < v.size(); ++i) CHECK(same[i] == v[i]);

  // per-node root finding oracle: u solves M(u) = v with M(t) = t^3/3 + t
  auto M = [](double t) { return t * t * t / 3.0 + t; };
  Field u = mesh::apply_pointwise(v, [&](double s) {
    double lo = 0.0, hi = s;
    for (int it = 0; it < 200; ++it) {
      double mid = 0.5 * (lo + hi);
      (M(mid) < s ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
  });
  for (int i = 0; i < v.size(); ++i) {
    CHECK(std::fabs(M(u[i]) - v[i]) <= 1e-8);
  }

  CHECK_THROWS_AS(mesh::apply_pointwise(v, [](double) { return std::nan(""); }), mesh::MeshError);
}

TEST_CASE("energy is the operator quadratic form") {
  std::mt19937 rng(91);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  for (const Mesh& m : {Mesh::interval(0, 2, 37), Mesh::rectangle(0, 1, 0, 1.5, 9, 13)}) {
    auto A = linalg::assemble_laplacian(m);
    for (int trial = 0; trial < 5; ++trial) {
      Field u(m);
      for (int i = 0; i < u.size(); ++i) u[i] = dist(rng);
      double by_edges = mesh::gradient_energy(u);
      double by_form = m.cell_measure() * A.quadratic_form(u.values());
      CHECK(by_edges == doctest::Approx(by_form).epsilon(1e-12));
    }
  }
}

TEST_CASE("degree-2 homogeneity and discrete Poincare") {
  Mesh m = Mesh::interval(0, 1, 64);
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  Field u(m);
  for (int i = 0; i < u.size(); ++i) u[i] = dist(rng);

  double e = mesh::gradient_energy(u);
  double l = mesh::l2_norm(u);
  CHECK(mesh::gradient_energy(mesh::apply_pointwise(u, [](double t) { return 3.0 * t; })) ==
        doctest::Approx(9.0 * e).epsilon(1e-13));
  CHECK(mesh::l2_norm(mesh::apply_pointwise(u, [](double t) { return 3.0 * t; })) ==
        doctest::Approx(3.0 * l).epsilon(1e-13));

  auto eig = linalg::smallest_eigenvalue(linalg::assemble_laplacian(m), 1e-10);
  CHECK(e >= eig.lambda * l * l * (1.0 - 1e-9));
}

TEST_CASE("refinement consistency: energy error decreases at order h^2") {
  double exact = kPi * kPi / 2;
  double e_n = std::fabs(mesh::gradient_energy(sine_1d(64)) - exact);
  double e_2n = std::fabs(mesh::gradient_energy(sine_1d(128)) - exact);
  double order = std::log2(e_n / e_2n);
  CHECK(order == doctest::Approx(2.0).epsilon(0.1));
}

TEST_CASE("interpolated self-comparison handles non-nested grids") {
  Field coarse = sine_1d(256);
  Field fine = sine_1d(1024);
  CHECK(mesh::linf_gap_interpolated(coarse, fine) <= 2e-5);

  Mesh sq_c = Mesh::rectangle(0, 1, 0, 1, 16, 16);
  Mesh sq_f = Mesh::rectangle(0, 1, 0, 1, 49, 49);
  auto fn = [](double x, double y) { return std::sin(kPi * x) * std::sin(kPi * y); };
  CHECK(mesh::linf_gap_interpolated(mesh::sample(sq_c, fn), mesh::sample(sq_f, fn)) <= 2e-3);
}

TEST_CASE("csv serialization") {
  Mesh m = Mesh::interval(0, 1, 2);
  Field f(m);
  f[0] = 0.5;
  f[1] = -1.25;
  std::ostringstream os;
  mesh::write_csv(f, os);
  CHECK(os.str() ==
        "x,value\n"
        "0.33333333333333331,0.5\n"
        "0.66666666666666663,-1.25\n");
}
