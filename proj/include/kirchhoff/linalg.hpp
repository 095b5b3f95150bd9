// Sparse symmetric operators on interior grid nodes, an unpreconditioned
// conjugate-gradient solver and a smallest-eigenvalue estimator. Everything
// is deterministic: fixed summation order, no seeds, no parallel reductions.
#pragma once

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "kirchhoff/mesh.hpp"

namespace kirchhoff::linalg {

class SolverError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Compressed sparse row, symmetric by construction.
struct SparseOperator {
  int n = 0;
  std::vector<int> row_ptr;
  std::vector<int> cols;
  std::vector<double> vals;
  bool maybe_indefinite = false;  // set when a potential term can flip signs

  void apply(std::span<const double> x, std::span<double> y) const;
  double quadratic_form(std::span<const double> x) const;  // <Ax, x>
  double entry(int i, int j) const;                        // 0 if absent
};

// 3-point (1D) / 5-point (2D) Dirichlet Laplacian on interior nodes,
// scaled by 1/h^2 per axis.
SparseOperator assemble_laplacian(const mesh::Mesh& m);

// Laplacian minus the diagonal of nodal alpha values: -Lap - diag(alpha)
// in operator form, i.e. A - diag(alpha) with A the assembled Laplacian.
SparseOperator assemble_schrodinger(const mesh::Mesh& m, const mesh::Field& alpha);

struct CgReport {
  std::vector<double> x;
  int iterations = 0;
  double rel_residual = 0.0;  // ||Ax-b|| / ||b||, recomputed from scratch
};

// Plain CG for SPD systems. Throws SolverError on negative curvature
// (operator not SPD) or when maxit is exhausted before reaching tol.
CgReport cg_solve(const SparseOperator& A, std::span<const double> b, double tol, int maxit);

struct EigenReport {
  double lambda = 0.0;
  std::vector<double> vector;  // unit 2-norm, sign fixed (largest entry > 0)
  int iterations = 0;
};

// Smallest eigenvalue by shifted inverse power iteration: the shift is the
// Gershgorin lower bound minus one, so A - shift*I is SPD and CG applies.
// The start vector is the normalized all-ones vector. Stops when successive
// Rayleigh quotients agree within tol (relative to max(1, |lambda|)).
EigenReport smallest_eigenvalue(const SparseOperator& A, double tol, int maxit = 400,
                                double cg_tol = 1e-11, int cg_maxit = 200000);

double gershgorin_lower_bound(const SparseOperator& A);

// Fixed-order vector helpers shared by the solvers and the tests.
double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);

}  // namespace kirchhoff::linalg
