// Solvers for the reduced local problems on a fixed grid: the linear
// problem, the semilinear problem by Banach-Picard iteration in the
// Lipschitz regime, and by monotone sub/supersolution iteration in the
// sublinear regime.
#pragma once

#include <optional>
#include <stdexcept>
#include <vector>

#include "kirchhoff/linalg.hpp"
#include "kirchhoff/mesh.hpp"
#include "kirchhoff/model.hpp"

namespace kirchhoff::localsolve {

class LocalSolveError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct Options {
  double cg_tol = 5e-11;   // inner linear solves
  int cg_maxit = 200000;
  double tol = 1e-10;      // outer iteration stopping tolerance
  int maxit = 500;
};

struct SolveReport {
  mesh::Field solution;
  int iterations = 0;
  // ||A v - rhs(v)||_2 / ||rhs(v)||_2, recomputed after the final iterate
  double residual = 0.0;
  // lipschitz regime: per-step ratios of successive energy-norm differences
  std::vector<double> contraction_factors;
  // sublinear regime: per-step sup-norm distance of the iterate from the
  // subsolution (the lower bracket)
  std::vector<double> bracket_gaps;
  bool nontrivial = true;  // false when the iteration collapsed to zero
  double solution_linf = 0.0;
};

// v = A^{-1} f. The source field is independent of the unknown.
SolveReport solve_linear(const mesh::Mesh& m, const linalg::SparseOperator& A,
                         const mesh::Field& source, const Options& opt);

// Picard iteration v_{k+1} = A^{-1} h_r(., v_k) from v_0 = 0 (or the given
// start). Requires the contraction condition theta/m_lower < lambda1 of the
// discrete Laplacian; refuses with the measured constants otherwise.
SolveReport solve_semilinear_contraction(const mesh::Mesh& m, const linalg::SparseOperator& A,
                                         double lambda1, const model::ReducedNonlinearity& hr,
                                         const Options& opt,
                                         const mesh::Field* start = nullptr);

// Monotone iteration from a supersolution built by solving
// (A - c I) w = c (needs c < lambda1), decreasing toward the solution and
// bounded below by a subsolution eps * phi1 when one can be certified.
// Requires the nondecreasing nonlinearity declared via (f6).
SolveReport solve_semilinear_monotone(const mesh::Mesh& m, const linalg::SparseOperator& A,
                                      const linalg::EigenReport& eig,
                                      const model::ReducedNonlinearity& hr, const Options& opt);

// ||A v - rhs||_2 / max(||rhs||_2, tiny) with a freshly assembled operator.
double weak_residual(const mesh::Mesh& m, const mesh::Field& v, const mesh::Field& rhs);

}  // namespace kirchhoff::localsolve
