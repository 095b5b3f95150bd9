#include "kirchhoff/localsolve.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace kirchhoff::localsolve {

namespace {

mesh::Field reduced_rhs(const mesh::Mesh& m, const model::ReducedNonlinearity& hr,
                        const mesh::Field& v) {
  mesh::Field rhs(m);
  for (int i = 0; i < rhs.size(); ++i) {
    rhs[i] = hr(m.node_x(i), m.node_y(i), v[i]);
  }
  return rhs;
}

double relative_residual(const linalg::SparseOperator& A, const mesh::Field& v,
                         const mesh::Field& rhs) {
  std::vector<double> Av(static_cast<std::size_t>(v.size()));
  A.apply(v.values(), Av);
  double num = 0.0, den = 0.0;
  for (int i = 0; i < v.size(); ++i) {
    const double d = Av[static_cast<std::size_t>(i)] - rhs[i];
    num += d * d;
    den += rhs[i] * rhs[i];
  }
  return std::sqrt(num) / std::max(std::sqrt(den), 1e-300);
}

}  // namespace

double weak_residual(const mesh::Mesh& m, const mesh::Field& v, const mesh::Field& rhs) {
  return relative_residual(linalg::assemble_laplacian(m), v, rhs);
}

SolveReport solve_linear(const mesh::Mesh& m, const linalg::SparseOperator& A,
                         const mesh::Field& source, const Options& opt) {
  auto cg = linalg::cg_solve(A, source.values(), opt.cg_tol, opt.cg_maxit);
  SolveReport rep{mesh::Field(m, std::move(cg.x)), cg.iterations, cg.rel_residual, {}, {}, true, 0.0};
  rep.solution_linf = mesh::linf_norm(rep.solution);
  rep.nontrivial = rep.solution_linf > 1e-14;
  return rep;
}

SolveReport solve_semilinear_contraction(const mesh::Mesh& m, const linalg::SparseOperator& A,
                                         double lambda1, const model::ReducedNonlinearity& hr,
                                         const Options& opt, const mesh::Field* start) {
  const double bound = hr.lipschitz_bound();
  if (!(bound < lambda1)) {
    throw LocalSolveError("contraction condition violated: theta/m_lower = " +
                          std::to_string(bound) + " >= lambda1 = " + std::to_string(lambda1));
  }

  SolveReport rep{start ? *start : mesh::Field(m), 0, 0.0, {}, {}, true, 0.0};
  double prev_step = -1.0;
  for (rep.iterations = 1; rep.iterations <= opt.maxit; ++rep.iterations) {
    mesh::Field rhs = reduced_rhs(m, hr, rep.solution);
    auto cg = linalg::cg_solve(A, rhs.values(), opt.cg_tol, opt.cg_maxit);
    mesh::Field next(m, std::move(cg.x));
    mesh::Field diff(m);
    for (int i = 0; i < diff.size(); ++i) diff[i] = next[i] - rep.solution[i];
    const double step = std::sqrt(mesh::gradient_energy(diff));
    if (prev_step > 0.0) rep.contraction_factors.push_back(step / prev_step);
    prev_step = step;
    rep.solution = std::move(next);
    if (step <= opt.tol) {
      rep.residual = relative_residual(A, rep.solution, reduced_rhs(m, hr, rep.solution));
      rep.solution_linf = mesh::linf_norm(rep.solution);
      rep.nontrivial = rep.solution_linf > std::max(10.0 * opt.tol, 1e-12);
      return rep;
    }
  }
  throw LocalSolveError("picard iteration did not converge within " + std::to_string(opt.maxit) +
                        " steps (last energy-norm step " + std::to_string(prev_step) + ")");
}

SolveReport solve_semilinear_monotone(const mesh::Mesh& m, const linalg::SparseOperator& A,
                                      const linalg::EigenReport& eig,
                                      const model::ReducedNonlinearity& hr, const Options& opt) {
  if (!hr.source().monotone_declared()) {
    throw LocalSolveError("monotone iteration requires the nondecreasing nonlinearity (f6)");
  }
  const int n = m.interior_count();
  const double growth_c = hr.growth_constant();
  const double lambda1 = eig.lambda;
  if (!(growth_c < lambda1)) {
    throw LocalSolveError("supersolution construction failed: growth constant c = " +
                          std::to_string(growth_c) + " must lie below lambda1 = " +
                          std::to_string(lambda1) + "; refine the model or the declared c");
  }

  // supersolution: (A - cI) w = c, so A w = c (1 + w) dominates h_r(., w)
  mesh::Field super(m);
  if (growth_c > 0.0) {
    linalg::SparseOperator B = A;
    for (int i = 0; i < n; ++i) {
      for (int k = B.row_ptr[i]; k < B.row_ptr[i + 1]; ++k) {
        if (B.cols[static_cast<std::size_t>(k)] == i) {
          B.vals[static_cast<std::size_t>(k)] -= growth_c;
          break;
        }
      }
    }
    std::vector<double> c_vec(static_cast<std::size_t>(n), growth_c);
    auto cg = linalg::cg_solve(B, c_vec, opt.cg_tol, opt.cg_maxit);
    super = mesh::Field(m, std::move(cg.x));
    for (int i = 0; i < n; ++i) {
      if (super[i] < -1e-12) {
        throw LocalSolveError("supersolution came out negative at node " + std::to_string(i));
      }
      super[i] = std::max(super[i], 0.0);
    }
  }

  // subsolution: eps * phi1 with eps halved until A(eps phi1) <= h_r(., eps phi1)
  // on every node; without such an eps only the trivial lower bracket remains
  mesh::Field phi(m);
  {
    double scale = 0.0;
    for (int i = 0; i < n; ++i) scale = std::max(scale, std::fabs(eig.vector[static_cast<std::size_t>(i)]));
    for (int i = 0; i < n; ++i) phi[i] = eig.vector[static_cast<std::size_t>(i)] / scale;
  }
  std::vector<double> a_phi(static_cast<std::size_t>(n));
  A.apply(phi.values(), a_phi);

  double eps = 0.0;
  bool certified = false;
  {
    double ratio = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) {
      if (phi[i] > 0.0) ratio = std::min(ratio, super[i] / phi[i]);
    }
    // a subsolution below this floor is indistinguishable from the trivial
    // one at solver accuracy and certifies nothing
    const double trial_floor = 1e-8 * std::max(mesh::linf_norm(super), 1.0);
    double trial = 0.5 * ratio;
    for (int halvings = 0; halvings < 60 && trial > trial_floor; ++halvings, trial *= 0.5) {
      bool ok = true;
      for (int i = 0; i < n && ok; ++i) {
        const double lhs = trial * a_phi[static_cast<std::size_t>(i)];
        const double rhs = hr(m.node_x(i), m.node_y(i), trial * phi[i]);
        ok = lhs <= rhs + 1e-13 * std::max(1.0, std::fabs(rhs));
      }
      if (ok) {
        eps = trial;
        certified = true;
        break;
      }
    }
  }
  mesh::Field sub(m);
  for (int i = 0; i < n; ++i) sub[i] = eps * phi[i];

  SolveReport rep{super, 0, 0.0, {}, {}, certified, 0.0};
  const double slack = std::max(1e-12, 10.0 * opt.cg_tol) * std::max(1.0, mesh::linf_norm(super));
  for (rep.iterations = 1; rep.iterations <= opt.maxit; ++rep.iterations) {
    mesh::Field rhs = reduced_rhs(m, hr, rep.solution);
    auto cg = linalg::cg_solve(A, rhs.values(), opt.cg_tol, opt.cg_maxit);
    mesh::Field next(m, std::move(cg.x));
    double step = 0.0, gap = 0.0;
    for (int i = 0; i < n; ++i) {
      if (next[i] > rep.solution[i] + slack) {
        throw LocalSolveError("monotone iteration failed: iterate increased at node " +
                              std::to_string(i) + " ((f6) violated on the sampled range)");
      }
      if (next[i] < sub[i] - slack) {
        throw LocalSolveError("monotone iteration failed: iterate fell below the subsolution "
                              "at node " + std::to_string(i) + " (hypothesis failure witness)");
      }
      step = std::max(step, std::fabs(next[i] - rep.solution[i]));
      gap = std::max(gap, next[i] - sub[i]);
    }
    rep.bracket_gaps.push_back(gap);
    rep.solution = std::move(next);
    if (step <= opt.tol) {
      rep.residual = relative_residual(A, rep.solution, reduced_rhs(m, hr, rep.solution));
      rep.solution_linf = mesh::linf_norm(rep.solution);
      if (!certified) {
        rep.nontrivial = rep.solution_linf > std::max(10.0 * opt.tol, 1e-10);
      }
      return rep;
    }
  }
  throw LocalSolveError("monotone iteration did not converge within " + std::to_string(opt.maxit) +
                        " steps");
}

}  // namespace kirchhoff::localsolve
