#include "kirchhoff/nonlocal.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace kirchhoff::nonlocal {

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

}  // namespace

Problem::Problem(mesh::Mesh grid, model::CoefficientModel coefficient,
                 model::Nonlinearity nonlinearity)
    : grid_(grid), coefficient_(std::move(coefficient)), nonlinearity_(std::move(nonlinearity)) {}

const linalg::SparseOperator& Problem::laplacian() const {
  if (!laplacian_) laplacian_ = linalg::assemble_laplacian(grid_);
  return *laplacian_;
}

const linalg::EigenReport& Problem::eigenpair() const {
  if (!eigenpair_) {
    eigenpair_ = linalg::smallest_eigenvalue(laplacian(), eigen_tol, 400,
                                             std::max(solver.cg_tol, 1e-11), solver.cg_maxit);
  }
  return *eigenpair_;
}

const mesh::Field& Problem::source_field() const {
  if (!source_field_) {
    source_field_ = mesh::sample(
        grid_, [this](double x, double y) { return nonlinearity_(x, y, 0.0); });
  }
  return *source_field_;
}

const localsolve::SolveReport& Problem::linear_solution() const {
  if (!linear_solution_) {
    linear_solution_ = localsolve::solve_linear(grid_, laplacian(), source_field(), solver);
  }
  return *linear_solution_;
}

SEvaluation evaluate_S(const Problem& p, double r) {
  if (!(r >= 0.0)) throw NonlocalError("evaluate_S: r must be nonnegative");
  const auto regime = p.nonlinearity().regime();
  try {
    model::PrimitiveMap pm(p.coefficient(), r, p.quad_tol);
    auto local = [&]() -> localsolve::SolveReport {
      switch (regime) {
        case model::Regime::source:
          return p.linear_solution();  // v does not depend on r
        case model::Regime::lipschitz: {
          model::ReducedNonlinearity hr(p.nonlinearity(), pm);
          return localsolve::solve_semilinear_contraction(p.grid(), p.laplacian(),
                                                          p.eigenpair().lambda, hr, p.solver);
        }
        case model::Regime::sublinear: {
          model::ReducedNonlinearity hr(p.nonlinearity(), pm);
          return localsolve::solve_semilinear_monotone(p.grid(), p.laplacian(), p.eigenpair(), hr,
                                                       p.solver);
        }
        case model::Regime::growth:
        default:
          throw NonlocalError(
              "the growth regime declares only a growth bound; no constructive reduced solver "
              "exists for it (use the sublinear or lipschitz regime)");
      }
    }();
    mesh::Field v = local.solution;
    mesh::Field u = mesh::apply_pointwise(v, [&pm](double s) { return pm.invert(s); });
    const double S = mesh::gradient_energy(u);
    const double T = mesh::mixed_gradient_energy(u, v);
    const double V = mesh::gradient_energy(v);
    return SEvaluation{r, S, T, V, std::move(u), std::move(v), std::move(local)};
  } catch (const localsolve::LocalSolveError& e) {
    throw localsolve::LocalSolveError("at r = " + fmt(r) + ": " + e.what());
  } catch (const linalg::SolverError& e) {
    throw linalg::SolverError("at r = " + fmt(r) + ": " + e.what());
  }
}

namespace {

TraceSample to_sample(const SEvaluation& e) { return {e.r, e.S, e.T, e.V}; }

}  // namespace

FixedPointTrace find_fixed_point(const Problem& p, double tol) {
  FixedPointTrace trace{{}, {}, 0.0, 0.0, 0, 0.0, mesh::Field(p.grid()), mesh::Field(p.grid())};
  const double mhat2 = p.coefficient().lower_bound() * p.coefficient().lower_bound();

  auto eval = [&](double r) {
    SEvaluation e = evaluate_S(p, r);
    trace.samples.push_back(to_sample(e));
    trace.sup_V = std::max(trace.sup_V, e.V);
    ++trace.evaluations;
    return e;
  };

  SEvaluation e0 = eval(0.0);
  if (e0.S <= tol) {
    throw TrivialProblemError("S(0) = " + fmt(e0.S) +
                              " is at tolerance: the problem has no nontrivial source");
  }

  // upper bracket: start at V(0)/m_lower^2 + 1 and expand geometrically
  double radius = e0.V / mhat2 + 1.0;
  SEvaluation er = eval(radius);
  int expansions = 0;
  while (er.S >= radius && expansions < 40) {
    radius = std::max(2.0 * radius, trace.sup_V / mhat2 + 1.0);
    er = eval(radius);
    ++expansions;
  }
  if (er.S >= radius) {
    std::vector<double> vs;
    for (const auto& s : trace.samples) vs.push_back(s.V);
    throw BracketError("no upper bracket with S(R) < R found within 40 doublings (V keeps "
                       "growing; the boundedness premise looks violated)",
                       std::move(vs));
  }

  // coarse scan isolating the leftmost sign change of g(r) = S(r) - r
  const int scan = 16;
  double a = 0.0, b = radius;
  double ga = e0.S;  // g(0) = S(0) - 0 > 0
  SEvaluation right_eval = er;
  for (int i = 1; i <= scan; ++i) {
    const double ri = radius * static_cast<double>(i) / scan;
    SEvaluation ei = i == scan ? er : eval(ri);
    const double gi = ei.S - ri;
    if (gi <= 0.0) {
      b = ri;
      right_eval = ei;
      break;
    }
    a = ri;
    ga = gi;
  }
  (void)ga;

  // bisection with the invariant g(a) > 0 >= g(b)
  trace.bracket_history.push_back({a, b});
  SEvaluation final_eval = right_eval;
  double g_final = right_eval.S - b;
  trace.r_star = b;
  bool converged = std::fabs(g_final) <= tol;
  for (int iter = 0; iter < 240 && !converged; ++iter) {
    const double mid = 0.5 * (a + b);
    SEvaluation em = eval(mid);
    const double gm = em.S - mid;
    if (gm > 0.0) {
      a = mid;
    } else {
      b = mid;
    }
    trace.bracket_history.push_back({a, b});
    if (std::fabs(gm) <= tol) {
      final_eval = em;
      g_final = gm;
      trace.r_star = mid;
      converged = true;
    }
  }
  if (!converged) {
    throw NonlocalError("fixed-point bisection did not reach |S(r)-r| <= " + fmt(tol) +
                        " within the iteration budget");
  }
  trace.residual = std::fabs(g_final);
  trace.u_star = std::move(final_eval.u);
  trace.v_star = std::move(final_eval.v);
  return trace;
}

CurveResult trace_curve(const Problem& p, double r_max, int sample_count, double tol) {
  if (r_max < 0.0) throw NonlocalError("trace_curve: r_max must be nonnegative");
  CurveResult out;
  if (r_max == 0.0 || sample_count < 2) {
    out.samples.push_back(to_sample(evaluate_S(p, 0.0)));
    return out;
  }
  std::vector<SEvaluation> evals;
  evals.reserve(static_cast<std::size_t>(sample_count));
  for (int i = 0; i < sample_count; ++i) {
    const double r = r_max * static_cast<double>(i) / (sample_count - 1);
    evals.push_back(evaluate_S(p, r));
    out.samples.push_back(to_sample(evals.back()));
  }
  for (int i = 0; i + 1 < sample_count; ++i) {
    const double g1 = evals[static_cast<std::size_t>(i)].S - evals[static_cast<std::size_t>(i)].r;
    const double g2 =
        evals[static_cast<std::size_t>(i + 1)].S - evals[static_cast<std::size_t>(i + 1)].r;
    if (g1 == 0.0) {
      out.crossings.push_back(evals[static_cast<std::size_t>(i)].r);
      continue;
    }
    if (g1 * g2 < 0.0) {
      double a = evals[static_cast<std::size_t>(i)].r;
      double b = evals[static_cast<std::size_t>(i + 1)].r;
      double sign_a = g1 > 0.0 ? 1.0 : -1.0;
      double crossing = 0.5 * (a + b);
      for (int iter = 0; iter < 200; ++iter) {
        crossing = 0.5 * (a + b);
        const SEvaluation em = evaluate_S(p, crossing);
        const double gm = em.S - crossing;
        if (std::fabs(gm) <= tol) break;
        if ((gm > 0.0 ? 1.0 : -1.0) == sign_a) {
          a = crossing;
        } else {
          b = crossing;
        }
      }
      out.crossings.push_back(crossing);
    }
  }
  if (!evals.empty() && evals.back().S - evals.back().r == 0.0) {
    out.crossings.push_back(evals.back().r);
  }
  return out;
}

double nonlocal_residual(const Problem& p, const mesh::Field& u, double r) {
  model::PrimitiveMap pm(p.coefficient(), r, p.quad_tol);
  const mesh::Field primitive_of_u =
      mesh::apply_pointwise(u, [&pm](double t) { return pm.eval(t); });
  const mesh::Mesh& m = p.grid();
  mesh::Field rhs(m);
  for (int i = 0; i < rhs.size(); ++i) {
    rhs[i] = p.nonlinearity()(m.node_x(i), m.node_y(i), u[i]);
  }
  // with integral-mean edge coefficients the divergence form applied to u
  // telescopes to the Laplacian applied to M(u)
  return localsolve::weak_residual(m, primitive_of_u, rhs);
}

namespace {

EigenCondition eigen_condition(const Problem& p, const mesh::Field& alpha, bool want_negative) {
  EigenCondition cond;
  auto op = linalg::assemble_schrodinger(p.grid(), alpha);
  auto eig = linalg::smallest_eigenvalue(op, p.eigen_tol, 400, std::max(p.solver.cg_tol, 1e-11),
                                         p.solver.cg_maxit);
  cond.lambda = eig.lambda;
  cond.holds = want_negative ? eig.lambda < 0.0 : eig.lambda > 0.0;
  cond.note = "lambda1 = " + fmt(eig.lambda);
  return cond;
}

}  // namespace

F5Report check_f5(const Problem& p, std::span<const double> r_samples,
                  const model::HypothesisReport* hypotheses) {
  if (p.nonlinearity().regime() != model::Regime::sublinear) {
    throw NonlocalError("check_f5: requires the sublinear regime");
  }
  F5Report report;
  const mesh::Mesh& m = p.grid();
  const int n = m.interior_count();

  for (double r : r_samples) {
    F5Sample sample;
    sample.r = r;
    mesh::Field alpha0_r(m), alphainf_r(m);
    bool any_infinite = false;
    bool m_diverges = false;
    for (int i = 0; i < n; ++i) {
      const auto lim =
          model::alpha_limits(p.nonlinearity(), p.coefficient(), r, m.node_x(i), m.node_y(i));
      if (lim.alpha0_infinite) {
        any_infinite = true;
      } else {
        alpha0_r[i] = lim.alpha0_r;
      }
      alphainf_r[i] = lim.alphainf_r;
      m_diverges = lim.m_inf_diverges;
    }
    if (any_infinite) {
      sample.left.symbolic = true;
      sample.left.holds = true;
      sample.left.note = "alpha0_r = +inf forces lambda1 = -inf";
    } else {
      sample.left = eigen_condition(p, alpha0_r, true);
    }
    if (m_diverges) {
      sample.right.symbolic = true;
      sample.right.holds = true;
      sample.right.lambda = p.eigenpair().lambda;
      sample.right.note = "m(inf,r) diverges, so alphainf_r = 0 and lambda1(-Lap) = " +
                          fmt(p.eigenpair().lambda) + " > 0";
    } else {
      sample.right = eigen_condition(p, alphainf_r, false);
    }
    sample.holds = sample.left.holds && sample.right.holds;
    report.all_hold = report.all_hold && sample.holds;
    report.per_r.push_back(std::move(sample));
  }

  // r-free sufficient check with alpha / m_lower, under (m3) + (f6)
  model::HypothesisReport fallback;
  if (!hypotheses) {
    fallback = model::check_hypotheses(p.coefficient(), &p.nonlinearity(), &m, 512);
    hypotheses = &fallback;
  }
  report.premise_m3 = hypotheses->passed("m3");
  report.premise_f6 = hypotheses->passed("f6");
  report.condicao_applicable = report.premise_m3 && report.premise_f6;
  if (report.condicao_applicable) {
    const double mhat = p.coefficient().lower_bound();
    mesh::Field alpha0(m), alphainf(m);
    bool any_infinite = false;
    for (int i = 0; i < n; ++i) {
      const auto lim =
          model::alpha_limits(p.nonlinearity(), p.coefficient(), 0.0, m.node_x(i), m.node_y(i));
      if (lim.alpha0_infinite) {
        any_infinite = true;
      } else {
        alpha0[i] = lim.alpha0 / mhat;
      }
      alphainf[i] = lim.alpha_inf / mhat;
    }
    if (any_infinite) {
      report.condicao_left.symbolic = true;
      report.condicao_left.holds = true;
      report.condicao_left.note = "alpha0 = +inf forces lambda1 = -inf";
    } else {
      report.condicao_left = eigen_condition(p, alpha0, true);
    }
    report.condicao_right = eigen_condition(p, alphainf, false);
    report.condicao_holds = report.condicao_left.holds && report.condicao_right.holds;
  }

  // informational: m(0,r) < 1 lets the left inequality be checked on f alone
  bool below_one = true;
  for (int j = 0; j <= 16 && below_one; ++j) {
    below_one = p.coefficient()(0.0, j * 0.5) < 1.0;
  }
  report.m_zero_below_one = below_one;
  return report;
}

ContractionReport check_contraction(const Problem& p) {
  if (p.nonlinearity().regime() != model::Regime::lipschitz) {
    throw NonlocalError("check_contraction: requires the lipschitz regime");
  }
  ContractionReport rep;
  const auto& k = p.nonlinearity().constants();
  rep.theta = k.theta;
  rep.m_lower = p.coefficient().lower_bound();
  rep.lambda1 = p.eigenpair().lambda;
  rep.bound = k.theta / rep.m_lower;
  rep.condition_holds = rep.bound < rep.lambda1;

  // sampled Lipschitz estimate of h_r against theta / m_lower
  const mesh::Mesh& m = p.grid();
  double worst = 0.0;
  for (double r : {0.0, 1.0, 10.0}) {
    model::PrimitiveMap pm(p.coefficient(), r, p.quad_tol);
    model::ReducedNonlinearity hr(p.nonlinearity(), pm);
    for (int i = 1; i <= 256; ++i) {
      const double x = m.xmin() + (m.xmax() - m.xmin()) * model::halton(i, 2);
      const double y = m.dimension() == 2
                           ? m.ymin() + (m.ymax() - m.ymin()) * model::halton(i, 5)
                           : 0.0;
      const double s1 = 10.0 * (2.0 * model::halton(i, 3) - 1.0);
      const double s2 = 10.0 * (2.0 * model::halton(i, 7) - 1.0);
      const double lhs = std::fabs(hr(x, y, s1) - hr(x, y, s2));
      const double slack = lhs - rep.bound * std::fabs(s1 - s2);
      worst = std::max(worst, slack);
    }
  }
  rep.sampled_worst = worst;
  rep.sampled_ok = worst <= 1e-9;

  rep.delta_is_one = k.delta == 1.0;
  rep.nu = k.nu;
  if (rep.delta_is_one) rep.nu_ok = k.nu < rep.lambda1;
  rep.all_ok = rep.condition_holds && rep.sampled_ok && rep.nu_ok;
  return rep;
}

ContinuityReport continuity_probe_S(const Problem& p, double r0, int levels) {
  ContinuityReport rep;
  rep.r0 = r0;
  const double base = evaluate_S(p, r0).S;
  rep.s_r0 = base;
  const double delta = 0.5 * std::max(1.0, r0);
  for (int k = 0; k <= levels; ++k) {
    const double offset = delta * std::pow(0.5, k);
    double osc = std::fabs(evaluate_S(p, r0 + offset).S - base);
    if (r0 - offset >= 0.0) {
      osc += std::fabs(evaluate_S(p, r0 - offset).S - base);
    }
    rep.offsets.push_back(offset);
    rep.oscillation.push_back(osc);
  }
  const double first = rep.oscillation.front();
  const double last = rep.oscillation.back();
  rep.decaying = last <= std::max(0.02 * first, 1e-9 * (1.0 + std::fabs(base)));
  return rep;
}

}  // namespace kirchhoff::nonlocal
