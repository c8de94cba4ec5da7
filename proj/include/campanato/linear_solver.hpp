#pragma once

// Fixed-point solver for sum_ij c_ij(x) d_i d_j u = f on the periodic torus.
//
// Each step solves  L v = L u - c A u + c f  with c(x) from the Cordes
// scaling. The map u -> v contracts in the homogeneous H^2 norm with factor
// sqrt(1 - epsilon) once the torus Miranda-Talenti identity replaces C0 by 1.

#include "campanato/cordes.hpp"
#include "campanato/errors.hpp"
#include "campanato/euclid_op.hpp"
#include "campanato/field.hpp"
#include "campanato/trace.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>

namespace campanato {

class cordes_failed_error : public precondition_error
{
public:
  cordes_failed_error(const std::string &what, CordesReport report)
      : precondition_error(what), report_(report)
  {
  }
  const char *kind() const noexcept override { return "cordes_failed"; }
  const CordesReport &report() const { return report_; }

private:
  CordesReport report_;
};

// Euclidean instantiation: generators are the coordinate derivatives, so the
// coefficient matrix must be dim x dim.
inline void require_euclidean(const CoefficientField &C, const ScalarField &u)
{
  if (!(C.grid() == u.grid()))
    throw config_error("coefficients and field live on different grids");
  if (C.n_gens() != u.grid().dim)
    throw config_error("coefficient matrix size must equal the grid dimension");
}

// A u = sum_ij c_ij(x) (d_i d_j u)(x).
inline ScalarField apply_A(const CoefficientField &C, const ScalarField &u)
{
  require_euclidean(C, u);
  const int n = C.n_gens();
  const auto h = hessian(u);
  std::vector<double> out(u.size(), 0.0);
  for (int e = 0; e < n * n; ++e) {
    const ScalarField &c = C.entries()[static_cast<std::size_t>(e)];
    const ScalarField &d = h[static_cast<std::size_t>(e)];
    for (std::size_t p = 0; p < out.size(); ++p)
      out[p] += c[p] * d[p];
  }
  return ScalarField(u.grid(), std::move(out));
}

inline double residual(const CoefficientField &C, const ScalarField &u, const ScalarField &f)
{
  require_same_grid(u, f, "residual");
  return l2_norm(apply_A(C, u) - f);
}

// With constant coefficients mean(f) = 0 is exactly the torus compatibility
// condition. Variable coefficients move it to the invariant density of A*,
// which is not known in advance; there incompatibility shows up as projected
// mass that does not decay.
inline bool has_constant_coefficients(const CoefficientField &C)
{
  return std::all_of(C.entries().begin(), C.entries().end(),
                     [](const ScalarField &c) { return is_numerically_constant(c); });
}

struct PicardStep
{
  ScalarField next;
  // Mean of L u - c A u + c f removed before inversion. On the whole space
  // this term does not exist; on the torus it must vanish at a solution.
  double projected_mass;
};

inline PicardStep picard_step_detailed(const CoefficientField &C, const ScalarField &u, const ScalarField &f)
{
  require_same_grid(u, f, "picard_step");
  const ScalarField c = scaling_function(C);
  const auto [rhs, mass] = project_zero_mean(laplacian(u) - c * apply_A(C, u) + c * f);
  return {invert_laplacian(rhs), mass};
}

// v = T u. The caller is responsible for having checked the Cordes condition.
inline ScalarField picard_step(const CoefficientField &C, const ScalarField &u, const ScalarField &f)
{
  return picard_step_detailed(C, u, f).next;
}

struct LinearSolveOptions
{
  double tol = 1e-9;
  int max_iter = 10000;
  // Starting iterate; zero when absent. Its mean is discarded.
  std::optional<ScalarField> initial;
};

struct LinearSolveResult
{
  ScalarField u;
  IterationTrace trace;
  CordesReport report;      // gated with the sharp torus constant C0 = 1
  double c0_aggregate = 0.0;    // C0 = n from C_ij = 1
  double bound_aggregate = 0.0; // sqrt(1 - epsilon) * n
};

inline constexpr double c0_torus_sharp = 1.0;

inline double aggregate_bound(double epsilon, double c0)
{
  if (!(epsilon > 0.0))
    return std::numeric_limits<double>::infinity();
  return std::sqrt(std::max(0.0, 1.0 - epsilon)) * c0;
}

// Banach iteration from u0 (zero by default). Stops when the relative L2
// residual is below tol and the a-posteriori bound on the distance to the
// fixed point, ||T u_k - u_k|| / (1 - q) with q = sqrt(1 - epsilon), is below
// tol relative to ||u_k|| in H2dot. The next increment T u_k - u_k has H2dot
// norm ||P0(c (f - A u_k))||_{L2}, so no extra inversion is needed.
inline LinearSolveResult solve(const CoefficientField &C, const ScalarField &f, const LinearSolveOptions &opt = {})
{
  require_euclidean(C, f);
  if (!(opt.tol > 0.0) || opt.max_iter < 1)
    throw config_error("solve: tol must be positive and max_iter >= 1");

  const CordesReport report = check(C, c0_torus_sharp);
  const double c0_aggregate = static_cast<double>(C.n_gens());
  LinearSolveResult result{ScalarField::zero(f.grid()), {}, report, c0_aggregate, aggregate_bound(report.epsilon, c0_aggregate)};
  if (!report.passed)
    throw cordes_failed_error("coefficients fail the Cordes/ellipticity check (epsilon = " +
                                  std::to_string(report.epsilon) +
                                  ", margin = " + std::to_string(report.elliptic_margin) + ")",
                              report);
  if (has_constant_coefficients(C) && !has_zero_mean(f))
    throw solvability_error("solve: right-hand side must have zero mean on the torus");

  const double norm_f = l2_norm(f);
  if (norm_f == 0.0) {
    result.trace.converged = true;
    return result;
  }

  const ScalarField c = scaling_function(C);
  const ScalarField cf = c * f;
  const double gap = 1.0 - report.contraction_bound;
  ScalarField u = opt.initial ? project_zero_mean(*opt.initial).field : ScalarField::zero(f.grid());
  require_same_grid(u, f, "solve: initial iterate");
  ScalarField Lu = laplacian(u);
  ScalarField Au = apply_A(C, u);

  for (int k = 1; k <= opt.max_iter; ++k) {
    auto [rhs, mass] = project_zero_mean(Lu - c * Au + cf);
    ScalarField v = invert_laplacian(rhs);
    // L v equals rhs up to rounding; reuse it instead of transforming again.
    const double increment = l2_norm(rhs - Lu);
    ScalarField Av = apply_A(C, v);
    const ScalarField r = Av - f;
    const double res = l2_norm(r);
    const double next_increment = l2_norm(project_zero_mean(c * r).field);
    const double size = l2_norm(rhs);

    IterationRecord rec;
    rec.iter = k;
    rec.residual = res;
    rec.increment = increment;
    rec.projected_mass = mass;
    result.trace.push(rec);

    u = std::move(v);
    Lu = std::move(rhs);
    Au = std::move(Av);

    if (res <= opt.tol * norm_f && next_increment <= opt.tol * gap * size) {
      result.trace.converged = true;
      result.u = std::move(u);
      return result;
    }
  }
  throw non_convergence_error("solve: no convergence after " + std::to_string(opt.max_iter) + " iterations",
                              result.trace);
}

} // namespace campanato
