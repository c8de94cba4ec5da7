#include "campanato/linear_solver.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace campanato;
using namespace campanato::testing;

namespace {

CoefficientField diag12(const Grid &g) { return CoefficientField::constant(g, 2, {1, 0, 0, 2}); }

} // namespace

TEST(ApplyA, Examples)
{
  const Grid g = make_grid(2, 32);
  std::mt19937_64 rng(1);
  const ScalarField u = random_band_limited(g, 6, rng);
  EXPECT_LE(max_abs_diff(apply_A(CoefficientField::identity(g, 2), u), laplacian(u)), 1e-12 * l2_norm(laplacian(u)));
  EXPECT_LE(max_abs_diff(apply_A(diag12(g), sin_sin(g)), -3.0 * sin_sin(g)), 1e-13);
  EXPECT_LE(l2_norm(apply_A(diag12(g), ScalarField::constant(g, 2.0))), 1e-12);
  EXPECT_THROW(apply_A(diag12(g), ScalarField::zero(make_grid(2, 16))), config_error);
  EXPECT_THROW(apply_A(CoefficientField::identity(make_grid(3, 8), 3), ScalarField::zero(make_grid(3, 16))),
               config_error);
}

TEST(PicardStep, IdentityReachesSolutionInOneStep)
{
  const Grid g = make_grid(2, 32);
  std::mt19937_64 rng(2);
  const ScalarField f = random_band_limited(g, 5, rng);
  const ScalarField u = random_band_limited(g, 5, rng);
  const ScalarField v = picard_step(CoefficientField::identity(g, 2), u, f);
  EXPECT_LE(rel_l2_diff(v, invert_laplacian(f)), 1e-12);
}

TEST(PicardStep, ExactSolutionIsFixedPoint)
{
  const Grid g = make_grid(2, 32);
  std::mt19937_64 rng(3);
  const auto C = perturbed_diagonal(g, {1.0, 2.0}, 0.1, rng);
  const ScalarField u_star = random_band_limited(g, 5, rng);
  const ScalarField f = apply_A(C, u_star);
  const auto step = picard_step_detailed(C, u_star, f);
  EXPECT_LE(h2dot_norm(step.next - u_star), 1e-12 * h2dot_norm(u_star));
  EXPECT_NEAR(step.projected_mass, 0.0, 1e-13);
}

TEST(PicardStep, DiagonalFromZero)
{
  // v = L^{-1}((3/5) f) with f = -3 sin sin, i.e. v = (9/10) sin sin.
  const Grid g = make_grid(2, 16);
  const ScalarField f = -3.0 * sin_sin(g);
  const ScalarField v = picard_step(diag12(g), ScalarField::zero(g), f);
  EXPECT_LE(max_abs_diff(v, 0.9 * sin_sin(g)), 1e-14);
}

TEST(Solve, PoissonCaseOneIteration)
{
  const Grid g = make_grid(2, 32);
  const ScalarField f = -2.0 * sin_sin(g);
  const auto res = solve(CoefficientField::identity(g, 2), f);
  EXPECT_TRUE(res.trace.converged);
  EXPECT_EQ(res.trace.iterations, 1);
  EXPECT_LE(max_abs_diff(res.u, sin_sin(g)), 1e-13);
  EXPECT_LT(residual(CoefficientField::identity(g, 2), res.u, f), 1e-10);
}

TEST(Solve, DiagonalManufactured)
{
  const Grid g = make_grid(2, 32);
  const ScalarField f = -3.0 * sin_sin(g);
  LinearSolveOptions opt;
  opt.tol = 1e-10;
  const auto res = solve(diag12(g), f, opt);
  EXPECT_TRUE(res.trace.converged);
  EXPECT_LE(residual(diag12(g), res.u, f), opt.tol * l2_norm(f));
  EXPECT_LE(max_abs_diff(res.u, sin_sin(g)), 1e-9);
  EXPECT_NEAR(res.report.epsilon, 0.8, 1e-15);
  EXPECT_EQ(res.report.c0, 1.0);
  EXPECT_EQ(res.c0_aggregate, 2.0);
  EXPECT_NEAR(res.bound_aggregate, 2.0 * std::sqrt(0.2), 1e-15);
}

TEST(Solve, CordesFailureStopsBeforeIterating)
{
  const Grid g = make_grid(2, 16);
  const auto C = CoefficientField::constant(g, 2, {1, 0, 0, -1});
  try {
    solve(C, -2.0 * sin_sin(g));
    FAIL() << "expected cordes_failed_error";
  } catch (const cordes_failed_error &e) {
    EXPECT_FALSE(e.report().passed);
    EXPECT_LT(e.report().elliptic_margin, 0.0);
  }
}

TEST(Solve, RejectsNonzeroMean)
{
  const Grid g = make_grid(2, 16);
  EXPECT_THROW(solve(diag12(g), ScalarField::constant(g, 1.0)), solvability_error);
}

TEST(Solve, ZeroRightHandSide)
{
  const Grid g = make_grid(2, 16);
  const auto res = solve(diag12(g), ScalarField::zero(g));
  EXPECT_TRUE(res.trace.converged);
  EXPECT_EQ(res.trace.iterations, 0);
  EXPECT_EQ(l2_norm(res.u), 0.0);
}

TEST(Solve, NonConvergenceCarriesTrace)
{
  const Grid g = make_grid(2, 16);
  std::mt19937_64 rng(4);
  const auto C = perturbed_diagonal(g, {1.0, 2.0}, 0.1, rng);
  LinearSolveOptions opt;
  opt.max_iter = 3;
  try {
    solve(C, apply_A(C, random_band_limited(g, 4, rng)), opt);
    FAIL() << "expected non_convergence_error";
  } catch (const non_convergence_error &e) {
    EXPECT_EQ(e.trace().iterations, 3);
    EXPECT_FALSE(e.trace().converged);
  }
}

TEST(Residual, Examples)
{
  const Grid g = make_grid(2, 32);
  std::mt19937_64 rng(5);
  const auto C = perturbed_diagonal(g, {1.0, 2.0}, 0.1, rng);
  const ScalarField u_star = random_band_limited(g, 5, rng);
  const ScalarField f = apply_A(C, u_star);
  EXPECT_LE(residual(C, u_star, f), 1e-10 * l2_norm(f));
  EXPECT_NEAR(residual(C, ScalarField::zero(g), f), l2_norm(f), 1e-14 * l2_norm(f));
  // A is linear: the residual of u* + delta sin(x1) is |delta| ||A sin(x1)||.
  const double unit = l2_norm(apply_A(C, sin_x1(g)));
  for (double delta : {1e-3, 0.1, 2.0}) {
    const double r = residual(C, u_star + delta * sin_x1(g), f);
    EXPECT_NEAR(r, delta * unit, 1e-9 * delta * unit + 1e-12 * l2_norm(f));
  }
}

class SolverProperties : public ::testing::TestWithParam<int>
{
protected:
  Grid g = make_grid(2, 32);
  std::mt19937_64 rng{static_cast<std::uint64_t>(1000 + GetParam())};
};

TEST_P(SolverProperties, ContractionBoundedBySqrtOneMinusEpsilon)
{
  const double amp = 0.05 * (1 + GetParam() % 3);
  const auto C = perturbed_diagonal(g, {1.0, 1.5 + 0.25 * (GetParam() % 3)}, amp, rng);
  const ScalarField u_star = random_band_limited(g, 6, rng);
  LinearSolveOptions opt;
  opt.tol = 1e-10;
  const auto res = solve(C, apply_A(C, u_star), opt);
  ASSERT_TRUE(res.trace.converged);
  const double bound = std::sqrt(1.0 - res.report.epsilon);
  for (const auto &r : res.trace.records) {
    if (r.iter >= 2) {
      EXPECT_LE(r.contraction_factor, bound + 0.02) << "iteration " << r.iter;
    } else {
      EXPECT_TRUE(std::isnan(r.contraction_factor));
    }
    EXPECT_GT(r.increment, 0.0);
  }
  EXPECT_LE(h2dot_norm(res.u - u_star), 1e-8 * h2dot_norm(u_star));
}

TEST_P(SolverProperties, FixedPointConsistency)
{
  const auto C = perturbed_diagonal(g, {1.0, 2.0}, 0.1, rng);
  const ScalarField f = apply_A(C, random_band_limited(g, 5, rng));
  LinearSolveOptions opt;
  const auto res = solve(C, f, opt);
  const ScalarField v = picard_step(C, res.u, f);
  EXPECT_LE(h2dot_norm(v - res.u), opt.tol * h2dot_norm(res.u));
}

TEST_P(SolverProperties, UniqueAcrossStartingIterates)
{
  const auto C = perturbed_diagonal(g, {1.0, 2.0}, 0.1, rng);
  const ScalarField f = apply_A(C, random_band_limited(g, 5, rng));
  LinearSolveOptions a, b;
  a.initial = 10.0 * random_band_limited(g, 8, rng);
  b.initial = random_band_limited(g, 3, rng);
  const auto ua = solve(C, f, a).u;
  const auto ub = solve(C, f, b).u;
  EXPECT_LE(h2dot_norm(ua - ub), 2.0 * a.tol * h2dot_norm(ua));
}

TEST_P(SolverProperties, Linearity)
{
  const auto C = perturbed_diagonal(g, {1.0, 2.0}, 0.1, rng);
  const ScalarField f1 = apply_A(C, random_band_limited(g, 5, rng));
  const ScalarField f2 = apply_A(C, random_band_limited(g, 5, rng));
  const double alpha = 0.7, beta = -1.3;
  LinearSolveOptions opt;
  const auto u1 = solve(C, f1, opt).u;
  const auto u2 = solve(C, f2, opt).u;
  const auto u12 = solve(C, alpha * f1 + beta * f2, opt).u;
  const ScalarField combo = alpha * u1 + beta * u2;
  EXPECT_LE(h2dot_norm(u12 - combo), 5.0 * opt.tol * h2dot_norm(combo));
}

INSTANTIATE_TEST_SUITE_P(Random, SolverProperties, ::testing::Range(0, 6));

TEST(Solve, IncompatibleDataSurfacesProjectedMass)
{
  // Variable coefficients with an arbitrary zero-mean f: the torus equation
  // has no exact solution, so the projected mass stays away from zero and
  // the residual criterion is never met.
  const Grid g = make_grid(2, 16);
  const auto C = CoefficientField(
      2, {sample([](std::span<const double> x) { return 1.5 + 0.5 * std::sin(x[0]); }, g), ScalarField::zero(g),
          ScalarField::zero(g), ScalarField::constant(g, 1.0)});
  const ScalarField f = sample([](std::span<const double> x) { return std::sin(x[0]); }, g);
  LinearSolveOptions opt;
  opt.max_iter = 200;
  try {
    solve(C, f, opt);
    FAIL() << "expected non-convergence";
  } catch (const non_convergence_error &e) {
    EXPECT_GT(std::abs(e.trace().records.back().projected_mass), 1e-3);
  }
}
