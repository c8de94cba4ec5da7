#pragma once

// Fully nonlinear operators A u = a(x, {d_i d_j u}) with a Caratheodory
// function a, sampling checks for the structure conditions (C1)/(C2), and a
// damped image-space fixed-point iteration.

#include "campanato/errors.hpp"
#include "campanato/euclid_op.hpp"
#include "campanato/field.hpp"
#include "campanato/trace.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace campanato {

struct CaratheodoryFn
{
  using Eval = std::function<double(std::span<const double> x, std::span<const double> xi)>;

  int n_gens = 1;
  // xi holds the n_gens^2 second derivatives, row-major (i * n_gens + j).
  Eval eval;
  // Verification samples xi and tau from [-sample_box, sample_box]^{N^2}.
  double sample_box = 10.0;
  // Points x are drawn from [0, period)^N.
  double period = 2.0 * std::numbers::pi;
};

inline double trace_of(std::span<const double> xi, int n)
{
  double t = 0.0;
  for (int i = 0; i < n; ++i)
    t += xi[static_cast<std::size_t>(i * n + i)];
  return t;
}

inline double euclidean_norm(std::span<const double> v)
{
  double s = 0.0;
  for (double x : v)
    s += x * x;
  return std::sqrt(s);
}

inline ScalarField apply_nonlinear(const CaratheodoryFn &a, const ScalarField &u)
{
  const Grid &g = u.grid();
  if (a.n_gens != g.dim)
    throw config_error("apply_nonlinear: a expects " + std::to_string(a.n_gens) + " generators, grid has dim " +
                       std::to_string(g.dim));
  const auto h = hessian(u);
  std::vector<double> x(static_cast<std::size_t>(g.dim));
  std::vector<double> xi(h.size());
  std::vector<double> out(u.size());
  for (std::size_t p = 0; p < out.size(); ++p) {
    g.coordinates(p, x);
    for (std::size_t e = 0; e < h.size(); ++e)
      xi[e] = h[e][p];
    const double v = a.eval(x, xi);
    if (!std::isfinite(v))
      throw data_error("apply_nonlinear: a(x, xi) is not finite at node " + std::to_string(p));
    out[p] = v;
  }
  return ScalarField(g, std::move(out));
}

enum class Condition { C1, C2 };

inline const char *to_string(Condition c) { return c == Condition::C1 ? "C1" : "C2"; }

struct Counterexample
{
  std::vector<double> x, xi, tau;
  double lhs = 0.0;
  double rhs = 0.0;
};

struct Admissibility
{
  double c0 = 0.0;
  double mu = 0.0;    // sqrt((gamma + delta)(gamma C0^2 + delta))
  double limit = 0.0; // 1 + alpha M
  bool holds = false;
};

struct ConditionReport
{
  Condition condition = Condition::C1;
  std::map<std::string, double> constants;
  std::uint64_t seed = 0;
  long long samples_tested = 0;
  std::optional<Counterexample> counterexample;
  std::vector<Admissibility> admissibility;

  bool passed() const { return !counterexample.has_value(); }
};

// sqrt((gamma + delta)(gamma C0^2 + delta)) < 1 + alpha M.
inline Admissibility admissibility(double alpha, double gamma, double delta, double M, double c0)
{
  Admissibility r;
  r.c0 = c0;
  r.mu = std::sqrt((gamma + delta) * (gamma * c0 * c0 + delta));
  r.limit = 1.0 + alpha * M;
  r.holds = r.mu < r.limit;
  return r;
}

namespace detail {

inline std::vector<int> first_primes(std::size_t count)
{
  std::vector<int> primes;
  for (int n = 2; primes.size() < count; ++n) {
    bool prime = true;
    for (int p : primes) {
      if (p * p > n)
        break;
      if (n % p == 0) {
        prime = false;
        break;
      }
    }
    if (prime)
      primes.push_back(n);
  }
  return primes;
}

inline double radical_inverse(std::uint64_t i, int base)
{
  double inv = 1.0 / base;
  double f = inv;
  double r = 0.0;
  while (i > 0) {
    r += f * static_cast<double>(i % static_cast<std::uint64_t>(base));
    i /= static_cast<std::uint64_t>(base);
    f *= inv;
  }
  return r;
}

// Halton points with a seeded Cranley-Patterson rotation.
class halton_sampler
{
public:
  halton_sampler(std::size_t dim, std::uint64_t seed) : primes_(first_primes(dim)), shift_(dim)
  {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (double &s : shift_)
      s = unit(rng);
  }

  // Sample i in [0,1)^dim; index 0 is skipped so the origin never appears unshifted.
  void point(std::uint64_t i, std::span<double> out) const
  {
    for (std::size_t d = 0; d < out.size(); ++d) {
      double v = radical_inverse(i + 1, primes_[d]) + shift_[d];
      out[d] = v - std::floor(v);
    }
  }

private:
  std::vector<int> primes_;
  std::vector<double> shift_;
};

// Generic falsification loop over (x, xi, tau); `violation` returns
// (lhs, rhs) with the inequality meant as lhs >= rhs for C1 and lhs <= rhs for C2.
template <class Check>
ConditionReport falsify(const CaratheodoryFn &a, Condition cond, long long n_samples, std::uint64_t seed,
                        Check &&check)
{
  const auto n = static_cast<std::size_t>(a.n_gens);
  const std::size_t m = n * n;
  halton_sampler sampler(n + 2 * m, seed);
  std::vector<double> unit(n + 2 * m), x(n), xi(m), tau(m), shifted(m);
  ConditionReport report;
  report.condition = cond;
  report.seed = seed;
  for (long long s = 0; s < n_samples; ++s) {
    sampler.point(static_cast<std::uint64_t>(s), unit);
    for (std::size_t d = 0; d < n; ++d)
      x[d] = a.period * unit[d];
    for (std::size_t e = 0; e < m; ++e) {
      xi[e] = a.sample_box * (2.0 * unit[n + e] - 1.0);
      tau[e] = a.sample_box * (2.0 * unit[n + m + e] - 1.0);
      shifted[e] = xi[e] + tau[e];
    }
    const double diff = a.eval(x, shifted) - a.eval(x, xi);
    report.samples_tested = s + 1;
    const auto [lhs, rhs, violated] = check(diff, std::span<const double>(tau));
    if (violated) {
      report.counterexample = Counterexample{x, xi, tau, lhs, rhs};
      return report;
    }
  }
  return report;
}

// Violations smaller than this (relative to the magnitudes involved, and
// never below 1e-12 absolute) are treated as rounding.
inline double violation_margin(double lhs, double rhs)
{
  return 1e-12 * std::max({1.0, std::abs(lhs), std::abs(rhs)});
}

struct verdict
{
  double lhs, rhs;
  bool violated;
};

} // namespace detail

// |a(x, xi + tau) - a(x, xi)| >= M |Tr tau|. A pass is only the absence of a
// counterexample among the samples.
inline ConditionReport verify_c1(const CaratheodoryFn &a, double M, long long n_samples, std::uint64_t seed)
{
  if (!(M > 0.0))
    throw config_error("verify_c1: M must be positive");
  auto report = detail::falsify(a, Condition::C1, n_samples, seed, [&](double diff, std::span<const double> tau) {
    const double lhs = std::abs(diff);
    const double rhs = M * std::abs(trace_of(tau, a.n_gens));
    return detail::verdict{lhs, rhs, rhs - lhs > detail::violation_margin(lhs, rhs)};
  });
  report.constants = {{"M", M}};
  return report;
}

struct AdmissibilityInput
{
  double M;
  std::vector<double> c0_values;
};

// |Tr tau - alpha (a(x, xi + tau) - a(x, xi))| <= gamma |tau| + delta |Tr tau|.
inline ConditionReport verify_c2(const CaratheodoryFn &a, double alpha, double gamma, double delta,
                                 long long n_samples, std::uint64_t seed,
                                 const std::optional<AdmissibilityInput> &adm = std::nullopt)
{
  if (!(alpha > 0.0) || gamma < 0.0 || delta < 0.0)
    throw config_error("verify_c2: need alpha > 0 and gamma, delta >= 0");
  auto report = detail::falsify(a, Condition::C2, n_samples, seed, [&](double diff, std::span<const double> tau) {
    const double tr = trace_of(tau, a.n_gens);
    const double lhs = std::abs(tr - alpha * diff);
    const double rhs = gamma * euclidean_norm(tau) + delta * std::abs(tr);
    return detail::verdict{lhs, rhs, lhs - rhs > detail::violation_margin(lhs, rhs)};
  });
  report.constants = {{"alpha", alpha}, {"gamma", gamma}, {"delta", delta}};
  if (adm) {
    report.constants["M"] = adm->M;
    for (double c0 : adm->c0_values)
      report.admissibility.push_back(admissibility(alpha, gamma, delta, adm->M, c0));
  }
  return report;
}

struct NonlinearSolveOptions
{
  double tol = 1e-9;
  int max_iter = 10000;
  double damping = 1.0;  // initial t in (0, 1]
  int max_halvings = 20; // total over the run
};

struct NonlinearSolveResult
{
  ScalarField u;
  IterationTrace trace;
  double final_damping = 1.0;
};

// Iterates on w = L u:
//   w_{k+1} = w_k - t alpha P0(a(x, D^2 u_k) - f),  u_k = L^{-1} w_k,
// halving t whenever the residual would grow. With B = L, alpha, and the
// nearness constant K < 1 the undamped map is a contraction.
inline NonlinearSolveResult solve_nonlinear(const CaratheodoryFn &a, const ScalarField &f, double alpha,
                                            const NonlinearSolveOptions &opt = {})
{
  if (!(alpha > 0.0))
    throw config_error("solve_nonlinear: alpha must be positive");
  if (!(opt.tol > 0.0) || opt.max_iter < 1 || !(opt.damping > 0.0 && opt.damping <= 1.0))
    throw config_error("solve_nonlinear: need tol > 0, max_iter >= 1, damping in (0,1]");
  if (!has_zero_mean(f))
    throw solvability_error("solve_nonlinear: right-hand side must have zero mean on the torus");

  const Grid &g = f.grid();
  const double norm_f = l2_norm(f);
  NonlinearSolveResult result{ScalarField::zero(g), {}, opt.damping};
  ScalarField w = ScalarField::zero(g);
  ScalarField u = ScalarField::zero(g);
  ScalarField F = apply_nonlinear(a, u) - f;
  double res = l2_norm(F);
  if (res <= opt.tol * norm_f) {
    result.trace.converged = true;
    return result;
  }

  double t = opt.damping;
  int halvings = 0;
  for (int k = 1; k <= opt.max_iter; ++k) {
    const auto [step, mass] = project_zero_mean(F);
    for (;;) {
      ScalarField w_new = w - (t * alpha) * step;
      ScalarField u_new = invert_laplacian(w_new);
      ScalarField F_new = apply_nonlinear(a, u_new) - f;
      const double res_new = l2_norm(F_new);
      if (res_new <= res || halvings >= opt.max_halvings) {
        if (res_new > res)
          throw non_convergence_error("solve_nonlinear: damping exhausted", result.trace);
        IterationRecord rec;
        rec.iter = k;
        rec.residual = res_new;
        rec.increment = l2_norm(w_new - w); // ||u_new - u||_{H2dot}
        rec.projected_mass = mass;
        rec.damping = t;
        result.trace.push(rec);
        w = std::move(w_new);
        u = std::move(u_new);
        F = std::move(F_new);
        res = res_new;
        break;
      }
      t *= 0.5;
      ++halvings;
    }
    if (res <= opt.tol * norm_f) {
      result.trace.converged = true;
      result.u = std::move(u);
      result.final_damping = t;
      return result;
    }
  }
  throw non_convergence_error("solve_nonlinear: no convergence after " + std::to_string(opt.max_iter) +
                                  " iterations",
                              result.trace);
}

} // namespace campanato
