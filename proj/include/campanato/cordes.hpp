#pragma once

// Validation of bounded coefficient matrices c_ij(x): the quadratic-form
// lower bound, the Cordes ratio, the scaling c(x) that turns A into a
// perturbation of the Laplacian, and the resulting contraction bound.
//
// All infima and suprema are taken over grid nodes only. A passing report
// means "pointwise-verified on grid", not a certificate for the essential
// infimum of an L-infinity coefficient.

#include "campanato/errors.hpp"
#include "campanato/field.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace campanato {

class CoefficientField
{
public:
  // entries are row-major: entries[i * n_gens + j] holds c_ij.
  CoefficientField(int n_gens, std::vector<ScalarField> entries) : n_gens_(n_gens), entries_(std::move(entries))
  {
    if (n_gens_ < 1)
      throw config_error("coefficient field needs at least one generator");
    if (entries_.size() != static_cast<std::size_t>(n_gens_ * n_gens_))
      throw config_error("coefficient field needs n_gens^2 entries");
    for (const ScalarField &e : entries_)
      require_same_grid(entries_.front(), e, "coefficient field");
    bound_ = 0.0;
    for (const ScalarField &e : entries_)
      for (double v : e.values())
        bound_ = std::max(bound_, std::abs(v));
  }

  // Spatially constant coefficients from a row-major matrix.
  static CoefficientField constant(const Grid &grid, int n_gens, const std::vector<double> &matrix)
  {
    if (matrix.size() != static_cast<std::size_t>(n_gens * n_gens))
      throw config_error("constant coefficient matrix needs n_gens^2 values");
    std::vector<ScalarField> entries;
    for (double v : matrix)
      entries.push_back(ScalarField::constant(grid, v));
    return CoefficientField(n_gens, std::move(entries));
  }

  static CoefficientField identity(const Grid &grid, int n_gens)
  {
    std::vector<double> m(static_cast<std::size_t>(n_gens * n_gens), 0.0);
    for (int i = 0; i < n_gens; ++i)
      m[static_cast<std::size_t>(i * n_gens + i)] = 1.0;
    return constant(grid, n_gens, m);
  }

  int n_gens() const { return n_gens_; }
  const Grid &grid() const { return entries_.front().grid(); }
  const ScalarField &entry(int i, int j) const { return entries_[static_cast<std::size_t>(i * n_gens_ + j)]; }
  const std::vector<ScalarField> &entries() const { return entries_; }
  // Max |c_ij| over all samples.
  double bound() const { return bound_; }

  // Row-major coefficient matrix at one grid node.
  void matrix_at(std::size_t point, std::span<double> out) const
  {
    for (std::size_t e = 0; e < entries_.size(); ++e)
      out[e] = entries_[e][point];
  }

  CoefficientField scaled(double s) const
  {
    std::vector<ScalarField> e;
    for (const ScalarField &f : entries_)
      e.push_back(s * f);
    return CoefficientField(n_gens_, std::move(e));
  }

private:
  int n_gens_;
  std::vector<ScalarField> entries_;
  double bound_;
};

struct CordesReport
{
  double epsilon = 0.0;         // inf_x ratio(x) - (N - 1)
  double ratio_min = 0.0;       // inf_x (sum c_ii)^2 / sum c_ij^2
  double elliptic_margin = 0.0; // best pointwise c0 of the quadratic form
  double c0 = 0.0;              // Miranda-Talenti aggregate constant used for the gate
  double contraction_bound = 0.0;
  bool passed = false;
  std::size_t points_checked = 0;
};

namespace detail {

struct cordes_point
{
  double trace;
  double frobenius_sq;
};

inline cordes_point cordes_terms(std::span<const double> c, int n)
{
  cordes_point p{0.0, 0.0};
  for (int i = 0; i < n; ++i)
    p.trace += c[static_cast<std::size_t>(i * n + i)];
  for (double v : c)
    p.frobenius_sq += v * v;
  return p;
}

inline void require_nonvanishing(const cordes_point &p, std::size_t point)
{
  if (!(p.frobenius_sq > 0.0))
    throw degenerate_input_error("coefficients vanish at grid node " + std::to_string(point));
}

} // namespace detail

// inf over nodes of the smallest eigenvalue of (C + C^T)/2.
inline double ellipticity_margin(const CoefficientField &C)
{
  const int n = C.n_gens();
  Eigen::MatrixXd m(n, n);
  std::vector<double> buf(static_cast<std::size_t>(n * n));
  double margin = std::numeric_limits<double>::infinity();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
  for (std::size_t p = 0; p < C.grid().total_points(); ++p) {
    C.matrix_at(p, buf);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        m(i, j) = 0.5 * (buf[static_cast<std::size_t>(i * n + j)] + buf[static_cast<std::size_t>(j * n + i)]);
    solver.compute(m, Eigen::EigenvaluesOnly);
    margin = std::min(margin, solver.eigenvalues()(0));
  }
  return margin;
}

inline double cordes_ratio_min(const CoefficientField &C)
{
  const int n = C.n_gens();
  std::vector<double> buf(static_cast<std::size_t>(n * n));
  double ratio = std::numeric_limits<double>::infinity();
  for (std::size_t p = 0; p < C.grid().total_points(); ++p) {
    C.matrix_at(p, buf);
    const auto t = detail::cordes_terms(buf, n);
    detail::require_nonvanishing(t, p);
    ratio = std::min(ratio, t.trace * t.trace / t.frobenius_sq);
  }
  return ratio;
}

inline double cordes_epsilon(const CoefficientField &C) { return cordes_ratio_min(C) - (C.n_gens() - 1); }

// c(x) = sum_i c_ii(x) / sum_ij c_ij(x)^2.
inline ScalarField scaling_function(const CoefficientField &C)
{
  const int n = C.n_gens();
  std::vector<double> buf(static_cast<std::size_t>(n * n));
  std::vector<double> out(C.grid().total_points());
  for (std::size_t p = 0; p < out.size(); ++p) {
    C.matrix_at(p, buf);
    const auto t = detail::cordes_terms(buf, n);
    detail::require_nonvanishing(t, p);
    out[p] = t.trace / t.frobenius_sq;
  }
  return ScalarField(C.grid(), std::move(out));
}

// sqrt(1 - epsilon) * C0 for epsilon strictly inside (0, 1).
inline double contraction_bound(double epsilon, double c0_const)
{
  if (!(epsilon > 0.0 && epsilon < 1.0))
    throw config_error("contraction_bound: epsilon must lie in (0,1), got " + std::to_string(epsilon));
  if (!(c0_const > 0.0))
    throw config_error("contraction_bound: C0 must be positive");
  return std::sqrt(1.0 - epsilon) * c0_const;
}

// Aggregates the hypotheses of the linear existence theorem. A measured
// epsilon of 1 (scalar multiples of the identity) means the Cordes condition
// holds for every epsilon < 1, so the bound is taken in the limit, i.e. 0.
inline CordesReport check(const CoefficientField &C, double c0_const)
{
  if (!(c0_const > 0.0))
    throw config_error("check: C0 must be positive");
  CordesReport r;
  r.points_checked = C.grid().total_points();
  r.c0 = c0_const;
  r.elliptic_margin = ellipticity_margin(C);
  r.ratio_min = cordes_ratio_min(C);
  r.epsilon = r.ratio_min - (C.n_gens() - 1);
  if (r.epsilon > 0.0)
    r.contraction_bound = r.epsilon < 1.0 ? contraction_bound(r.epsilon, c0_const) : 0.0;
  else
    r.contraction_bound = std::numeric_limits<double>::infinity();
  r.passed = r.elliptic_margin > 0.0 && r.epsilon > 0.0 && r.contraction_bound < 1.0;
  return r;
}

// sum_ij (delta_ij - c(x) c_ij(x))^2 at every node.
inline ScalarField scaled_defect_frobenius_sq(const CoefficientField &C)
{
  const int n = C.n_gens();
  const ScalarField c = scaling_function(C);
  std::vector<double> buf(static_cast<std::size_t>(n * n));
  std::vector<double> out(C.grid().total_points());
  for (std::size_t p = 0; p < out.size(); ++p) {
    C.matrix_at(p, buf);
    double s = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        const double d = (i == j ? 1.0 : 0.0) - c[p] * buf[static_cast<std::size_t>(i * n + j)];
        s += d * d;
      }
    out[p] = s;
  }
  return ScalarField(C.grid(), std::move(out));
}

} // namespace campanato
