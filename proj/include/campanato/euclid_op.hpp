#pragma once

// Constant-coefficient differential operators on the periodic grid, applied
// exactly through their Fourier symbols.

#include "campanato/errors.hpp"
#include "campanato/field.hpp"

#include <cmath>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace campanato {

// Wavevector of one Fourier mode, in angular units of the grid.
struct Mode
{
  std::span<const double> k;
  std::span<const char> nyquist; // per axis: index sits on N/2
  bool is_zero() const
  {
    for (double v : k)
      if (v != 0.0)
        return false;
    return true;
  }
};

class SpectralOperator
{
public:
  using Symbol = std::function<complex(const Mode &)>;

  // How the k = 0 coefficient is treated. Inverses of operators that
  // annihilate constants must say so explicitly.
  enum class ZeroMode { use_symbol, annihilate };

  SpectralOperator(Symbol symbol, ZeroMode zero_mode = ZeroMode::use_symbol)
      : symbol_(std::move(symbol)), zero_mode_(zero_mode)
  {
  }

  ScalarField apply(const ScalarField &u) const
  {
    const Grid &g = u.grid();
    const auto &in = u.spectrum();
    std::vector<complex> out(in.size());
    const auto dim = static_cast<std::size_t>(g.dim);
    std::vector<int> idx(dim, 0);
    std::vector<double> k(dim);
    std::vector<char> nyq(dim);
    const double unit = g.wavenumber_unit();
    for (std::size_t flat = 0; flat < in.size(); ++flat) {
      for (std::size_t d = 0; d < dim; ++d) {
        k[d] = unit * g.signed_mode(idx[d]);
        nyq[d] = g.is_nyquist(idx[d]) ? 1 : 0;
      }
      Mode mode{k, nyq};
      if (zero_mode_ == ZeroMode::annihilate && mode.is_zero())
        out[flat] = 0.0;
      else
        out[flat] = symbol_(mode) * in[flat];
      // advance row-major multi-index
      for (std::size_t d = dim; d-- > 0;) {
        if (++idx[d] < g.points_per_axis)
          break;
        idx[d] = 0;
      }
    }
    return ScalarField::from_spectrum(g, std::move(out));
  }

  ScalarField operator()(const ScalarField &u) const { return apply(u); }

private:
  Symbol symbol_;
  ZeroMode zero_mode_;
};

namespace detail {

inline void check_axis(const Grid &g, int axis)
{
  if (axis < 0 || axis >= g.dim)
    throw config_error("axis " + std::to_string(axis) + " out of range for dim " + std::to_string(g.dim));
}

// Symbol of d_i d_j. A first-order factor on a Nyquist index has no real
// representative and is taken as zero; the pure second derivative keeps
// -k_i^2 there, so the trace of the Hessian is the Laplacian exactly.
inline complex second_derivative_symbol(const Mode &m, std::size_t i, std::size_t j)
{
  if (i == j)
    return -m.k[i] * m.k[i];
  if (m.nyquist[i] || m.nyquist[j])
    return 0.0;
  return -m.k[i] * m.k[j];
}

inline double squared_wavenumber(const Mode &m)
{
  double s = 0.0;
  for (double v : m.k)
    s += v * v;
  return s;
}

} // namespace detail

inline ScalarField second_derivative(const ScalarField &u, int i, int j)
{
  detail::check_axis(u.grid(), i);
  detail::check_axis(u.grid(), j);
  const auto ii = static_cast<std::size_t>(i);
  const auto jj = static_cast<std::size_t>(j);
  return SpectralOperator([ii, jj](const Mode &m) { return detail::second_derivative_symbol(m, ii, jj); })(u);
}

// All dim^2 second derivatives, row-major (i * dim + j).
inline std::vector<ScalarField> hessian(const ScalarField &u)
{
  const int n = u.grid().dim;
  std::vector<ScalarField> out(static_cast<std::size_t>(n * n), ScalarField::zero(u.grid()));
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      ScalarField d = second_derivative(u, i, j);
      out[static_cast<std::size_t>(i * n + j)] = d;
      out[static_cast<std::size_t>(j * n + i)] = d;
    }
  return out;
}

inline ScalarField laplacian(const ScalarField &u)
{
  return SpectralOperator([](const Mode &m) { return complex(-detail::squared_wavenumber(m)); })(u);
}

// Relative tolerance for the torus compatibility condition mean(f) = 0.
inline constexpr double mean_tolerance = 1e-10;

// L2 norm of the constant component compared with the full norm.
inline bool has_zero_mean(const ScalarField &f, double rel_tol = mean_tolerance)
{
  const double mean_part = std::abs(mean(f)) * std::sqrt(f.grid().volume());
  return mean_part <= rel_tol * l2_norm(f);
}

// Unique zero-mean solution of laplacian(u) = f on the torus.
inline ScalarField invert_laplacian(const ScalarField &f)
{
  if (!has_zero_mean(f))
    throw solvability_error("invert_laplacian: right-hand side has nonzero mean " + std::to_string(mean(f)));
  return SpectralOperator([](const Mode &m) { return complex(-1.0 / detail::squared_wavenumber(m)); },
                          SpectralOperator::ZeroMode::annihilate)(f);
}

// The homogeneous H^2 norm ||laplacian(u)||_{L2}.
inline double h2dot_norm(const ScalarField &u) { return l2_norm(laplacian(u)); }

inline bool is_numerically_constant(const ScalarField &u, double rel_tol = 1e-12)
{
  const auto &c = u.spectrum();
  double total = 0.0;
  for (const complex &v : c)
    total += std::norm(v);
  const double oscillating = total - std::norm(c[0]);
  return oscillating <= rel_tol * rel_tol * total;
}

// ||d_i d_j u|| / ||laplacian(u)|| for every pair, row-major.
inline std::vector<double> miranda_talenti_pair_ratios(const ScalarField &u)
{
  if (is_numerically_constant(u))
    throw degenerate_input_error("Miranda-Talenti ratio undefined for a constant field");
  const double lap = h2dot_norm(u);
  std::vector<double> ratios;
  for (const ScalarField &d : hessian(u))
    ratios.push_back(l2_norm(d) / lap);
  return ratios;
}

// (sum_ij ||d_i d_j u||^2)^{1/2} / ||laplacian(u)||; identically 1 on the torus
// for fields without Nyquist content.
inline double miranda_talenti_ratio(const ScalarField &u)
{
  double sum = 0.0;
  for (double r : miranda_talenti_pair_ratios(u))
    sum += r * r;
  return std::sqrt(sum);
}

} // namespace campanato
