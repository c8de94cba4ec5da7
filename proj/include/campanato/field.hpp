#pragma once

// Band-limited scalar fields on the periodic grid [0, period)^dim.
//
// Fields are immutable values. Spectral coefficients are computed on first
// use and shared between copies; derivatives elsewhere in the library are
// symbol multiplications on these coefficients, never finite differences.

#include "campanato/errors.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <concepts>
#include <cstddef>
#include <cstdio>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

namespace campanato {

using complex = std::complex<double>;

struct Grid
{
  int dim = 1;
  int points_per_axis = 4;
  double period = 2.0 * std::numbers::pi;

  std::size_t total_points() const
  {
    std::size_t n = 1;
    for (int d = 0; d < dim; ++d)
      n *= static_cast<std::size_t>(points_per_axis);
    return n;
  }

  double spacing() const { return period / points_per_axis; }
  double cell_volume() const { return std::pow(spacing(), dim); }
  double volume() const { return std::pow(period, dim); }

  // Angular wavenumber unit: 1 on the default 2*pi torus.
  double wavenumber_unit() const { return 2.0 * std::numbers::pi / period; }

  // Row-major multi-index: axis 0 varies slowest.
  std::vector<int> multi_index(std::size_t flat) const
  {
    std::vector<int> idx(static_cast<std::size_t>(dim));
    for (int d = dim - 1; d >= 0; --d) {
      idx[static_cast<std::size_t>(d)] = static_cast<int>(flat % static_cast<std::size_t>(points_per_axis));
      flat /= static_cast<std::size_t>(points_per_axis);
    }
    return idx;
  }

  void coordinates(std::size_t flat, std::span<double> x) const
  {
    const double h = spacing();
    for (int d = dim - 1; d >= 0; --d) {
      x[static_cast<std::size_t>(d)] = h * static_cast<double>(flat % static_cast<std::size_t>(points_per_axis));
      flat /= static_cast<std::size_t>(points_per_axis);
    }
  }

  // Signed integer mode for FFT index m; the Nyquist index maps to -N/2.
  int signed_mode(int m) const { return m < points_per_axis / 2 ? m : m - points_per_axis; }
  bool is_nyquist(int m) const { return m == points_per_axis / 2; }

  friend bool operator==(const Grid &, const Grid &) = default;
};

inline bool is_power_of_two(long long v) { return v > 0 && (v & (v - 1)) == 0; }

inline Grid make_grid(int dim, int points_per_axis, double period = 2.0 * std::numbers::pi)
{
  if (dim < 1)
    throw config_error("grid dimension must be >= 1, got " + std::to_string(dim));
  if (points_per_axis < 4 || !is_power_of_two(points_per_axis))
    throw config_error("points_per_axis must be a power of two >= 4, got " + std::to_string(points_per_axis));
  if (!(period > 0.0) || !std::isfinite(period))
    throw config_error("grid period must be positive and finite");
  double total = std::pow(static_cast<double>(points_per_axis), dim);
  if (total > static_cast<double>(1u << 26))
    throw config_error("grid too large: " + std::to_string(total) + " points");
  return Grid{dim, points_per_axis, period};
}

namespace detail {

// Unnormalized n-dimensional complex DFT. Plans are created once per
// (shape, direction) under a lock; execution uses the new-array interface,
// which FFTW documents as thread-safe. FFTW_ESTIMATE keeps plans (and
// therefore results) deterministic from run to run.
class fft_plans
{
public:
  static fft_plans &instance()
  {
    static fft_plans plans;
    return plans;
  }

  void execute(const Grid &g, std::vector<complex> &data, int sign)
  {
    fftw_plan plan = get(g, sign);
    auto *ptr = reinterpret_cast<fftw_complex *>(data.data());
    fftw_execute_dft(plan, ptr, ptr);
  }

  fft_plans(const fft_plans &) = delete;
  fft_plans &operator=(const fft_plans &) = delete;

private:
  fft_plans() = default;
  ~fft_plans()
  {
    for (auto &[key, plan] : plans_)
      fftw_destroy_plan(plan);
  }

  fftw_plan get(const Grid &g, int sign)
  {
    std::lock_guard<std::mutex> lock(mutex_);
    auto key = std::make_tuple(g.dim, g.points_per_axis, sign);
    auto it = plans_.find(key);
    if (it != plans_.end())
      return it->second;
    std::vector<int> shape(static_cast<std::size_t>(g.dim), g.points_per_axis);
    std::vector<complex> scratch(g.total_points());
    auto *ptr = reinterpret_cast<fftw_complex *>(scratch.data());
    fftw_plan plan = fftw_plan_dft(g.dim, shape.data(), ptr, ptr, sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
    if (plan == nullptr)
      throw config_error("FFTW could not create a plan for this grid");
    plans_.emplace(key, plan);
    return plan;
  }

  std::mutex mutex_;
  std::map<std::tuple<int, int, int>, fftw_plan> plans_;
};

struct spectral_cache
{
  std::once_flag once;
  std::vector<complex> coeffs;
};

} // namespace detail

class ScalarField
{
public:
  ScalarField(Grid grid, std::vector<double> values)
      : grid_(grid), values_(std::move(values)), cache_(std::make_shared<detail::spectral_cache>())
  {
    if (values_.size() != grid_.total_points())
      throw config_error("field has " + std::to_string(values_.size()) + " values, grid expects " +
                         std::to_string(grid_.total_points()));
  }

  static ScalarField constant(const Grid &grid, double value)
  {
    return ScalarField(grid, std::vector<double>(grid.total_points(), value));
  }
  static ScalarField zero(const Grid &grid) { return constant(grid, 0.0); }

  // Inverse transform of unnormalized coefficients; the imaginary part is
  // discarded, so callers must supply (numerically) Hermitian spectra.
  static ScalarField from_spectrum(const Grid &grid, std::vector<complex> coeffs)
  {
    detail::fft_plans::instance().execute(grid, coeffs, FFTW_BACKWARD);
    const double scale = 1.0 / static_cast<double>(grid.total_points());
    std::vector<double> values(coeffs.size());
    for (std::size_t i = 0; i < coeffs.size(); ++i)
      values[i] = coeffs[i].real() * scale;
    return ScalarField(grid, std::move(values));
  }

  const Grid &grid() const { return grid_; }
  std::span<const double> values() const { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }
  std::size_t size() const { return values_.size(); }

  // Unnormalized forward DFT coefficients, row-major in FFT index order.
  const std::vector<complex> &spectrum() const
  {
    std::call_once(cache_->once, [this] {
      std::vector<complex> c(values_.begin(), values_.end());
      detail::fft_plans::instance().execute(grid_, c, FFTW_FORWARD);
      cache_->coeffs = std::move(c);
    });
    return cache_->coeffs;
  }

private:
  Grid grid_;
  std::vector<double> values_;
  std::shared_ptr<detail::spectral_cache> cache_;
};

inline void require_same_grid(const ScalarField &a, const ScalarField &b, const char *what)
{
  if (!(a.grid() == b.grid()))
    throw config_error(std::string(what) + ": grid mismatch");
}

template <class Op>
ScalarField pointwise(const ScalarField &a, const ScalarField &b, Op op)
{
  require_same_grid(a, b, "pointwise operation");
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = op(a[i], b[i]);
  return ScalarField(a.grid(), std::move(out));
}

template <class Op>
ScalarField map_values(const ScalarField &a, Op op)
{
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = op(a[i]);
  return ScalarField(a.grid(), std::move(out));
}

inline ScalarField operator+(const ScalarField &a, const ScalarField &b)
{
  return pointwise(a, b, [](double x, double y) { return x + y; });
}
inline ScalarField operator-(const ScalarField &a, const ScalarField &b)
{
  return pointwise(a, b, [](double x, double y) { return x - y; });
}
// Pointwise product.
inline ScalarField operator*(const ScalarField &a, const ScalarField &b)
{
  return pointwise(a, b, [](double x, double y) { return x * y; });
}
inline ScalarField operator*(double s, const ScalarField &a)
{
  return map_values(a, [s](double x) { return s * x; });
}
inline ScalarField operator-(const ScalarField &a)
{
  return map_values(a, [](double x) { return -x; });
}

// Pointwise evaluation of f(x) at the grid nodes.
template <class F>
  requires std::invocable<F &, std::span<const double>>
ScalarField sample(F &&f, const Grid &grid)
{
  std::vector<double> values(grid.total_points());
  std::vector<double> x(static_cast<std::size_t>(grid.dim));
  for (std::size_t i = 0; i < values.size(); ++i) {
    grid.coordinates(i, x);
    const double v = static_cast<double>(f(std::span<const double>(x)));
    if (!std::isfinite(v))
      throw data_error("sampled function is not finite at grid node " + std::to_string(i));
    values[i] = v;
  }
  return ScalarField(grid, std::move(values));
}

// Trapezoidal quadrature; exact for trigonometric polynomials whose squared
// modulus stays below the grid's Nyquist band.
inline double l2_norm(const ScalarField &u)
{
  double sum = 0.0;
  for (double v : u.values())
    sum += v * v;
  return std::sqrt(sum * u.grid().cell_volume());
}

inline double mean(const ScalarField &u)
{
  double sum = 0.0;
  for (double v : u.values())
    sum += v;
  return sum / static_cast<double>(u.size());
}

// L2 norm computed from the spectral coefficients (discrete Parseval).
inline double l2_norm_spectral(const ScalarField &u)
{
  double sum = 0.0;
  for (const complex &c : u.spectrum())
    sum += std::norm(c);
  const double n = static_cast<double>(u.size());
  return std::sqrt(sum * u.grid().cell_volume() / n);
}

struct ZeroMeanProjection
{
  ScalarField field;
  double mass; // mean removed from the input
};

inline ZeroMeanProjection project_zero_mean(const ScalarField &u)
{
  const double m = mean(u);
  return {map_values(u, [m](double v) { return v - m; }), m};
}

// Zero-mean real trigonometric polynomial with every |k_d| <= max_mode and
// random coefficients. max_mode must stay below the Nyquist index so the
// field is exactly representable and all symbol identities hold exactly.
template <class Rng>
ScalarField random_band_limited(const Grid &grid, int max_mode, Rng &rng)
{
  if (max_mode < 1 || max_mode >= grid.points_per_axis / 2)
    throw config_error("max_mode must lie in [1, points_per_axis/2)");
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<complex> coeffs(grid.total_points());
  for (std::size_t flat = 0; flat < coeffs.size(); ++flat) {
    auto idx = grid.multi_index(flat);
    bool inside = true;
    bool is_zero = true;
    for (int m : idx) {
      const int k = grid.signed_mode(m);
      inside = inside && std::abs(k) <= max_mode && !grid.is_nyquist(m);
      is_zero = is_zero && k == 0;
    }
    if (inside && !is_zero) {
      const double re = normal(rng);
      const double im = normal(rng);
      coeffs[flat] = complex(re, im) * static_cast<double>(grid.total_points());
    }
  }
  // Real part of the inverse transform symmetrizes the spectrum; the box of
  // modes is closed under k -> -k so the result stays band-limited.
  return ScalarField::from_spectrum(grid, std::move(coeffs));
}

// (u(x) - u(R x)) / 2 with R reflecting coordinate `axis`; grid nodes map to
// grid nodes, so this is exact.
inline ScalarField odd_part(const ScalarField &u, int axis = 0)
{
  const Grid &g = u.grid();
  if (axis < 0 || axis >= g.dim)
    throw config_error("odd_part: axis out of range");
  const auto n = static_cast<std::size_t>(g.points_per_axis);
  std::size_t stride = 1;
  for (int d = g.dim - 1; d > axis; --d)
    stride *= n;
  std::vector<double> out(u.size());
  for (std::size_t p = 0; p < u.size(); ++p) {
    const std::size_t i = (p / stride) % n;
    const std::size_t q = p - i * stride + ((n - i) % n) * stride;
    out[p] = 0.5 * (u[p] - u[q]);
  }
  return ScalarField(g, std::move(out));
}

// Full-precision CSV: header index_0,...,index_{dim-1},value; row-major.
inline void write_field_csv(std::ostream &os, const ScalarField &u)
{
  const Grid &g = u.grid();
  for (int d = 0; d < g.dim; ++d)
    os << "index_" << d << ',';
  os << "value\n";
  char buf[32];
  for (std::size_t i = 0; i < u.size(); ++i) {
    for (int m : g.multi_index(i))
      os << m << ',';
    std::snprintf(buf, sizeof buf, "%.17g", u[i]);
    os << buf << '\n';
  }
}

inline void write_field_csv(const std::string &path, const ScalarField &u)
{
  std::ofstream os(path);
  if (!os)
    throw config_error("cannot open " + path + " for writing");
  write_field_csv(os, u);
}

// Reads the dump format back. Rows may come in any order but every node of
// the implied grid must appear exactly once.
inline ScalarField read_field_csv(std::istream &is, double period = 2.0 * std::numbers::pi)
{
  std::string line;
  if (!std::getline(is, line))
    throw config_error("field csv: empty input");
  int dim = 0;
  {
    std::stringstream header(line);
    std::string col;
    std::vector<std::string> cols;
    while (std::getline(header, col, ','))
      cols.push_back(col);
    if (cols.size() < 2 || cols.back() != "value")
      throw config_error("field csv: header must end with 'value'");
    dim = static_cast<int>(cols.size()) - 1;
    for (int d = 0; d < dim; ++d)
      if (cols[static_cast<std::size_t>(d)] != "index_" + std::to_string(d))
        throw config_error("field csv: bad header column '" + cols[static_cast<std::size_t>(d)] + "'");
  }
  std::vector<std::pair<std::vector<int>, double>> rows;
  int max_index = -1;
  while (std::getline(is, line)) {
    if (line.empty())
      continue;
    std::stringstream row(line);
    std::string cell;
    std::vector<int> idx;
    for (int d = 0; d < dim; ++d) {
      if (!std::getline(row, cell, ','))
        throw config_error("field csv: short row '" + line + "'");
      try {
        idx.push_back(std::stoi(cell));
      } catch (const std::exception &) {
        throw config_error("field csv: bad index '" + cell + "'");
      }
      max_index = std::max(max_index, idx.back());
    }
    if (!std::getline(row, cell, ','))
      throw config_error("field csv: missing value in '" + line + "'");
    double v = 0.0;
    try {
      v = std::stod(cell);
    } catch (const std::exception &) {
      if (cell.find("nan") != std::string::npos || cell.find("inf") != std::string::npos)
        throw data_error("field csv: non-finite value '" + cell + "'");
      throw config_error("field csv: bad value '" + cell + "'");
    }
    if (!std::isfinite(v))
      throw data_error("field csv: non-finite value '" + cell + "'");
    rows.emplace_back(std::move(idx), v);
  }
  const Grid grid = make_grid(dim, max_index + 1, period);
  if (rows.size() != grid.total_points())
    throw config_error("field csv: expected " + std::to_string(grid.total_points()) + " rows, got " +
                       std::to_string(rows.size()));
  std::vector<double> values(grid.total_points());
  std::vector<char> seen(values.size(), 0);
  for (const auto &[idx, v] : rows) {
    std::size_t flat = 0;
    for (int m : idx) {
      if (m < 0)
        throw config_error("field csv: negative index");
      flat = flat * static_cast<std::size_t>(grid.points_per_axis) + static_cast<std::size_t>(m);
    }
    if (seen[flat])
      throw config_error("field csv: duplicate node");
    seen[flat] = 1;
    values[flat] = v;
  }
  return ScalarField(grid, std::move(values));
}

inline ScalarField read_field_csv(const std::string &path, double period = 2.0 * std::numbers::pi)
{
  std::ifstream is(path);
  if (!is)
    throw config_error("cannot read field file " + path);
  return read_field_csv(is, period);
}

} // namespace campanato
