#pragma once

// Truncated infinitesimal Schrodinger representations on the Heisenberg
// group H^n in the Hermite-function basis.
//
// Sign convention: the sub-Laplacian here is the positive one,
// L = -sum_i (X_i^2 + Y_i^2), so pi_lambda(L) = |lambda| (2k + 1) on the
// diagonal. Formulas written for L = sum X_i^2 pick up a sign flip.
//
// Two conventions for pi_lambda(Y) are provided:
//   printed     - i times the entries of pi_lambda(X), i.e. +i sqrt(|l|) sqrt((k+1)/2)
//                 above the diagonal and -i sqrt(|l|) sqrt(k/2) below. This is
//                 the form from which the closed-form entries of X Y L^{-1}
//                 follow. As matrices it equals i * pi_lambda(X), so it
//                 commutes with pi_lambda(X) and -(X^2 + Y^2) vanishes.
//   schrodinger   - i sgn(lambda) sqrt(|lambda|) times the position operator,
//                 +i on both bands. Satisfies [X, Y] = i lambda and
//                 -(X^2 + Y^2) = pi_lambda(L) away from the truncation edge.

#include "campanato/errors.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <fstream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace campanato::heisenberg {

using cplx = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

enum class YConvention { printed, schrodinger };

inline const char *to_string(YConvention c) { return c == YConvention::printed ? "printed" : "schrodinger"; }

inline constexpr int default_size = 64;

struct RepMatrix
{
  double lambda = 1.0;
  int size = 0;
  Matrix entries;
  int bandwidth = 0; // max |k - l| over nonzero entries

  cplx operator()(int k, int l) const { return entries(k, l); }

  // Rows/cols whose entries in a bandwidth-2 product are not affected by
  // truncation: indices <= size - 3.
  int interior_limit() const { return size - 3; }
};

inline int measure_bandwidth(const Matrix &m)
{
  int bw = 0;
  for (Eigen::Index k = 0; k < m.rows(); ++k)
    for (Eigen::Index l = 0; l < m.cols(); ++l)
      if (m(k, l) != cplx(0.0))
        bw = std::max(bw, static_cast<int>(std::abs(k - l)));
  return bw;
}

inline RepMatrix make_rep(double lambda, Matrix m)
{
  RepMatrix r;
  r.lambda = lambda;
  r.size = static_cast<int>(m.rows());
  r.bandwidth = measure_bandwidth(m);
  r.entries = std::move(m);
  return r;
}

namespace detail {

inline void check_args(double lambda, int size)
{
  if (lambda == 0.0 || !std::isfinite(lambda))
    throw config_error("representation parameter lambda must be finite and nonzero");
  if (size < 4)
    throw config_error("truncation size must be >= 4, got " + std::to_string(size));
}

} // namespace detail

// (pi_lambda(L))_{k,l} = |lambda| (2k + 1) delta_{k,l}
inline RepMatrix rep_L(double lambda, int size)
{
  detail::check_args(lambda, size);
  Matrix m = Matrix::Zero(size, size);
  for (int k = 0; k < size; ++k)
    m(k, k) = std::abs(lambda) * (2.0 * k + 1.0);
  return make_rep(lambda, std::move(m));
}

// sqrt|lambda| sqrt((k+1)/2) at (k, k+1); -sqrt|lambda| sqrt(k/2) at (k, k-1).
inline RepMatrix rep_X(double lambda, int size)
{
  detail::check_args(lambda, size);
  const double s = std::sqrt(std::abs(lambda));
  Matrix m = Matrix::Zero(size, size);
  for (int k = 0; k < size; ++k) {
    if (k + 1 < size)
      m(k, k + 1) = s * std::sqrt((k + 1) / 2.0);
    if (k >= 1)
      m(k, k - 1) = -s * std::sqrt(k / 2.0);
  }
  return make_rep(lambda, std::move(m));
}

inline RepMatrix rep_Y(double lambda, int size, YConvention conv = YConvention::printed)
{
  detail::check_args(lambda, size);
  const double s = std::sqrt(std::abs(lambda));
  const cplx I(0.0, 1.0);
  Matrix m = Matrix::Zero(size, size);
  if (conv == YConvention::printed) {
    for (int k = 0; k < size; ++k) {
      if (k + 1 < size)
        m(k, k + 1) = I * s * std::sqrt((k + 1) / 2.0);
      if (k >= 1)
        m(k, k - 1) = -I * s * std::sqrt(k / 2.0);
    }
  } else {
    const double sgn = lambda > 0.0 ? 1.0 : -1.0;
    for (int k = 0; k < size; ++k) {
      if (k + 1 < size)
        m(k, k + 1) = I * sgn * s * std::sqrt((k + 1) / 2.0);
      if (k >= 1)
        m(k, k - 1) = I * sgn * s * std::sqrt(k / 2.0);
    }
  }
  return make_rep(lambda, std::move(m));
}

// pi(X) pi(Y) pi(L)^{-1}, with pi(L)^{-1} formed entrywise on the diagonal.
inline RepMatrix xy_linv(double lambda, int size, YConvention conv = YConvention::printed)
{
  detail::check_args(lambda, size);
  const Matrix xy = rep_X(lambda, size).entries * rep_Y(lambda, size, conv).entries;
  Matrix m = xy;
  for (int l = 0; l < size; ++l)
    m.col(l) /= std::abs(lambda) * (2.0 * l + 1.0);
  return make_rep(lambda, std::move(m));
}

// Closed forms of the entries of X Y L^{-1} under the printed convention:
// -i/2 on the diagonal, (i/2) sqrt((l+1)(l+2))/(2l+5) at (l, l+2) and
// (i/2) sqrt((l+2)(l+1))/(2l+1) at (l+2, l); zero elsewhere.
inline cplx xy_linv_closed_form(int row, int col)
{
  const cplx half_i(0.0, 0.5);
  if (row == col)
    return -half_i;
  if (col == row + 2) {
    const double l = row;
    return half_i * std::sqrt((l + 1.0) * (l + 2.0)) / (2.0 * l + 5.0);
  }
  if (row == col + 2) {
    const double l = col;
    return half_i * std::sqrt((l + 2.0) * (l + 1.0)) / (2.0 * l + 1.0);
  }
  return 0.0;
}

inline double max_entry_norm(const Matrix &m)
{
  double best = 0.0;
  for (Eigen::Index k = 0; k < m.rows(); ++k)
    for (Eigen::Index l = 0; l < m.cols(); ++l)
      best = std::max(best, std::abs(m(k, l)));
  return best;
}

inline double max_entry_norm(const RepMatrix &m) { return max_entry_norm(m.entries); }

struct PowerIterationOptions
{
  double rel_tol = 1e-13;
  int max_iter = 200000;
};

// Largest singular value by power iteration on M^H M with a Rayleigh-quotient
// stopping rule.
inline double spectral_norm(const Matrix &m, const PowerIterationOptions &opt = {})
{
  if (m.rows() == 0 || m.cols() == 0)
    return 0.0;
  const Eigen::Index n = m.cols();
  Vector v(n);
  // Deterministic start with components in every direction.
  for (Eigen::Index i = 0; i < n; ++i)
    v(i) = cplx(1.0 + 0.1 * static_cast<double>(i % 7), 0.05 * static_cast<double>(i % 3));
  v.normalize();
  double sigma2 = 0.0;
  for (int it = 0; it < opt.max_iter; ++it) {
    Vector w = m.adjoint() * (m * v);
    const double next = std::real(v.dot(w)); // Rayleigh quotient of M^H M
    const double wn = w.norm();
    if (wn == 0.0)
      return 0.0;
    v = w / wn;
    if (it > 0 && std::abs(next - sigma2) <= opt.rel_tol * next) {
      // one more Rayleigh quotient with the updated vector
      const double final_sigma2 = std::real(v.dot(m.adjoint() * (m * v)));
      return std::sqrt(std::max(next, final_sigma2));
    }
    sigma2 = next;
  }
  throw convergence_error("spectral_norm: power iteration did not converge in " + std::to_string(opt.max_iter) +
                          " iterations");
}

inline double spectral_norm(const RepMatrix &m, const PowerIterationOptions &opt = {})
{
  if (m.size < 4)
    throw config_error("spectral_norm: size must be >= 4");
  return spectral_norm(m.entries, opt);
}

// C0 = (sum_{i,j <= N} C_ij^2)^{1/2} with every C_ij equal to c_pair and N = 2n.
inline double heisenberg_c0(int n, double c_pair)
{
  if (n < 1)
    throw config_error("heisenberg_c0: n must be >= 1");
  if (!(c_pair > 0.0))
    throw config_error("heisenberg_c0: c_pair must be positive");
  const double N = 2.0 * n;
  return std::sqrt(N * N * c_pair * c_pair);
}

// Epsilon range (1 - 1/C0^2, 1) on which sqrt(1 - eps) C0 < 1.
struct EpsilonRange
{
  double lower;
  double upper;
};

inline EpsilonRange admissible_epsilon(double c0) { return {1.0 - 1.0 / (c0 * c0), 1.0}; }

// Two values of C0 for H^n side by side: the aggregate formula with
// C_ij = 1/2, and the value n sqrt(2) used for the corollary's range
// (1 - 1/(2 n^2), 1). They disagree for every n.
struct C0Report
{
  int n = 1;
  double c_pair = 0.5;
  double c0_formula = 0.0;
  double c0_stated = 0.0;
  EpsilonRange range_formula{};
  EpsilonRange range_stated{};
  EpsilonRange range_corollary{}; // (1 - 1/(2 n^2), 1) as printed
  bool discrepancy = false;
};

inline C0Report c0_report(int n, double c_pair = 0.5)
{
  C0Report r;
  r.n = n;
  r.c_pair = c_pair;
  r.c0_formula = heisenberg_c0(n, c_pair);
  r.c0_stated = n * std::sqrt(2.0);
  r.range_formula = admissible_epsilon(r.c0_formula);
  r.range_stated = admissible_epsilon(r.c0_stated);
  r.range_corollary = {1.0 - 1.0 / (2.0 * n * n), 1.0};
  r.discrepancy = std::abs(r.c0_formula - r.c0_stated) > 1e-12 * r.c0_stated;
  return r;
}

// Generators Z_1..Z_2n = X_1..X_n, Y_1..Y_n on the tensor-product Hermite
// basis of L^2(R^n), each factor truncated to `size` functions.
inline std::vector<Matrix> generators(double lambda, int n, int size, YConvention conv)
{
  detail::check_args(lambda, size);
  if (n < 1)
    throw config_error("generators: n must be >= 1");
  double total = std::pow(static_cast<double>(size), n);
  if (total > 4096)
    throw config_error("generators: truncated fiber dimension " + std::to_string(total) + " exceeds 4096");
  const Matrix X = rep_X(lambda, size).entries;
  const Matrix Y = rep_Y(lambda, size, conv).entries;
  auto embed = [&](const Matrix &factor, int slot) {
    Matrix out = Matrix::Identity(1, 1);
    for (int s = 0; s < n; ++s) {
      const Matrix &f = (s == slot) ? factor : Matrix::Identity(size, size).eval();
      Matrix next(out.rows() * f.rows(), out.cols() * f.cols());
      for (Eigen::Index i = 0; i < out.rows(); ++i)
        for (Eigen::Index j = 0; j < out.cols(); ++j)
          next.block(i * f.rows(), j * f.cols(), f.rows(), f.cols()) = out(i, j) * f;
      out = std::move(next);
    }
    return out;
  };
  std::vector<Matrix> z;
  for (int i = 0; i < n; ++i)
    z.push_back(embed(X, i));
  for (int i = 0; i < n; ++i)
    z.push_back(embed(Y, i));
  return z;
}

// Truncated sum_ij c_ij pi(Z_i) pi(Z_j) for a constant real 2n x 2n matrix c.
inline Matrix fiber_operator(double lambda, const Eigen::MatrixXd &c, int size, YConvention conv)
{
  if (c.rows() != c.cols() || c.rows() % 2 != 0 || c.rows() == 0)
    throw config_error("fiber_operator: coefficient matrix must be 2n x 2n");
  const int n = static_cast<int>(c.rows() / 2);
  const auto z = generators(lambda, n, size, conv);
  const Eigen::Index dim = z.front().rows();
  Matrix sys = Matrix::Zero(dim, dim);
  for (int i = 0; i < 2 * n; ++i)
    for (int j = 0; j < 2 * n; ++j)
      if (c(i, j) != 0.0)
        sys += c(i, j) * (z[static_cast<std::size_t>(i)] * z[static_cast<std::size_t>(j)]);
  return sys;
}

// Solves the truncated constant-coefficient system on one lambda-fiber.
// The Schrodinger convention is the default: under the printed convention
// X^2 + Y^2 vanishes identically and most systems are singular.
inline Vector fiber_solve(double lambda, const Eigen::MatrixXd &c, const Vector &f_hat, int size,
                          YConvention conv = YConvention::schrodinger)
{
  const Matrix sys = fiber_operator(lambda, c, size, conv);
  if (f_hat.size() != sys.rows())
    throw config_error("fiber_solve: right-hand side has length " + std::to_string(f_hat.size()) + ", expected " +
                       std::to_string(sys.rows()));
  Eigen::FullPivLU<Matrix> lu(sys);
  if (!lu.isInvertible())
    throw singular_system_error("fiber_solve: truncated system is singular (rank " + std::to_string(lu.rank()) +
                                " of " + std::to_string(sys.rows()) + ")");
  Vector u = lu.solve(f_hat);
  const double fn = f_hat.norm();
  const double res = (sys * u - f_hat).norm();
  if (res > 1e-10 * std::max(fn, 1e-300) && fn > 0.0)
    throw singular_system_error("fiber_solve: residual " + std::to_string(res) + " too large; system is ill-conditioned");
  return u;
}

// CSV: row,col,re,im,interior. Only nonzero entries are written.
inline void write_matrix_csv(std::ostream &os, const RepMatrix &m)
{
  os << "row,col,re,im,interior\n";
  char buf[96];
  const int lim = m.interior_limit();
  for (int k = 0; k < m.size; ++k)
    for (int l = 0; l < m.size; ++l) {
      const cplx v = m(k, l);
      if (v == cplx(0.0))
        continue;
      std::snprintf(buf, sizeof buf, "%d,%d,%.17g,%.17g,%d\n", k, l, v.real(), v.imag(),
                    (k <= lim && l <= lim) ? 1 : 0);
      os << buf;
    }
}

inline void write_matrix_csv(const std::string &path, const RepMatrix &m)
{
  std::ofstream os(path);
  if (!os)
    throw config_error("cannot open " + path + " for writing");
  write_matrix_csv(os, m);
}

} // namespace campanato::heisenberg
