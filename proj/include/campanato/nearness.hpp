#pragma once

// Campanato nearness of two operators, checked on finite samples of
// difference images (B u - B v, A u - A v). Nothing here is a proof: a pass
// only says no sampled pair violates the inequality, and every report
// carries the worst observed ratio so the margin is visible.

#include "campanato/errors.hpp"

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace campanato {

// Anything closed under b - s * a, e.g. ScalarField or Eigen::VectorXd.
template <class V>
concept SampleVector = std::copy_constructible<V> && requires(const V &a, const V &b, double s) {
  { b - s * a } -> std::convertible_to<V>;
};

template <SampleVector V>
struct OperatorPairSample
{
  std::vector<V> b_diffs; // B u - B v
  std::vector<V> a_diffs; // A u - A v
  std::function<double(const V &)> norm;

  std::size_t size() const { return b_diffs.size(); }

  void add(V b_diff, V a_diff)
  {
    b_diffs.push_back(std::move(b_diff));
    a_diffs.push_back(std::move(a_diff));
  }

  void validate() const
  {
    if (b_diffs.empty())
      throw degenerate_input_error("nearness: empty sample");
    if (b_diffs.size() != a_diffs.size())
      throw config_error("nearness: every pair needs both difference images");
    if (!norm)
      throw config_error("nearness: no norm supplied");
  }
};

struct NearnessReport
{
  bool passed = false;
  double worst_ratio = 0.0; // max ||b - alpha a|| / ||b||
  std::size_t worst_index = 0;
  std::size_t pairs = 0;
};

struct SufficientReport
{
  bool passed = false;
  double min_lower_ratio = 0.0; // min ||a|| / ||b||, compared with M
  std::size_t lower_index = 0;
  double max_upper_ratio = 0.0; // max ||b - alpha a|| / ||b||, compared with mu
  std::size_t upper_index = 0;
  std::size_t pairs = 0;
};

namespace detail {

inline double safe_ratio(double num, double den)
{
  if (den > 0.0)
    return num / den;
  return num > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
}

template <class V>
double combination_norm(const OperatorPairSample<V> &s, std::size_t i, double alpha)
{
  const V d = s.b_diffs[i] - alpha * s.a_diffs[i];
  return s.norm(d);
}

} // namespace detail

// ||B u - B v - alpha (A u - A v)|| <= K ||B u - B v|| on every pair.
template <class V>
NearnessReport check_near_definition(const OperatorPairSample<V> &s, double alpha, double K)
{
  s.validate();
  if (!(alpha > 0.0))
    throw config_error("check_near_definition: alpha must be positive");
  if (!(K > 0.0 && K < 1.0))
    throw config_error("check_near_definition: K must lie in (0,1)");
  NearnessReport r;
  r.pairs = s.size();
  r.passed = true;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double lhs = detail::combination_norm(s, i, alpha);
    const double bn = s.norm(s.b_diffs[i]);
    if (lhs > K * bn)
      r.passed = false;
    const double ratio = detail::safe_ratio(lhs, bn);
    // first index wins ties
    if (i == 0 || ratio > r.worst_ratio) {
      r.worst_ratio = ratio;
      r.worst_index = i;
    }
  }
  return r;
}

// ||A u - A v|| >= M ||B u - B v|| and ||B u - B v - alpha(A u - A v)|| <= mu ||B u - B v||
// with mu < 1 + alpha M.
template <class V>
SufficientReport check_near_sufficient(const OperatorPairSample<V> &s, double alpha, double M, double mu)
{
  s.validate();
  if (!(alpha > 0.0) || !(M > 0.0))
    throw config_error("check_near_sufficient: alpha and M must be positive");
  if (!(mu < 1.0 + alpha * M))
    throw config_error("check_near_sufficient: need mu < 1 + alpha M (mu = " + std::to_string(mu) +
                       ", 1 + alpha M = " + std::to_string(1.0 + alpha * M) + ")");
  SufficientReport r;
  r.pairs = s.size();
  r.passed = true;
  r.min_lower_ratio = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double bn = s.norm(s.b_diffs[i]);
    const double an = s.norm(s.a_diffs[i]);
    const double comb = detail::combination_norm(s, i, alpha);
    if (an < M * bn || comb > mu * bn)
      r.passed = false;
    const double lower = detail::safe_ratio(an, bn);
    const double upper = detail::safe_ratio(comb, bn);
    if (lower < r.min_lower_ratio) {
      r.min_lower_ratio = lower;
      r.lower_index = i;
    }
    if (i == 0 || upper > r.max_upper_ratio) {
      r.max_upper_ratio = upper;
      r.upper_index = i;
    }
  }
  return r;
}

struct ConstantEstimate
{
  double M_hat = 0.0;
  std::vector<std::pair<double, double>> mu_hat; // (alpha, mu_hat(alpha))
};

// Empirical M = min ||a|| / ||b|| and mu(alpha) = max ||b - alpha a|| / ||b||.
template <class V>
ConstantEstimate estimate_constants(const OperatorPairSample<V> &s, const std::vector<double> &alphas)
{
  s.validate();
  std::vector<double> bn(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    bn[i] = s.norm(s.b_diffs[i]);
    if (!(bn[i] > 0.0))
      throw degenerate_input_error("estimate_constants: pair " + std::to_string(i) + " has B u - B v = 0");
  }
  ConstantEstimate est;
  est.M_hat = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < s.size(); ++i)
    est.M_hat = std::min(est.M_hat, s.norm(s.a_diffs[i]) / bn[i]);
  for (double alpha : alphas) {
    double mu = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i)
      mu = std::max(mu, detail::combination_norm(s, i, alpha) / bn[i]);
    est.mu_hat.emplace_back(alpha, mu);
  }
  return est;
}

struct DefinitionConstants
{
  double alpha;
  double K;
};

// Converts sufficient-condition constants (alpha, M, mu) into constants of
// the nearness definition for norms coming from an inner product. Expanding
// ||b - s a||^2 and using ||a|| >= M ||b|| gives
//   ||b - s a|| <= sqrt(1 - s^2 M^2) ||b||,  s = alpha/2 + (1 - mu^2)/(2 alpha M^2),
// valid when 0 < s <= alpha. Returns nothing when that s is not admissible,
// which happens once mu^2 >= 1 + alpha^2 M^2.
inline std::optional<DefinitionConstants> reduce_to_definition(double alpha, double M, double mu)
{
  if (!(alpha > 0.0) || !(M > 0.0) || mu < 0.0)
    return std::nullopt;
  double s = 0.5 * alpha + (1.0 - mu * mu) / (2.0 * alpha * M * M);
  if (!(s > 0.0))
    return std::nullopt;
  // Past alpha the minimizer is clamped; at s = alpha the bound is mu itself
  // (and s >= alpha already forces mu < 1).
  if (s >= alpha)
    return DefinitionConstants{alpha, mu};
  return DefinitionConstants{s, std::sqrt(std::max(0.0, 1.0 - s * s * M * M))};
}

} // namespace campanato
