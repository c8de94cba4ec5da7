#pragma once

// Batch driver behind tools/campanato: INI experiment configs, the catalogs
// of coefficients, right-hand sides and a-functions, and report writers.
//
// Exit codes: 0 success, 2 configuration or input file, 3 precondition
// failure, 4 non-convergence, 1 anything else.

#include "campanato/cordes.hpp"
#include "campanato/errors.hpp"
#include "campanato/euclid_op.hpp"
#include "campanato/field.hpp"
#include "campanato/heisenberg.hpp"
#include "campanato/linear_solver.hpp"
#include "campanato/nearness.hpp"
#include "campanato/nonlinear_solver.hpp"
#include "campanato/trace.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace campanato::experiment {

using json = nlohmann::ordered_json;

namespace exit_code {
inline constexpr int ok = 0;
inline constexpr int internal = 1;
inline constexpr int config = 2;
inline constexpr int precondition = 3;
inline constexpr int non_convergence = 4;
} // namespace exit_code

// ---------------------------------------------------------------------------
// JSON output. Floats always go out as %.17g so equal runs give equal bytes;
// non-finite values become null.

namespace detail {

inline void dump(std::ostream &os, const json &j, int indent, int depth)
{
  const std::string pad(static_cast<std::size_t>(indent * (depth + 1)), ' ');
  const std::string close(static_cast<std::size_t>(indent * depth), ' ');
  if (j.is_object()) {
    if (j.empty()) {
      os << "{}";
      return;
    }
    os << "{\n";
    bool first = true;
    for (auto it = j.begin(); it != j.end(); ++it) {
      if (!first)
        os << ",\n";
      first = false;
      os << pad << json(it.key()).dump() << ": ";
      dump(os, it.value(), indent, depth + 1);
    }
    os << '\n' << close << '}';
  } else if (j.is_array()) {
    if (j.empty()) {
      os << "[]";
      return;
    }
    os << "[\n";
    for (std::size_t i = 0; i < j.size(); ++i) {
      if (i)
        os << ",\n";
      os << pad;
      dump(os, j[i], indent, depth + 1);
    }
    os << '\n' << close << ']';
  } else if (j.is_number_float()) {
    const double v = j.get<double>();
    if (!std::isfinite(v)) {
      os << "null";
      return;
    }
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    os << buf;
  } else {
    os << j.dump();
  }
}

} // namespace detail

inline std::string to_text(const json &j)
{
  std::ostringstream os;
  detail::dump(os, j, 2, 0);
  os << '\n';
  return os.str();
}

inline void write_json(const std::filesystem::path &path, const json &j)
{
  std::ofstream os(path, std::ios::binary);
  if (!os)
    throw config_error("cannot open " + path.string() + " for writing");
  os << to_text(j);
}

// ---------------------------------------------------------------------------
// Config access. Every key read is recorded; keys that nobody asked for are
// reported as configuration errors, which catches misspelled options.

class Settings
{
public:
  explicit Settings(boost::property_tree::ptree tree, std::string origin = "config")
      : tree_(std::move(tree)), origin_(std::move(origin))
  {
  }

  static Settings from_file(const std::string &path)
  {
    boost::property_tree::ptree tree;
    try {
      boost::property_tree::read_ini(path, tree);
    } catch (const boost::property_tree::ini_parser_error &e) {
      throw config_error("cannot parse config: " + std::string(e.what()));
    }
    return Settings(std::move(tree), path);
  }

  static Settings from_string(const std::string &text)
  {
    std::istringstream is(text);
    boost::property_tree::ptree tree;
    try {
      boost::property_tree::read_ini(is, tree);
    } catch (const boost::property_tree::ini_parser_error &e) {
      throw config_error("cannot parse config: " + std::string(e.what()));
    }
    return Settings(std::move(tree), "<string>");
  }

  bool has(const std::string &key) const { return tree_.get_optional<std::string>(path(key)).has_value(); }

  std::string str(const std::string &key, const std::optional<std::string> &fallback = std::nullopt)
  {
    used_.insert(key);
    if (auto v = tree_.get_optional<std::string>(path(key)))
      return trim(*v);
    if (fallback)
      return *fallback;
    throw config_error(origin_ + ": missing required key '" + key + "'");
  }

  double real(const std::string &key, std::optional<double> fallback = std::nullopt)
  {
    if (!has(key) && fallback) {
      used_.insert(key);
      return *fallback;
    }
    return parse_real(key, str(key));
  }

  long long integer(const std::string &key, std::optional<long long> fallback = std::nullopt)
  {
    if (!has(key) && fallback) {
      used_.insert(key);
      return *fallback;
    }
    const std::string s = str(key);
    std::size_t pos = 0;
    long long v = 0;
    try {
      v = std::stoll(s, &pos);
    } catch (const std::exception &) {
      throw config_error(origin_ + ": '" + key + "' is not an integer: '" + s + "'");
    }
    if (pos != s.size())
      throw config_error(origin_ + ": '" + key + "' is not an integer: '" + s + "'");
    return v;
  }

  bool boolean(const std::string &key, bool fallback)
  {
    if (!has(key)) {
      used_.insert(key);
      return fallback;
    }
    const std::string s = str(key);
    if (s == "true" || s == "1" || s == "yes")
      return true;
    if (s == "false" || s == "0" || s == "no")
      return false;
    throw config_error(origin_ + ": '" + key + "' is not a boolean: '" + s + "'");
  }

  std::vector<double> reals(const std::string &key, std::optional<std::vector<double>> fallback = std::nullopt)
  {
    if (!has(key) && fallback) {
      used_.insert(key);
      return *fallback;
    }
    std::vector<double> out;
    std::stringstream ss(str(key));
    std::string item;
    while (std::getline(ss, item, ','))
      out.push_back(parse_real(key, trim(item)));
    if (out.empty())
      throw config_error(origin_ + ": '" + key + "' is an empty list");
    return out;
  }

  std::vector<std::string> strings(const std::string &key)
  {
    std::vector<std::string> out;
    std::stringstream ss(str(key));
    std::string item;
    while (std::getline(ss, item, ','))
      out.push_back(trim(item));
    return out;
  }

  void set(const std::string &key, const std::string &value) { tree_.put(path(key), value); }

  // Throws on any key present in the file that was never read.
  void require_all_used() const
  {
    for (const auto &[section, body] : tree_) {
      if (body.empty()) {
        if (!used_.count(section))
          throw config_error(origin_ + ": unknown key '" + section + "'");
        continue;
      }
      for (const auto &[name, value] : body) {
        const std::string key = section + "." + name;
        if (!used_.count(key))
          throw config_error(origin_ + ": unknown key '" + key + "'");
      }
    }
  }

private:
  static boost::property_tree::ptree::path_type path(const std::string &key) { return {key, '.'}; }

  static std::string trim(const std::string &s)
  {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos)
      return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
  }

  double parse_real(const std::string &key, const std::string &s) const
  {
    std::size_t pos = 0;
    double v = 0.0;
    try {
      v = std::stod(s, &pos);
    } catch (const std::exception &) {
      throw config_error(origin_ + ": '" + key + "' is not a number: '" + s + "'");
    }
    if (pos != s.size() || !std::isfinite(v))
      throw config_error(origin_ + ": '" + key + "' is not a finite number: '" + s + "'");
    return v;
  }

  boost::property_tree::ptree tree_;
  std::string origin_;
  std::set<std::string> used_;
};

// ---------------------------------------------------------------------------
// Catalogs

using PointFn = std::function<double(std::span<const double>)>;

// Coefficients given as functions of x, so they can be sampled on any grid
// and reused inside an a-function.
struct AnalyticCoefficients
{
  std::string kind;
  int n = 0;
  std::vector<PointFn> entries; // row-major

  CoefficientField sample_on(const Grid &g) const
  {
    std::vector<ScalarField> e;
    for (const auto &fn : entries)
      e.push_back(sample(fn, g));
    return CoefficientField(n, std::move(e));
  }
};

struct CoefficientChoice
{
  std::optional<AnalyticCoefficients> analytic;
  CoefficientField field;
  json describe;
};

// [coefficients] kind = identity | diag | diag_perturbed | csv
//   diag = 1,2            diagonal values (diag, diag_perturbed)
//   amplitude = 0.1       off-diagonal amplitude (diag_perturbed)
//   wave = 1,1            wave vector of amp * sin(wave . x + phase)
//   phase = 0
//   paths = c11.csv,...   row-major entry files (csv)
inline CoefficientChoice coefficients(Settings &s, const Grid &g)
{
  const std::string kind = s.str("coefficients.kind", "identity");
  json d = {{"kind", kind}};
  if (kind == "csv") {
    const auto paths = s.strings("coefficients.paths");
    const auto n = static_cast<int>(std::lround(std::sqrt(static_cast<double>(paths.size()))));
    if (n * n != static_cast<int>(paths.size()))
      throw config_error("coefficients.paths must list n^2 files");
    std::vector<ScalarField> e;
    for (const auto &p : paths) {
      e.push_back(read_field_csv(p, g.period));
      if (!(e.back().grid() == g))
        throw config_error("coefficient file " + p + " does not match the configured grid");
    }
    d["paths"] = paths;
    return {std::nullopt, CoefficientField(n, std::move(e)), d};
  }

  AnalyticCoefficients a;
  a.kind = kind;
  a.n = g.dim;
  std::vector<double> diag(static_cast<std::size_t>(g.dim), 1.0);
  double amp = 0.0, phase = 0.0;
  std::vector<double> wave(static_cast<std::size_t>(g.dim), 1.0);
  if (kind == "identity") {
  } else if (kind == "diag" || kind == "diag_perturbed") {
    diag = s.reals("coefficients.diag");
    if (diag.size() != static_cast<std::size_t>(g.dim))
      throw config_error("coefficients.diag needs " + std::to_string(g.dim) + " values");
    d["diag"] = diag;
    if (kind == "diag_perturbed") {
      amp = s.real("coefficients.amplitude", 0.1);
      wave = s.reals("coefficients.wave", wave);
      phase = s.real("coefficients.phase", 0.0);
      if (wave.size() != static_cast<std::size_t>(g.dim))
        throw config_error("coefficients.wave needs " + std::to_string(g.dim) + " values");
      d["amplitude"] = amp;
      d["wave"] = wave;
      d["phase"] = phase;
    }
  } else {
    throw config_error("unknown coefficient kind '" + kind + "' (identity, diag, diag_perturbed, csv)");
  }
  for (int i = 0; i < g.dim; ++i)
    for (int j = 0; j < g.dim; ++j) {
      if (i == j) {
        const double v = diag[static_cast<std::size_t>(i)];
        a.entries.emplace_back([v](std::span<const double>) { return v; });
      } else if (amp != 0.0) {
        a.entries.emplace_back([amp, wave, phase](std::span<const double> x) {
          double arg = phase;
          for (std::size_t k = 0; k < wave.size(); ++k)
            arg += wave[k] * x[k];
          return amp * std::sin(arg);
        });
      } else {
        a.entries.emplace_back([](std::span<const double>) { return 0.0; });
      }
    }
  CoefficientField field = a.sample_on(g);
  return {std::move(a), std::move(field), d};
}

struct NonlinearChoice
{
  CaratheodoryFn fn;
  json describe;
};

// [nonlinear] a = trace | trace_sin | linear
//   scale = 1       a = scale * Tr xi (trace)
//   amplitude = 0.1 a = Tr xi + amplitude * sin(Tr xi) (trace_sin)
//   linear uses the analytic [coefficients] section.
inline NonlinearChoice a_function(Settings &s, const Grid &g,
                                  const std::optional<AnalyticCoefficients> &coeffs = std::nullopt)
{
  const std::string kind = s.str("nonlinear.a", "trace_sin");
  const int n = g.dim;
  json d = {{"a", kind}};
  CaratheodoryFn fn;
  fn.n_gens = n;
  fn.sample_box = s.real("nonlinear.sample_box", 10.0);
  d["sample_box"] = fn.sample_box;
  fn.period = g.period;
  if (kind == "trace") {
    const double scale = s.real("nonlinear.scale", 1.0);
    d["scale"] = scale;
    fn.eval = [n, scale](std::span<const double>, std::span<const double> xi) { return scale * trace_of(xi, n); };
  } else if (kind == "trace_sin") {
    const double amp = s.real("nonlinear.amplitude", 0.1);
    d["amplitude"] = amp;
    fn.eval = [n, amp](std::span<const double>, std::span<const double> xi) {
      const double t = trace_of(xi, n);
      return t + amp * std::sin(t);
    };
  } else if (kind == "linear") {
    if (!coeffs)
      throw config_error("nonlinear.a = linear needs analytic coefficients (not csv)");
    const auto entries = coeffs->entries;
    fn.eval = [entries](std::span<const double> x, std::span<const double> xi) {
      double v = 0.0;
      for (std::size_t e = 0; e < xi.size(); ++e)
        v += entries[e](x) * xi[e];
      return v;
    };
  } else {
    throw config_error("unknown a-function '" + kind + "' (trace, trace_sin, linear)");
  }
  return {std::move(fn), d};
}

struct RhsChoice
{
  ScalarField f;
  std::optional<ScalarField> exact; // manufactured solution when known
  json describe;
};

// [rhs] kind = sin_product | manufactured | csv
//   scale = -2     f = scale * prod_d sin(x_d) (sin_product)
//   max_mode = 6   band limit of the random u* (manufactured)
//   odd = false    keep only the odd part in x_1 (manufactured)
//   path = f.csv   (csv)
// `apply` maps u* to f for manufactured data.
inline RhsChoice rhs(Settings &s, const Grid &g, std::mt19937_64 &rng,
                     const std::function<ScalarField(const ScalarField &)> &apply)
{
  const std::string kind = s.str("rhs.kind", "sin_product");
  json d = {{"kind", kind}};
  if (kind == "sin_product") {
    const double scale = s.real("rhs.scale", -2.0);
    d["scale"] = scale;
    return {scale * sample(
                        [](std::span<const double> x) {
                          double p = 1.0;
                          for (double v : x)
                            p *= std::sin(v);
                          return p;
                        },
                        g),
            std::nullopt, d};
  }
  if (kind == "manufactured") {
    const auto max_mode = static_cast<int>(s.integer("rhs.max_mode", 6));
    const bool odd = s.boolean("rhs.odd", false);
    d["max_mode"] = max_mode;
    d["odd"] = odd;
    ScalarField u = random_band_limited(g, max_mode, rng);
    if (odd)
      u = odd_part(u);
    ScalarField f = apply(u);
    return {std::move(f), std::move(u), d};
  }
  if (kind == "csv") {
    const std::string p = s.str("rhs.path");
    d["path"] = p;
    ScalarField f = read_field_csv(p, g.period);
    if (!(f.grid() == g))
      throw config_error("rhs file " + p + " does not match the configured grid");
    return {std::move(f), std::nullopt, d};
  }
  throw config_error("unknown rhs kind '" + kind + "' (sin_product, manufactured, csv)");
}

// ---------------------------------------------------------------------------
// Runs

struct Overrides
{
  std::optional<std::uint64_t> seed;
  std::optional<double> tol;
  std::optional<int> max_iter;
};

struct Context
{
  Settings settings;
  std::filesystem::path out;
  std::uint64_t seed = 1;
  Overrides overrides;

  double tol(double fallback = 1e-9)
  {
    const double t = overrides.tol ? *overrides.tol : settings.real("solver.tol", fallback);
    if (overrides.tol)
      settings.real("solver.tol", fallback); // mark as read
    if (!(t > 0.0))
      throw config_error("tolerance must be positive");
    return t;
  }

  int max_iter(int fallback = 10000)
  {
    const auto m = settings.integer("solver.max_iter", fallback);
    const long long v = overrides.max_iter ? *overrides.max_iter : m;
    if (v < 1 || v > 100000000)
      throw config_error("max_iter must be in [1, 1e8]");
    return static_cast<int>(v);
  }
};

inline Grid grid_of(Settings &s)
{
  const auto dim = static_cast<int>(s.integer("grid.dim", 2));
  const auto points = static_cast<int>(s.integer("grid.points", 32));
  return make_grid(dim, points);
}

inline json grid_json(const Grid &g) { return {{"dim", g.dim}, {"points", g.points_per_axis}}; }

inline json cordes_json(const CordesReport &r)
{
  return {{"epsilon", r.epsilon},
          {"ratio_min", r.ratio_min},
          {"elliptic_margin", r.elliptic_margin},
          {"c0", r.c0},
          {"bound", r.contraction_bound},
          {"passed", r.passed},
          {"points_checked", r.points_checked}};
}

inline json trace_json(const IterationTrace &t)
{
  double mass = 0.0;
  if (!t.records.empty())
    mass = t.records.back().projected_mass;
  return {{"iterations", t.iterations},
          {"converged", t.converged},
          {"final_residual", t.final_residual()},
          {"max_contraction_factor", t.max_contraction_factor()},
          {"final_projected_mass", mass}};
}

inline json run_check_cordes(Context &ctx)
{
  const Grid g = grid_of(ctx.settings);
  auto coeffs = coefficients(ctx.settings, g);
  const double c0 = ctx.settings.real("cordes.c0", c0_torus_sharp);
  const CordesReport r = check(coeffs.field, c0);
  const double c0_aggregate = static_cast<double>(coeffs.field.n_gens());
  json out = {{"grid", grid_json(g)}, {"coefficients", coeffs.describe}};
  out.update(cordes_json(r));
  out["c0_sharp"] = c0_torus_sharp;
  out["c0_aggregate"] = c0_aggregate;
  out["bound_aggregate"] = aggregate_bound(r.epsilon, c0_aggregate);
  return out;
}

inline json run_solve_linear(Context &ctx)
{
  const Grid g = grid_of(ctx.settings);
  auto coeffs = coefficients(ctx.settings, g);
  std::mt19937_64 rng(ctx.seed);
  const auto data = rhs(ctx.settings, g, rng, [&](const ScalarField &u) { return apply_A(coeffs.field, u); });
  LinearSolveOptions opt;
  opt.tol = ctx.tol();
  opt.max_iter = ctx.max_iter();
  const auto res = solve(coeffs.field, data.f, opt);
  write_trace_csv((ctx.out / "trace.csv").string(), res.trace);
  write_field_csv((ctx.out / "solution.csv").string(), res.u);
  json out = {{"grid", grid_json(g)}, {"coefficients", coeffs.describe}, {"rhs", data.describe}};
  out["epsilon"] = res.report.epsilon;
  out["c0_sharp"] = res.report.c0;
  out["c0_aggregate"] = res.c0_aggregate;
  out["bound"] = res.report.contraction_bound;
  out["bound_aggregate"] = res.bound_aggregate;
  out.update(trace_json(res.trace));
  out["tol"] = opt.tol;
  out["relative_residual"] = residual(coeffs.field, res.u, data.f) / l2_norm(data.f);
  if (data.exact)
    out["relative_h2_error"] = h2dot_norm(res.u - *data.exact) / h2dot_norm(*data.exact);
  return out;
}

inline json condition_json(const ConditionReport &r)
{
  json j = {{"condition", to_string(r.condition)}, {"constants", json::object()}};
  for (const auto &[k, v] : r.constants)
    j["constants"][k] = v;
  j["seed"] = r.seed;
  j["samples_tested"] = r.samples_tested;
  j["passed"] = r.passed();
  if (r.counterexample) {
    const auto &c = *r.counterexample;
    j["counterexample"] = {{"x", c.x}, {"xi", c.xi}, {"tau", c.tau}, {"lhs", c.lhs}, {"rhs", c.rhs}};
  }
  if (!r.admissibility.empty()) {
    json adm = json::array();
    for (const auto &a : r.admissibility)
      adm.push_back({{"c0", a.c0}, {"mu", a.mu}, {"limit", a.limit}, {"holds", a.holds}});
    j["admissibility"] = adm;
  }
  return j;
}

// [verify] runs (C1)/(C2) sampling when enabled.
inline json run_verification(Context &ctx, const CaratheodoryFn &a, double alpha)
{
  Settings &s = ctx.settings;
  if (!s.boolean("verify.enabled", false))
    return nullptr;
  const auto samples = s.integer("verify.samples", 100000);
  const double M = s.real("verify.M", 0.8);
  const double gamma = s.real("verify.gamma", 0.0);
  const double delta = s.real("verify.delta", 0.1);
  const std::vector<double> c0s = s.reals("verify.c0", std::vector<double>{1.0, static_cast<double>(a.n_gens)});
  const auto c1 = verify_c1(a, M, samples, ctx.seed);
  const auto c2 = verify_c2(a, alpha, gamma, delta, samples, ctx.seed, AdmissibilityInput{M, c0s});
  return {{"c1", condition_json(c1)}, {"c2", condition_json(c2)}};
}

inline json run_solve_nonlinear(Context &ctx)
{
  const Grid g = grid_of(ctx.settings);
  std::optional<CoefficientChoice> coeffs;
  if (ctx.settings.str("nonlinear.a", "trace_sin") == "linear")
    coeffs = coefficients(ctx.settings, g);
  const auto a = a_function(ctx.settings, g, coeffs ? coeffs->analytic : std::nullopt);
  const double alpha = ctx.settings.real("nonlinear.alpha", 1.0);
  std::mt19937_64 rng(ctx.seed);
  const auto data = rhs(ctx.settings, g, rng, [&](const ScalarField &u) { return apply_nonlinear(a.fn, u); });
  NonlinearSolveOptions opt;
  opt.tol = ctx.tol();
  opt.max_iter = ctx.max_iter();
  opt.damping = ctx.settings.real("nonlinear.damping", 1.0);
  opt.max_halvings = static_cast<int>(ctx.settings.integer("nonlinear.max_halvings", 20));
  json verification = run_verification(ctx, a.fn, alpha);
  const auto res = solve_nonlinear(a.fn, data.f, alpha, opt);
  write_trace_csv((ctx.out / "trace.csv").string(), res.trace);
  write_field_csv((ctx.out / "solution.csv").string(), res.u);
  json out = {{"grid", grid_json(g)}, {"a_function", a.describe}, {"rhs", data.describe}, {"alpha", alpha}};
  if (coeffs)
    out["coefficients"] = coeffs->describe;
  out.update(trace_json(res.trace));
  out["final_damping"] = res.final_damping;
  out["tol"] = opt.tol;
  out["relative_residual"] = l2_norm(apply_nonlinear(a.fn, res.u) - data.f) / l2_norm(data.f);
  if (data.exact)
    out["relative_h2_error"] = h2dot_norm(res.u - *data.exact) / h2dot_norm(*data.exact);
  if (!verification.is_null())
    out["verification"] = verification;
  return out;
}

// B = Laplacian, A = the configured a-function, on random pairs (u, v).
inline json run_check_nearness(Context &ctx)
{
  Settings &s = ctx.settings;
  const Grid g = grid_of(s);
  std::optional<CoefficientChoice> coeffs;
  if (s.str("nonlinear.a", "trace_sin") == "linear")
    coeffs = coefficients(s, g);
  const auto a = a_function(s, g, coeffs ? coeffs->analytic : std::nullopt);
  const auto pairs = s.integer("nearness.pairs", 32);
  const auto max_mode = static_cast<int>(s.integer("nearness.max_mode", 6));
  const double amplitude = s.real("nearness.amplitude", 1.0);
  const double alpha = s.real("nearness.alpha", 1.0);
  const double K = s.real("nearness.K", 0.5);
  const std::vector<double> alphas = s.reals("nearness.alphas", std::vector<double>{alpha});
  if (pairs < 1)
    throw config_error("nearness.pairs must be positive");
  std::mt19937_64 rng(ctx.seed);
  OperatorPairSample<ScalarField> sample_set;
  sample_set.norm = [](const ScalarField &v) { return l2_norm(v); };
  for (long long i = 0; i < pairs; ++i) {
    const ScalarField u = amplitude * random_band_limited(g, max_mode, rng);
    const ScalarField v = amplitude * random_band_limited(g, max_mode, rng);
    sample_set.add(laplacian(u) - laplacian(v), apply_nonlinear(a.fn, u) - apply_nonlinear(a.fn, v));
  }
  const auto def = check_near_definition(sample_set, alpha, K);
  const auto est = estimate_constants(sample_set, alphas);
  json mu = json::array();
  for (const auto &[al, m] : est.mu_hat)
    mu.push_back({{"alpha", al}, {"mu_hat", m}});
  return {{"grid", grid_json(g)},
          {"a_function", a.describe},
          {"pairs", pairs},
          {"definition",
           {{"alpha", alpha}, {"K", K}, {"passed", def.passed}, {"worst_ratio", def.worst_ratio},
            {"worst_index", def.worst_index}}},
          {"M_hat", est.M_hat},
          {"mu_hat", mu}};
}

inline json run_mt_identity(Context &ctx)
{
  Settings &s = ctx.settings;
  const Grid g = grid_of(s);
  const auto samples = s.integer("mt.samples", 50);
  const auto max_mode = static_cast<int>(s.integer("mt.max_mode", g.points_per_axis / 4));
  if (samples < 1)
    throw config_error("mt.samples must be positive");
  std::mt19937_64 rng(ctx.seed);
  double worst_identity = 0.0, worst_pair = 0.0;
  for (long long i = 0; i < samples; ++i) {
    const ScalarField u = random_band_limited(g, max_mode, rng);
    worst_identity = std::max(worst_identity, std::abs(miranda_talenti_ratio(u) - 1.0));
    for (double r : miranda_talenti_pair_ratios(u))
      worst_pair = std::max(worst_pair, r);
  }
  return {{"grid", grid_json(g)},
          {"samples", samples},
          {"max_mode", max_mode},
          {"max_abs_ratio_minus_one", worst_identity},
          {"max_pair_ratio", worst_pair}};
}

inline heisenberg::YConvention convention_of(Settings &s, const char *fallback)
{
  const std::string c = s.str("heisenberg.convention", std::string(fallback));
  if (c == "printed")
    return heisenberg::YConvention::printed;
  if (c == "schrodinger")
    return heisenberg::YConvention::schrodinger;
  throw config_error("heisenberg.convention must be printed or schrodinger");
}

inline json run_heisenberg_norms(Context &ctx)
{
  using namespace heisenberg;
  Settings &s = ctx.settings;
  const auto lambdas = s.reals("heisenberg.lambda", std::vector<double>{1.0});
  const auto sizes = s.reals("heisenberg.sizes", std::vector<double>{16, 64, 256});
  const auto conv = convention_of(s, "printed");
  const auto ns = s.reals("heisenberg.n", std::vector<double>{1, 2, 3});
  const double c_pair = s.real("heisenberg.c_pair", 0.5);
  const bool dump = s.boolean("heisenberg.dump_matrices", true);
  const double claimed = 0.5;

  json norms = json::array();
  for (double lambda : lambdas)
    for (double sz : sizes) {
      const int size = static_cast<int>(sz);
      if (size != sz)
        throw config_error("heisenberg.sizes must be integers");
      const auto m = xy_linv(lambda, size, conv);
      const double me = max_entry_norm(m);
      const double sn = spectral_norm(m);
      norms.push_back({{"lambda", lambda},
                       {"size", size},
                       {"max_entry", me},
                       {"spectral_norm_truncated", sn},
                       {"max_entry_exceeds_claim", me > claimed},
                       {"spectral_exceeds_claim", sn > claimed}});
      if (dump) {
        char name[64];
        std::snprintf(name, sizeof name, "xy_linv_l%g_n%d.csv", lambda, size);
        write_matrix_csv((ctx.out / name).string(), m);
      }
    }
  const cplx e20 = xy_linv_closed_form(2, 0);
  json c0 = json::array();
  for (double nd : ns) {
    const auto r = c0_report(static_cast<int>(nd), c_pair);
    c0.push_back({{"n", r.n},
                  {"c_pair", r.c_pair},
                  {"c0_formula", r.c0_formula},
                  {"c0_stated", r.c0_stated},
                  {"range_formula", {r.range_formula.lower, r.range_formula.upper}},
                  {"range_stated", {r.range_stated.lower, r.range_stated.upper}},
                  {"range_corollary", {r.range_corollary.lower, r.range_corollary.upper}},
                  {"discrepancy", r.discrepancy}});
  }
  return {{"convention", to_string(conv)},
          {"claimed_norm", claimed},
          {"entry_2_0", {{"re", e20.real()}, {"im", e20.imag()}, {"modulus", std::abs(e20)}}},
          {"norms", norms},
          {"c0", c0}};
}

// [heisenberg] lambda, n, size, c (row-major 2n x 2n), rhs = basis | random, index
inline json run_fiber_solve(Context &ctx)
{
  using namespace heisenberg;
  Settings &s = ctx.settings;
  const double lambda = s.real("heisenberg.lambda", 1.0);
  const auto n = static_cast<int>(s.integer("heisenberg.n", 1));
  const auto size = static_cast<int>(s.integer("heisenberg.size", 16));
  const auto conv = convention_of(s, "schrodinger");
  if (n < 1)
    throw config_error("heisenberg.n must be >= 1");
  std::vector<double> cd(static_cast<std::size_t>(4 * n * n), 0.0);
  for (int i = 0; i < 2 * n; ++i)
    cd[static_cast<std::size_t>(i * 2 * n + i)] = 1.0;
  cd = s.reals("heisenberg.c", cd);
  if (cd.size() != static_cast<std::size_t>(4 * n * n))
    throw config_error("heisenberg.c needs (2n)^2 values");
  Eigen::MatrixXd c(2 * n, 2 * n);
  for (int i = 0; i < 2 * n; ++i)
    for (int j = 0; j < 2 * n; ++j)
      c(i, j) = cd[static_cast<std::size_t>(i * 2 * n + j)];
  const double total = std::pow(static_cast<double>(size), n);
  if (total > 4096)
    throw config_error("heisenberg: fiber dimension exceeds 4096");
  const auto dim = static_cast<Eigen::Index>(total);
  const std::string kind = s.str("heisenberg.rhs", "basis");
  Vector f = Vector::Zero(dim);
  if (kind == "basis") {
    const auto idx = s.integer("heisenberg.index", 0);
    if (idx < 0 || idx >= dim)
      throw config_error("heisenberg.index out of range");
    f(static_cast<Eigen::Index>(idx)) = 1.0;
  } else if (kind == "random") {
    std::mt19937_64 rng(ctx.seed);
    std::normal_distribution<double> gauss;
    for (Eigen::Index i = 0; i < dim; ++i) {
      const double re = gauss(rng);
      f(i) = cplx(re, gauss(rng));
    }
  } else {
    throw config_error("heisenberg.rhs must be basis or random");
  }
  const Vector u = fiber_solve(lambda, c, f, size, conv);
  const Matrix sys = fiber_operator(lambda, c, size, conv);
  {
    std::ofstream os(ctx.out / "solution.csv", std::ios::binary);
    if (!os)
      throw config_error("cannot write solution.csv");
    os << "index,re,im\n";
    char buf[80];
    for (Eigen::Index i = 0; i < u.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%ld,%.17g,%.17g\n", static_cast<long>(i), u(i).real(), u(i).imag());
      os << buf;
    }
  }
  const double fn = f.norm();
  return {{"lambda", lambda},
          {"n", n},
          {"size", size},
          {"convention", to_string(conv)},
          {"c", cd},
          {"rhs", kind},
          {"solution_norm", u.norm()},
          {"relative_residual", fn > 0.0 ? (sys * u - f).norm() / fn : 0.0}};
}

inline const std::map<std::string, json (*)(Context &)> &commands()
{
  static const std::map<std::string, json (*)(Context &)> table = {
      {"solve-linear", run_solve_linear},       {"solve-nonlinear", run_solve_nonlinear},
      {"check-cordes", run_check_cordes},       {"check-nearness", run_check_nearness},
      {"heisenberg-norms", run_heisenberg_norms}, {"mt-identity", run_mt_identity},
      {"fiber-solve", run_fiber_solve}};
  return table;
}

struct Outcome
{
  int code = exit_code::ok;
  json report; // summary on success, error document otherwise
};

inline json error_json(const char *kind, const std::string &message, int code)
{
  return {{"status", "error"}, {"kind", kind}, {"message", message}, {"exit_code", code}};
}

// Runs one experiment and writes summary.json (or error.json) into `out`.
// `out` falls back to [experiment] out, then "out".
inline Outcome run(Settings settings, std::optional<std::filesystem::path> out_dir, const Overrides &ov)
{
  Outcome o;
  std::filesystem::path out = out_dir.value_or("out");
  std::string command;
  auto fail = [&](const char *kind, const std::string &msg, int code, json extra = nullptr) {
    o.code = code;
    o.report = error_json(kind, msg, code);
    if (!command.empty())
      o.report["command"] = command;
    if (!extra.is_null())
      o.report.update(extra);
  };
  try {
    if (!out_dir)
      out = settings.str("experiment.out", std::string("out"));
    else
      settings.str("experiment.out", std::string());
    command = settings.str("experiment.command");
    const auto it = commands().find(command);
    if (it == commands().end())
      throw config_error("unknown command '" + command + "'");
    std::uint64_t seed = ov.seed ? *ov.seed : static_cast<std::uint64_t>(settings.integer("experiment.seed", 1));
    if (ov.seed)
      settings.integer("experiment.seed", 1);
    std::error_code ec;
    std::filesystem::create_directories(out, ec);
    if (ec)
      throw config_error("cannot create output directory " + out.string() + ": " + ec.message());
    Context ctx{std::move(settings), out, seed, ov};
    json body = it->second(ctx);
    ctx.settings.require_all_used();
    o.report = {{"status", "ok"}, {"command", command}, {"seed", seed}};
    o.report.update(body);
  } catch (const config_error &e) {
    fail(e.kind(), e.what(), exit_code::config);
  } catch (const cordes_failed_error &e) {
    fail(e.kind(), e.what(), exit_code::precondition, {{"cordes", cordes_json(e.report())}});
  } catch (const precondition_error &e) {
    fail(e.kind(), e.what(), exit_code::precondition);
  } catch (const non_convergence_error &e) {
    fail(e.kind(), e.what(), exit_code::non_convergence, {{"trace", trace_json(e.trace())}});
    std::error_code ec;
    if (std::filesystem::is_directory(out, ec))
      write_trace_csv((out / "trace.csv").string(), e.trace());
  } catch (const convergence_error &e) {
    fail(e.kind(), e.what(), exit_code::non_convergence);
  } catch (const std::exception &e) {
    fail("internal", e.what(), exit_code::internal);
  }
  std::error_code ec;
  std::filesystem::create_directories(out, ec);
  if (!ec) {
    try {
      write_json(out / (o.code == exit_code::ok ? "summary.json" : "error.json"), o.report);
    } catch (const std::exception &) {
      // the caller still prints the report
    }
  }
  return o;
}

} // namespace campanato::experiment
