// campanato: run one experiment described by an INI config.
//
//   campanato --config configs/poisson.ini --out runs/poisson
//
// Writes summary.json (or error.json), plus trace.csv / solution.csv for
// solver commands. See README.md for the config keys.

#include "campanato/experiment.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

namespace ex = campanato::experiment;

namespace {

const char *footer = R"(Commands ([experiment] command = ...):
  solve-linear      sum c_ij d_i d_j u = f on the torus by Cordes fixed point
  solve-nonlinear   a(x, D^2 u) = f by damped image-space iteration
  check-cordes      ellipticity, Cordes epsilon and contraction bound
  check-nearness    sampled nearness of a(x, D^2 .) to the Laplacian
  heisenberg-norms  X Y L^{-1} entries and norms, C0 report for H^n
  mt-identity       torus Miranda-Talenti ratios on random fields
  fiber-solve       constant-coefficient system on one Heisenberg fiber

Defaults: seed 1, tol 1e-9, max-iter 10000, out ./out, grid 2D 32^2.
Exit codes: 0 ok, 2 config/input file, 3 precondition, 4 non-convergence.)";

} // namespace

int main(int argc, char **argv)
{
  CLI::App app{"Non-divergence elliptic solvers on the torus and Heisenberg fiber checks"};
  app.footer(footer);
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<double> tol;
  std::optional<int> max_iter;
  bool quiet = false;
  app.add_option("--config", config, "experiment config (INI)")->required();
  app.add_option("--out", out, "output directory (overrides [experiment] out)");
  app.add_option("--seed", seed, "64-bit seed (overrides [experiment] seed)");
  app.add_option("--tol", tol, "solver tolerance (overrides [solver] tol)")->check(CLI::PositiveNumber);
  app.add_option("--max-iter", max_iter, "iteration cap (overrides [solver] max_iter)")->check(CLI::PositiveNumber);
  app.add_flag("-q,--quiet", quiet, "do not echo the report to stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : ex::exit_code::config;
  }

  std::optional<std::filesystem::path> out_dir;
  if (!out.empty())
    out_dir = out;

  ex::Outcome result;
  try {
    result = ex::run(ex::Settings::from_file(config), out_dir, {seed, tol, max_iter});
  } catch (const campanato::config_error &e) {
    result.code = ex::exit_code::config;
    result.report = ex::error_json(e.kind(), e.what(), result.code);
    const std::filesystem::path dir = out_dir.value_or("out");
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (!ec)
      ex::write_json(dir / "error.json", result.report);
  }

  if (result.code == ex::exit_code::ok) {
    if (!quiet)
      std::cout << ex::to_text(result.report);
  } else {
    std::cerr << ex::to_text(result.report);
  }
  return result.code;
}
