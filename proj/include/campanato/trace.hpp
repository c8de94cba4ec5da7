#pragma once

#include "campanato/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

namespace campanato {

struct IterationRecord
{
  int iter = 0;
  double residual = 0.0;  // ||A u_k - f||_{L2}
  double increment = 0.0; // ||u_k - u_{k-1}||_{H2dot}
  // increment_k / increment_{k-1}; NaN on the first iteration.
  double contraction_factor = std::numeric_limits<double>::quiet_NaN();
  // Mean removed from the right-hand side before inversion.
  double projected_mass = 0.0;
  double damping = 1.0;
};

struct IterationTrace
{
  std::vector<IterationRecord> records;
  int iterations = 0;
  bool converged = false;

  void push(IterationRecord r)
  {
    if (!records.empty() && records.back().increment > 0.0)
      r.contraction_factor = r.increment / records.back().increment;
    records.push_back(r);
    iterations = static_cast<int>(records.size());
  }

  double final_residual() const { return records.empty() ? 0.0 : records.back().residual; }

  double max_contraction_factor() const
  {
    double m = 0.0;
    for (const auto &r : records)
      if (!std::isnan(r.contraction_factor))
        m = std::max(m, r.contraction_factor);
    return m;
  }
};

class non_convergence_error : public convergence_error
{
public:
  non_convergence_error(const std::string &what, IterationTrace trace)
      : convergence_error(what), trace_(std::move(trace))
  {
  }
  const char *kind() const noexcept override { return "non_convergence"; }
  const IterationTrace &trace() const { return trace_; }

private:
  IterationTrace trace_;
};

// CSV: iter,residual,increment,contraction_factor (empty when undefined).
inline void write_trace_csv(std::ostream &os, const IterationTrace &trace)
{
  os << "iter,residual,increment,contraction_factor\n";
  char buf[32];
  for (const auto &r : trace.records) {
    os << r.iter << ',';
    std::snprintf(buf, sizeof buf, "%.17g", r.residual);
    os << buf << ',';
    std::snprintf(buf, sizeof buf, "%.17g", r.increment);
    os << buf << ',';
    if (!std::isnan(r.contraction_factor)) {
      std::snprintf(buf, sizeof buf, "%.17g", r.contraction_factor);
      os << buf;
    }
    os << '\n';
  }
}

inline void write_trace_csv(const std::string &path, const IterationTrace &trace)
{
  std::ofstream os(path);
  if (!os)
    throw config_error("cannot open " + path + " for writing");
  write_trace_csv(os, trace);
}

} // namespace campanato
