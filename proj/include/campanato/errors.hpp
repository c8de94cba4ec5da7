#pragma once

#include <stdexcept>
#include <string>

namespace campanato {

// Base of every error raised by the library. The CLI maps the three
// families below onto its exit codes.
class error : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
  virtual const char *kind() const noexcept { return "error"; }
};

// Invalid parameters, unreadable files, malformed input text.
class config_error : public error
{
public:
  using error::error;
  const char *kind() const noexcept override { return "config_error"; }
};

// A mathematical precondition of an operation does not hold.
class precondition_error : public error
{
public:
  using error::error;
  const char *kind() const noexcept override { return "precondition_error"; }
};

// Non-finite values in sampled or loaded data.
class data_error : public precondition_error
{
public:
  using precondition_error::precondition_error;
  const char *kind() const noexcept override { return "data_error"; }
};

// Right-hand side outside the range of the periodic Laplacian (nonzero mean).
class solvability_error : public precondition_error
{
public:
  using precondition_error::precondition_error;
  const char *kind() const noexcept override { return "solvability_error"; }
};

// Constant fields, vanishing coefficient norms, zero denominators in samples.
class degenerate_input_error : public precondition_error
{
public:
  using precondition_error::precondition_error;
  const char *kind() const noexcept override { return "degenerate_input_error"; }
};

class singular_system_error : public precondition_error
{
public:
  using precondition_error::precondition_error;
  const char *kind() const noexcept override { return "singular_system_error"; }
};

// Iteration budget exhausted. Solvers throw a derived type carrying the trace.
class convergence_error : public error
{
public:
  using error::error;
  const char *kind() const noexcept override { return "convergence_error"; }
};

} // namespace campanato
