#pragma once

#include <stdexcept>
#include <string>

namespace sg {

// Configuration / validation problems: CLI exit code 1.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Numerical failures (non-convergence, degenerate data): CLI exit code 2.
struct NumericalError : std::runtime_error {
  explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

struct GeometryError : NumericalError {
  explicit GeometryError(const std::string& msg) : NumericalError(msg) {}
};

struct SolveError : NumericalError {
  double last_residual = 0.0;
  SolveError(const std::string& msg, double resid)
      : NumericalError(msg), last_residual(resid) {}
};

struct StepError : NumericalError {
  double t = 0.0;
  StepError(const std::string& msg, double time) : NumericalError(msg), t(time) {}
};

}  // namespace sg
