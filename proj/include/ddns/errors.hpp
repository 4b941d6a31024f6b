#pragma once

#include <stdexcept>
#include <string>

namespace ddns {

/// Bad input: malformed files, inconsistent grids, invalid parameters.
/// The command-line tool maps this to exit code 2.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A computation could not be completed (non-convergence, invariant breach).
/// The command-line tool maps this to exit code 3.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// min rho_{<=Q} <= 0: the cutoff Q is too coarse for the density contrast.
class NonPositiveCoarseDensity : public NumericalError {
 public:
  NonPositiveCoarseDensity(int Q, double min_value)
      : NumericalError("coarse density rho_{<=Q} is not positive at Q=" + std::to_string(Q) +
                       " (min " + std::to_string(min_value) + ")"),
        cutoff_index(Q),
        min_coarse_density(min_value) {}
  int cutoff_index;
  double min_coarse_density;
};

class PressureNonConvergence : public NumericalError {
 public:
  PressureNonConvergence(int iterations, double residual, double contraction)
      : NumericalError("variable-density pressure iteration failed after " +
                       std::to_string(iterations) + " iterations (residual " +
                       std::to_string(residual) + ", measured contraction " +
                       std::to_string(contraction) + ")"),
        iterations(iterations),
        residual(residual),
        contraction(contraction) {}
  int iterations;
  double residual;
  double contraction;
};

class CflViolation : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace ddns
