#pragma once

// Two-dimensional pseudo-spectral solver for density-dependent incompressible
// flow on the periodic unit square:
//   rho_t = -div(rho u)
//   u_t   = G - grad(p)/rho,  G = -(u.grad)u + (mu/rho) lap u + f
// with p from div(grad(p)/rho) = div G. Classic RK4 in time, 2/3-rule
// dealiasing of products, and a Leray projection closing every step.

#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "ddns/energy_budget.hpp"
#include "ddns/field_factory.hpp"

namespace ddns {

/// f = amplitude cos(frequency t) (sin(2 pi k y), 0): a Kolmogorov-type shear
/// force; frequency 0 gives a steady force.
struct ForcingSpec {
  double amplitude = 0.0;
  int wavenumber = 1;
  double frequency = 0.0;

  bool active() const { return amplitude != 0.0; }
};

Field forcing_field(const TorusGrid& grid, const ForcingSpec& spec, double t);

struct SolverConfig {
  int n = 64;
  double mu = 0.0;
  double end_time = 0.0;
  double dt = 1e-3;
  bool dealias = true;
  double pressure_tol = 1e-12;
  int pressure_max_iter = 500;
  double cfl = 0.5;  ///< dt <= cfl * dx / max|u|, cfl <= 0.5
  ForcingSpec forcing;
  GeneratorSpec rho0{GeneratorKind::constant, 0, 1.0};
  GeneratorSpec u0{GeneratorKind::taylor_green};
  int snapshot_every = 1;

  /// Throws ValidationError.
  void validate() const;
  /// Number of steps; end_time must be a whole multiple of dt (to 1e-9 relative).
  long long steps() const;
  /// Canonical key=value serialisation (sorted keys).
  std::string canonical() const;
};

struct PressureSolve {
  Field p;
  int iterations = 0;
  double residual = 0.0;     ///< final ||div G - div(grad p/rho)|| / ||div G||
  double contraction = 0.0;  ///< geometric-mean residual ratio per iteration
};

/// Richardson iteration p <- p + L^-1 [div G - div(grad p / rho)] with
/// L = mean(1/rho) div grad. Works in any dimension. Throws
/// PressureNonConvergence when the residual grows or max_iter is reached.
PressureSolve pressure_solve(const Field& rho, const Field& G, double tol, int max_iter, bool dealias = true,
                             const Field* guess = nullptr);

/// G = -(u.grad)u + (mu/rho) lap u + f for a given state.
Field momentum_forcing(const Field& rho, const Field& u, double mu, const std::optional<Field>& force, bool dealias);

/// The pressure consistent with a state, as stored in snapshots.
PressureSolve consistent_pressure(const SolutionState& state, double tol = 1e-12, int max_iter = 500,
                                  bool dealias = true);

struct StepDiagnostics {
  double t = 0.0;
  int pressure_iterations = 0;  ///< summed over the four stages
  double pressure_residual = 0.0;
  double contraction = 0.0;     ///< worst stage
  double divergence_defect = 0.0;
  double rho_min = 0.0;
  double rho_max = 0.0;
  double overshoot = 0.0;  ///< beyond the bounds of the state before the step
  bool gibbs_warning = false;
  double cfl_number = 0.0;
};

/// One RK4 step of size config.dt. The returned state carries the consistent
/// pressure and force at the new time. Throws CflViolation,
/// PressureNonConvergence, or NumericalError on loss of positivity.
SolutionState step(const SolutionState& state, const SolverConfig& config, StepDiagnostics* diag = nullptr);

inline constexpr const char* kSchemeTag = "rk4-pseudospectral-dealias23-richardson";
inline constexpr const char* kSolverVersion = "1";

struct RunResult {
  std::vector<SolutionState> snapshots;
  std::vector<StepDiagnostics> diagnostics;
  std::string config_hash;
  std::string scheme = kSchemeTag;
  std::string version = kSolverVersion;
  double max_overshoot = 0.0;  ///< against the initial density bounds
  bool gibbs_warning = false;

  void write_diagnostics_csv(std::ostream& os) const;
};

/// The initial state from the generator specs: velocity Leray-projected and,
/// with dealiasing on, both fields truncated to the 2/3 band.
SolutionState initial_state(const SolverConfig& config);

RunResult run(const SolverConfig& config);
RunResult run(const SolverConfig& config, const SolutionState& initial);

// ---------------------------------------------------------------------------
// Weak-form residuals

struct WeakResidualReport {
  double mass = 0.0;       ///< max over scalar test functions
  double momentum = 0.0;   ///< max over vector test functions; needs pressure
  double incompressibility = 0.0;
  bool momentum_checked = false;
  int test_functions = 0;
};

/// Evaluates the three weak identities with time-independent test functions
/// cos/sin(2 pi k.x), |k| <= k_max (constants included), and their vector
/// versions along each axis. Time integrals by the trapezoid rule.
WeakResidualReport weak_residuals(std::span<const SolutionState> states, int k_max = 4);

/// Pressure for rho = 1 from the Poisson problem div grad p = -div div(u (x) u).
Field unit_density_pressure(const Field& u);

}  // namespace ddns
