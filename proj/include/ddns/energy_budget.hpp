#pragma once

// Coarse-grained energy budget for density-dependent incompressible flow:
// Favre-filtered velocity U = (rho u)_{<=Q} / rho_{<=Q}, the coarse energy
// E_{<=Q}, the commutator F_Q and its five-term decomposition, the flux Pi_Q,
// and the viscous / forcing terms integrated over a snapshot series.

#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "ddns/spectral.hpp"

namespace ddns {

/// One snapshot (rho, u, p, f) at time t.
struct SolutionState {
  Field rho;
  Field u;
  std::optional<Field> p;
  std::optional<Field> force;
  double t = 0.0;
  double mu = 0.0;
  double rho_lo = 0.0;  ///< lower density bound (grid minimum unless supplied)
  double rho_hi = 0.0;  ///< upper density bound

  /// Builds a state and checks its invariants: 0 < rho everywhere, matching
  /// grids and shapes, finite mu >= 0, and divergence_defect(u) <= div_tol.
  /// Throws ValidationError.
  static SolutionState make(Field rho, Field u, std::optional<Field> p = std::nullopt,
                            std::optional<Field> force = std::nullopt, double t = 0.0, double mu = 0.0,
                            double div_tol = 1e-10);

  const TorusGrid& grid() const { return rho.grid(); }
};

/// Kinetic energy 1/2 int rho |u|^2.
double kinetic_energy(const SolutionState& state);
/// ||grad u||_2^2.
double velocity_gradient_norm2(const SolutionState& state);
/// int rho u . f (0 without a force).
double force_power(const SolutionState& state);

struct FavreVelocity {
  Field U;
  double min_coarse_density = 0.0;
};

/// Throws NonPositiveCoarseDensity when min rho_{<=Q} <= 0.
FavreVelocity favre_velocity(const SolutionState& state, int Q, const CutoffProfile& cutoff);

/// 1/2 int |(rho u)_{<=Q}|^2 / rho_{<=Q}.
double coarse_energy(const SolutionState& state, int Q, const CutoffProfile& cutoff);

/// F_Q = (rho u (x) u)_{<=Q} - U (x) (rho u)_{<=Q}, a d*d tensor field.
Field flux_tensor(const SolutionState& state, int Q, const CutoffProfile& cutoff);

/// r_Q(f, g) in expanded multiplier form (fg)_{<=Q} - f_{<=Q} g - f g_{<=Q} + f g.
/// Scalar or vector f, g; vectors give the tensor f (x) g version.
Field remainder(const Field& f, const Field& g, int Q, const CutoffProfile& cutoff);
/// r_Q(rho, u, u), a d*d tensor field.
Field remainder3(const Field& rho, const Field& u, int Q, const CutoffProfile& cutoff);

/// The five terms whose sum equals F_Q.
struct CommutatorTerms {
  Field triple_remainder;    ///< r_Q(rho, u, u)
  Field mass_defect_square;  ///< -w (x) w / rho_{<=Q}, w = (rho u)_{<=Q} - rho_{<=Q} u_{<=Q}
  Field high_triple;         ///< rho_{>Q} u_{>Q} (x) u_{>Q}
  Field cross;               ///< 2 Sym(w (x) u_{>Q})
  Field density_commutator;  ///< rho [(u (x) u)_{<=Q} - u_{<=Q} (x) u_{<=Q}]
};

CommutatorTerms commutator_terms(const SolutionState& state, int Q, const CutoffProfile& cutoff);

struct DecompositionResidual {
  double absolute = 0.0;      ///< ||F_Q - sum of terms||_2
  double flux_norm = 0.0;     ///< ||F_Q||_2
  double term_scale = 0.0;    ///< max of ||F_Q||_2, the five term norms and ||rho u (x) u||_2
  double relative = 0.0;      ///< absolute / flux_norm, or absolute / term_scale when F_Q is degenerate
  bool degenerate = false;    ///< ||F_Q||_2 <= 1e-8 * term_scale
};

DecompositionResidual decomposition_check(const SolutionState& state, int Q, const CutoffProfile& cutoff);

struct FluxResult {
  double total = 0.0;
  double nonlinear = 0.0;  ///< int F_Q : grad U
  double pressure = 0.0;   ///< int p_{<=Q} div U
  bool pressure_present = false;
  double min_coarse_density = 0.0;
};

/// Pi_Q. Without a pressure field the pressure term is 0 and flagged absent.
FluxResult flux(const SolutionState& state, int Q, const CutoffProfile& cutoff);

/// Per-snapshot integrands of the budget at one Q.
struct BudgetRates {
  double coarse_energy = 0.0;  ///< E_{<=Q}
  FluxResult flux;             ///< Pi_Q
  double viscous = 0.0;        ///< mu int grad u_{<=Q} : grad U
  double force = 0.0;          ///< int (rho f)_{<=Q} . U
};

BudgetRates budget_rates(const SolutionState& state, int Q, const CutoffProfile& cutoff);

// ---------------------------------------------------------------------------
// Time series

/// One (t, Q) row of the flux spectrum. Time-integrated columns run from the
/// first snapshot of the series.
struct FluxRow {
  double t = 0.0;
  int Q = 0;
  double E_leQ = 0.0;
  double Pi_Q = 0.0;
  double Pi_Q_pressure = 0.0;
  double eps_Q = 0.0;    ///< mu int_0^t int grad u_{<=Q} : grad U
  double force_Q = 0.0;  ///< int_0^t int (rho f)_{<=Q} . U
  double int_Pi_Q = 0.0;
  double budget_residual = 0.0;  ///< |E_{<=Q}(t) - E_{<=Q}(0) - (int Pi - eps_Q + force_Q)|
  bool pressure_present = false;
};

/// Global balance quantities per snapshot.
struct GlobalRow {
  double t = 0.0;
  double E = 0.0;
  double eps = 0.0;    ///< mu int_0^t ||grad u||^2
  double force = 0.0;  ///< int_0^t int rho u . f
  double balance_residual = 0.0;  ///< |E(t) - E(0) + eps - force|
};

struct FluxSpectrum {
  std::vector<FluxRow> rows;  ///< ordered by time, then Q
  std::vector<GlobalRow> global;
  int q_lo = -1;
  int q_hi = -1;

  const FluxRow& at(std::size_t snapshot, int Q) const;
  void write_csv(std::ostream& os) const;
};

/// Validates that a series shares grid, mu and force presence and has
/// strictly increasing times. Throws ValidationError.
void validate_series(std::span<const SolutionState> states);

/// Flux spectrum over Q in [q_lo, q_hi] (default q_max) for every snapshot;
/// time integrals by the trapezoid rule on the snapshot times.
FluxSpectrum flux_spectrum(std::span<const SolutionState> states, const CutoffProfile& cutoff, int q_lo = -1,
                           std::optional<int> q_hi = std::nullopt);

/// eps_Q(t_end); needs >= 2 snapshots.
double viscous_term(std::span<const SolutionState> states, int Q, const CutoffProfile& cutoff);
/// eps(t_end); needs >= 2 snapshots.
double viscous_total(std::span<const SolutionState> states);

/// Budget residual at t_end for one Q; needs >= 2 snapshots.
double budget_residual(std::span<const SolutionState> states, int Q, const CutoffProfile& cutoff);

struct EnergyBalanceReport {
  double energy_change = 0.0;     ///< E(t) - E(0)
  double eps = 0.0;
  double force_work = 0.0;
  double balance_residual = 0.0;  ///< |E(t) - E(0) + eps - force|
  int tail_Q = 0;                 ///< q_max - 2
  double coarse_energy_gap = 0.0; ///< |E_{<=Q}(t) - E(t)| at tail_Q
  double integrated_flux = 0.0;   ///< int_0^t Pi_Q at tail_Q
  double viscous_gap = 0.0;       ///< |eps_Q(t) - eps(t)| at tail_Q
  double force_gap = 0.0;         ///< |force_Q(t) - force(t)| at tail_Q
};

EnergyBalanceReport energy_balance_check(std::span<const SolutionState> states, const CutoffProfile& cutoff);

}  // namespace ddns
