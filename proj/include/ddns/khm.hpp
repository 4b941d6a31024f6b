#pragma once

// Two-point increment statistics and the density-weighted Karman-Howarth-Monin
// flux pi(l), in the divergence form
//   pi = -1/4 div_l <(d(rho u).du) du>
// and the symmetric-increment form
//   pi = -1/8 div_l <drho du ((u'+u).du)> - 1/8 div_l <(rho'+rho)|du|^2 du>,
// with primes at r+l, increments d(.) = (.)' - (.), and <.> the torus average.

#include <array>
#include <ostream>
#include <vector>

#include "ddns/energy_budget.hpp"

namespace ddns {

using Vec3 = std::array<double, 3>;

/// Lags on the grid lattice, stored in cell units. A box of radius R holds
/// every l with |l_i| <= R; derivatives in l use the neighbours l +- e_i, which
/// the box construction guarantees are distinct lattice points (R < N/2).
class LagGrid {
 public:
  /// Throws ValidationError unless 0 <= radius < N/2.
  static LagGrid box(const TorusGrid& grid, int radius);
  /// The whole lattice; neighbours wrap periodically.
  static LagGrid full(const TorusGrid& grid);

  const TorusGrid& grid() const { return grid_; }
  int radius() const { return radius_; }
  bool is_full() const { return full_; }
  const std::vector<Lattice>& lags() const { return lags_; }
  /// Physical lag vector (cell units times 1/N).
  Vec3 physical(const Lattice& lag) const;
  double length(const Lattice& lag) const;

 private:
  LagGrid(TorusGrid grid, int radius, bool full);

  TorusGrid grid_;
  int radius_;
  bool full_;
  std::vector<Lattice> lags_;
};

/// Converts a physical lag to lattice units; throws ValidationError when some
/// component is not an integer multiple of the spacing (to 1e-9 cells).
Lattice lattice_lag(const TorusGrid& grid, const Vec3& lag);

/// The three averaged vectors at one lag (components beyond d are zero).
struct IncrementStats {
  Vec3 momentum;  ///< A = <(d(rho u).du) du>
  Vec3 density;   ///< B = <drho du ((u'+u).du)>
  Vec3 sum_rho;   ///< C = <(rho'+rho)|du|^2 du>
};

IncrementStats increment_stats(const SolutionState& state, const Lattice& lag);
IncrementStats increment_stats(const SolutionState& state, const Vec3& lag);

struct KhmRow {
  Lattice lag{0, 0, 0};
  double length = 0.0;
  double pi_div = 0.0;
  double pi_sym = 0.0;
  IncrementStats stats;
};

/// pi(l) on a lag grid, both forms, centred differences with spacing 1/N.
struct StructureFunctionFlux {
  std::vector<KhmRow> rows;  ///< lags in cells
  int dim = 0;
  double spacing = 0.0;

  /// max |pi_div - pi_sym| / max |pi_div| (0 when pi_div vanishes).
  double form_gap() const;
  double max_abs_div() const;
  void write_csv(std::ostream& os) const;
};

StructureFunctionFlux khm_flux(const SolutionState& state, const LagGrid& lags);
std::vector<double> khm_flux_div(const SolutionState& state, const LagGrid& lags);
std::vector<double> khm_flux_sym(const SolutionState& state, const LagGrid& lags);

/// Least-squares slope of log max|pi_div| against log |l| over the distinct
/// nonzero lag lengths up to max_length; radii where pi vanishes are skipped.
double small_lag_slope(const StructureFunctionFlux& flux, double max_length);

// ---------------------------------------------------------------------------
// Full-lattice variant through FFT correlations

/// Averaged vectors for every lag at once; each is a d-component field over
/// the lag lattice (same grid as the state).
struct IncrementFields {
  Field momentum;
  Field density;
  Field sum_rho;
};

IncrementFields increment_fields(const SolutionState& state);

struct SpectralKhm {
  IncrementFields stats;
  Field pi_div;  ///< spectral divergence in l
  Field pi_sym;
};

SpectralKhm khm_flux_spectral(const SolutionState& state);

/// Z_j(l) = <rho |u|^2 (r) u_j(r+l)> has zero l-divergence when div u = 0.
struct DivergenceFreeCheck {
  double spectral = 0.0;  ///< max |div_l Z| / max_j max |d_j Z_j|, spectral derivative
  double centred = 0.0;   ///< same with centred differences (O(h^2) by construction)
};

DivergenceFreeCheck divergence_free_check(const SolutionState& state);

}  // namespace ddns
