#pragma once

// Deterministic test states: constants, single Fourier modes, the decaying
// Taylor-Green vortex, random-phase fields with prescribed dyadic shell decay,
// and band-limited density profiles.
//
// Randomness is counter-based SplitMix64: the draw for (seed, stream, counter)
// is mix(seed + G*(counter+1) ^ mix(stream + G)) with G = 0x9e3779b97f4a7c15
// and mix the SplitMix64 finaliser. Uniform doubles take the top 53 bits.
// Modes k and -k share the draw of whichever has the smaller flat index, so
// every generated field is real.

#include <cstdint>
#include <string>

#include "ddns/energy_budget.hpp"

namespace ddns {

class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t state) : state_(state) {}
  std::uint64_t next();
  /// Uniform in [0, 1).
  double uniform() { return to_unit(next()); }

  static std::uint64_t mix(std::uint64_t z);
  static double to_unit(std::uint64_t bits) { return static_cast<double>(bits >> 11) * 0x1.0p-53; }
  static std::uint64_t draw(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter);

 private:
  std::uint64_t state_;
};

enum class GeneratorKind { constant, single_mode, taylor_green, random_besov, density_profile };

std::string generator_name(GeneratorKind kind);
/// Throws ValidationError on an unknown name.
GeneratorKind parse_generator(const std::string& name);

struct GeneratorSpec {
  GeneratorKind kind = GeneratorKind::constant;
  std::uint64_t seed = 0;
  // constant; also the offset of a scalar single mode
  double value = 0.0;
  // single_mode
  Lattice mode{1, 0, 0};
  double amplitude = 1.0;
  // random_besov
  double s = 1.0 / 3.0;
  double p = 3.0;
  double sigma = 0.0;
  double scale = 1.0;
  bool divergence_free = true;
  // density_profile
  double contrast = 0.0;
  double smoothness = 1.0;
  int k_max = 4;

  void validate() const;
};

/// Scalar (components = 1) or vector (components = d) field from a spec.
/// Vector single modes point along a direction perpendicular to the mode, so
/// they are divergence-free; taylor_green is a 2D velocity at t = 0, mu = 0.
Field generate(const TorusGrid& grid, const GeneratorSpec& spec, int components);

/// value + amplitude cos(2 pi k.x) (scalar) or amplitude e cos(2 pi k.x) with
/// e a unit vector perpendicular to k (vector).
Field single_mode(const TorusGrid& grid, const Lattice& k, double amplitude, int components, double offset = 0.0);

/// Decaying Taylor-Green vortex with rho = 1 and f = 0:
/// u = e^{-8 pi^2 mu t} (sin 2pi x cos 2pi y, -cos 2pi x sin 2pi y),
/// p = e^{-16 pi^2 mu t} (cos 4pi x + cos 4pi y) / 4. Requires d = 2.
SolutionState taylor_green(const TorusGrid& grid, double mu, double t);

struct BesovFieldSpec {
  double s = 1.0 / 3.0;
  double p = 3.0;
  double sigma = 0.0;  ///< d_q = scale * lambda_q^{-sigma}
  double scale = 1.0;
  int components = 1;
  bool divergence_free = false;
  std::uint64_t seed = 0;
};

/// Random phases on the sharp shells q = 0..q_max-1 (Nyquist modes and
/// |k| >= N/2 excluded), optionally Leray-projected, then each shell rescaled
/// so its sharp-cutoff d_q equals scale * lambda_q^{-sigma}.
Field random_besov(const TorusGrid& grid, const BesovFieldSpec& spec);

/// rho = 1 + A g, g = sum over 0 < |k| <= k_max of |k|^{-smoothness}
/// cos(2 pi k.x + theta_k), normalised so max |g| = 1 on the grid.
/// Requires 0 <= A < 1.
Field density_profile(const TorusGrid& grid, double contrast, double smoothness, std::uint64_t seed, int k_max = 4);

}  // namespace ddns
