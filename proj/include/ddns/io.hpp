#pragma once

// Snapshot files, snapshot series directories, and the flat key = value run
// configuration shared by the config file and the command line.
//
// Snapshot layout (little-endian):
//   "DDNS1" | u16 version | u8 d | u32 N per axis (d of them) | u8 array count
//   | f64 t | f64 mu | u32 flags | f64 payload
// flags: bit 0 pressure present, bit 1 force present, bit 2 divergence-free
// certified. Payload arrays in order rho, u_1..u_d, [p], [f_1..f_d], each
// row-major over the grid.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ddns/energy_budget.hpp"
#include "ddns/solver.hpp"

namespace ddns {

inline constexpr std::uint16_t kSnapshotVersion = 1;

enum SnapshotFlags : std::uint32_t {
  kHasPressure = 1u << 0,
  kHasForce = 1u << 1,
  kDivergenceFree = 1u << 2,
};

std::vector<std::uint8_t> encode_snapshot(const SolutionState& state);
/// Throws ValidationError on a bad magic, version, size, non-finite value or
/// a state that breaks the density / divergence hypotheses.
SolutionState decode_snapshot(const std::vector<std::uint8_t>& bytes);

void write_snapshot(const std::filesystem::path& path, const SolutionState& state);
SolutionState read_snapshot(const std::filesystem::path& path);

struct SeriesManifest {
  std::string config_hash;
  std::string scheme;
  std::string version;
  std::vector<std::string> files;
  std::vector<double> times;
};

/// Writes snap_00000.ddns, ... and manifest.json into dir (created if needed).
void write_series(const std::filesystem::path& dir, const std::vector<SolutionState>& states,
                  const SeriesManifest& manifest);
std::vector<SolutionState> read_series(const std::filesystem::path& dir, SeriesManifest* manifest = nullptr);
/// A snapshot file or a series directory.
std::vector<SolutionState> read_states(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Run configuration

struct RunConfig {
  // grid and analysis; n also sizes the solver grid
  int dim = 2;
  int n = 64;
  std::string cutoff = "smooth";
  double s = 1.0 / 3.0;
  double t_smooth = 1.0 / 3.0;
  double a = 3.0;
  double b = 3.0;
  double besov_p = 3.0;
  std::string besov_r = "inf";
  bool hypothesis_regime = false;
  std::optional<int> q_lo;  ///< defaults depend on the command
  std::optional<int> q_hi;
  int tail_start = 0;
  int lag_radius = 4;
  double growth_tolerance = 0.25;
  bool reconstruct_pressure = false;
  // synthesis
  double time = 0.0;
  bool synth_pressure = true;
  // solver and generators (solver.n is ignored in favour of n)
  SolverConfig solver;
  // paths; not part of the hash
  std::string input;
  std::string output;

  /// Throws ValidationError; includes the exponent relation 1/a + 3/b = 1,
  /// b >= 3 when hypothesis_regime is set.
  void validate() const;
  std::map<std::string, std::string> canonical_map() const;
  /// FNV-1a 64 of the sorted key=value lines, 16 hex digits.
  std::string hash() const;
  CutoffProfile cutoff_profile() const;
  TorusGrid grid() const { return TorusGrid(dim, n); }
  /// The solver configuration with n applied.
  SolverConfig solver_config() const;
};

/// "# config_hash=<hex>" line opening every CSV.
std::string provenance_line(const RunConfig& config);

}  // namespace ddns
