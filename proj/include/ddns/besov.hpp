#pragma once

// Besov diagnostics built on the dyadic decomposition: shell coefficients
// d_q = lambda_q^s ||f_q||_p, the localization kernel K^s_m and its
// convolution D_Q, Besov norms, and measured constants of the shell
// estimates for products, gradients and tails.

#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "ddns/spectral.hpp"

namespace ddns {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

struct BesovParams {
  double s = 1.0 / 3.0;  ///< smoothness, (0, 1]
  double p = 3.0;        ///< integrability, [1, inf]
  double r = kInfinity;  ///< summation exponent, [1, inf]; ignored when r_is_c0
  bool r_is_c0 = false;

  /// Throws ValidationError.
  void validate() const;
};

/// d_q for q = -1..q_max.
struct ShellCoefficients {
  BesovParams params;
  std::vector<double> d;

  double at(int q) const { return d.at(static_cast<std::size_t>(q + 1)); }
  int q_max() const { return static_cast<int>(d.size()) - 2; }
};

/// D_Q = sum_q K^s_{Q-q} d_q for Q = -1..q_max.
struct LocalizedSum {
  BesovParams params;
  std::vector<double> D;

  double at(int Q) const { return D.at(static_cast<std::size_t>(Q + 1)); }
};

/// K^s_m: lambda_m^{s-1} for m >= 0, lambda_m^s for m < 0.
double localization_kernel(double s, int m);
/// sum over all m in Z of K^s_m, closed form; requires 0 < s < 1.
double kernel_total(double s);

ShellCoefficients shell_coefficients(const Field& f, const BesovParams& params, const CutoffProfile& cutoff);
/// Same, reusing a decomposition already at hand.
ShellCoefficients shell_coefficients(const ShellDecomposition& shells, const BesovParams& params);

LocalizedSum localized_sum(const ShellCoefficients& coeffs);

struct BesovNorm {
  double value = 0.0;     ///< l^r norm of (d_q); sup when r = inf or c0
  double tail_sup = 0.0;  ///< sup of d_q over q >= q_max - 2
  double decay_slope = 0.0;  ///< least-squares slope of log2 d_q over nonzero q >= 0
};

BesovNorm besov_norm(const ShellCoefficients& coeffs);
BesovNorm besov_norm(const Field& f, const BesovParams& params, const CutoffProfile& cutoff);

/// Least-squares slope of log2 d_q against q over [q_lo, q_hi], skipping shells below 1e-12 of the largest.
double fit_decay_slope(const ShellCoefficients& coeffs, int q_lo, int q_hi);

/// Finite-lattice stand-in for limsup D ~ limsup d: compares the tail maxima
/// max_{Q>=Q0} D_Q and max_{q>=Q0-delta} d_q. Always
/// max_{q>=Q0} d_q <= max_{Q>=Q0} D_Q (K_0 = 1), and
/// max_{Q>=Q0} D_Q <= head + kernel_total(s) * max_{q>=Q0-delta} d_q where head
/// collects the shells below Q0-delta.
struct TailComparison {
  int tail_start = 0;
  int delta = 0;
  double max_D = 0.0;
  double max_d_tail = 0.0;      ///< max_{q >= Q0} d_q
  double max_d_widened = 0.0;   ///< max_{q >= Q0 - delta} d_q
  double head_bound = 0.0;      ///< max_{Q>=Q0} sum_{q<Q0-delta} K_{Q-q} d_q
  double kernel_sum = 0.0;
  bool lower_holds = false;
  bool upper_holds = false;
};

TailComparison compare_tails(const ShellCoefficients& coeffs, const LocalizedSum& sums, int tail_start, int delta);

// ---------------------------------------------------------------------------
// Measured constants of the shell estimates

enum class EstimateId {
  commutator,      ///< ||(fg)_{<=Q} - f_{<=Q} g_{<=Q}||_c vs lambda_Q^{-s-t} D^s_a(f) D^t_b(g)
  endpoint,        ///< ||(fg)_{<=Q} - f_{<=Q} g_{<=Q}||_a vs lambda_Q^{-s} D^s_a(f) ||g||_inf
  gradient_low,    ///< ||grad f_{<=Q}||_a vs lambda_Q^{1-s} D^s_a(f)
  high_tail,       ///< ||f_{>Q}||_a vs lambda_Q^{-s} D^s_a(f)
  product_gradient ///< ||grad (fg)_{<=Q}||_c vs lambda_Q^{1-s}(D^s_a(f)||g||_b + D^s_b(g)||f||_a)
};

inline constexpr int kEstimateCount = 5;
std::string estimate_name(EstimateId id);

struct EstimateParams {
  double s = 1.0 / 3.0;
  double t = 1.0 / 3.0;
  double a = 3.0;
  double b = 3.0;
  int q_lo = 3;
  std::optional<int> q_hi;  ///< default q_max - 2
  /// A ratio sequence "grows" when its log2-slope against Q exceeds this.
  double growth_tolerance = 0.25;

  /// 1/c = 1/a + 1/b; throws ValidationError when the exponents are invalid.
  double c() const;
  void validate() const;
};

struct EstimateRow {
  int Q = 0;
  EstimateId id = EstimateId::commutator;
  double lhs = 0.0;
  double rhs = 0.0;
  double ratio = 0.0;  ///< lhs / rhs; 0 when both vanish, inf when only rhs does
};

struct EstimateSummary {
  EstimateId id = EstimateId::commutator;
  double max_ratio = 0.0;
  double growth_slope = 0.0;
  bool bounded = true;
};

struct KernelEstimateReport {
  EstimateParams params;
  std::vector<EstimateRow> rows;
  std::vector<EstimateSummary> summaries;
  bool all_bounded = true;

  const EstimateSummary& summary(EstimateId id) const { return summaries.at(static_cast<std::size_t>(id)); }
  void write_csv(std::ostream& os) const;
};

/// f and g must be scalar fields on one grid; the product estimate uses the
/// smoothness s for both factors.
KernelEstimateReport verify_kernel_estimates(const Field& f, const Field& g, const EstimateParams& params,
                                             const CutoffProfile& cutoff);

}  // namespace ddns
