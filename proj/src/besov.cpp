#include "ddns/besov.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "ddns/errors.hpp"
#include "ddns/format.hpp"
#include "ddns/parallel.hpp"

namespace ddns {

void BesovParams::validate() const {
  if (!(s > 0.0 && s <= 1.0)) throw ValidationError("Besov smoothness s must lie in (0, 1]");
  if (!(p >= 1.0)) throw ValidationError("Besov integrability p must lie in [1, inf]");
  if (!r_is_c0 && !(r >= 1.0)) throw ValidationError("Besov summation exponent r must lie in [1, inf]");
}

double localization_kernel(double s, int m) {
  return m >= 0 ? lambda_pow(m, s - 1.0) : lambda_pow(m, s);
}

double kernel_total(double s) {
  if (!(s > 0.0 && s < 1.0)) throw ValidationError("kernel sum needs 0 < s < 1");
  return 1.0 / (1.0 - std::exp2(s - 1.0)) + std::exp2(-s) / (1.0 - std::exp2(-s));
}

ShellCoefficients shell_coefficients(const ShellDecomposition& shells, const BesovParams& params) {
  params.validate();
  ShellCoefficients out{params, {}};
  for (int q = -1; q <= shells.q_max(); ++q)
    out.d.push_back(lambda_pow(q, params.s) * lp_norm(shells.shell(q), params.p));
  return out;
}

ShellCoefficients shell_coefficients(const Field& f, const BesovParams& params, const CutoffProfile& cutoff) {
  return shell_coefficients(decompose(f, cutoff), params);
}

LocalizedSum localized_sum(const ShellCoefficients& coeffs) {
  LocalizedSum out{coeffs.params, {}};
  const int qmax = coeffs.q_max();
  for (int Q = -1; Q <= qmax; ++Q) {
    double acc = 0.0;
    for (int q = -1; q <= qmax; ++q) acc += localization_kernel(coeffs.params.s, Q - q) * coeffs.at(q);
    out.D.push_back(acc);
  }
  return out;
}

double fit_decay_slope(const ShellCoefficients& coeffs, int q_lo, int q_hi) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  const int lo = std::max(q_lo, -1), hi = std::min(q_hi, coeffs.q_max());
  // shells at roundoff level count as empty
  double top = 0.0;
  for (int q = lo; q <= hi; ++q) top = std::max(top, coeffs.at(q));
  for (int q = lo; q <= hi; ++q) {
    const double v = coeffs.at(q);
    if (!(v > 1e-12 * top)) continue;
    const double y = std::log2(v);
    sx += q;
    sy += y;
    sxx += static_cast<double>(q) * q;
    sxy += q * y;
    ++n;
  }
  if (n < 2) return 0.0;
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

BesovNorm besov_norm(const ShellCoefficients& coeffs) {
  BesovNorm out;
  const auto& d = coeffs.d;
  const auto& prm = coeffs.params;
  if (prm.r_is_c0 || std::isinf(prm.r)) {
    out.value = *std::max_element(d.begin(), d.end());
  } else {
    double acc = 0.0;
    for (double v : d) acc += std::pow(v, prm.r);
    out.value = std::pow(acc, 1.0 / prm.r);
  }
  const int qmax = coeffs.q_max();
  for (int q = std::max(-1, qmax - 2); q <= qmax; ++q) out.tail_sup = std::max(out.tail_sup, coeffs.at(q));
  out.decay_slope = fit_decay_slope(coeffs, 0, qmax);
  return out;
}

BesovNorm besov_norm(const Field& f, const BesovParams& params, const CutoffProfile& cutoff) {
  return besov_norm(shell_coefficients(f, params, cutoff));
}

TailComparison compare_tails(const ShellCoefficients& coeffs, const LocalizedSum& sums, int tail_start, int delta) {
  const int qmax = coeffs.q_max();
  if (tail_start < -1 || tail_start > qmax) throw ValidationError("tail start outside the shell range");
  if (delta < 0) throw ValidationError("tail widening must be non-negative");
  const double s = coeffs.params.s;
  TailComparison t;
  t.tail_start = tail_start;
  t.delta = delta;
  t.kernel_sum = kernel_total(s);
  const int widened = std::max(-1, tail_start - delta);
  for (int Q = tail_start; Q <= qmax; ++Q) {
    t.max_D = std::max(t.max_D, sums.at(Q));
    t.max_d_tail = std::max(t.max_d_tail, coeffs.at(Q));
    double head = 0.0;
    for (int q = -1; q < widened; ++q) head += localization_kernel(s, Q - q) * coeffs.at(q);
    t.head_bound = std::max(t.head_bound, head);
  }
  for (int q = widened; q <= qmax; ++q) t.max_d_widened = std::max(t.max_d_widened, coeffs.at(q));
  t.lower_holds = t.max_d_tail <= t.max_D;
  t.upper_holds = t.max_D <= t.head_bound + t.kernel_sum * t.max_d_widened;
  return t;
}

// ---------------------------------------------------------------------------

std::string estimate_name(EstimateId id) {
  switch (id) {
    case EstimateId::commutator: return "commutator";
    case EstimateId::endpoint: return "endpoint";
    case EstimateId::gradient_low: return "gradient_low";
    case EstimateId::high_tail: return "high_tail";
    case EstimateId::product_gradient: return "product_gradient";
  }
  return "unknown";
}

double EstimateParams::c() const {
  const double inv = (std::isinf(a) ? 0.0 : 1.0 / a) + (std::isinf(b) ? 0.0 : 1.0 / b);
  if (inv == 0.0) return kInfinity;
  return 1.0 / inv;
}

void EstimateParams::validate() const {
  if (!(s > 0.0 && s < 1.0) || !(t > 0.0 && t < 1.0)) throw ValidationError("estimate smoothness must lie in (0, 1)");
  if (!(a >= 1.0) || !(b >= 1.0)) throw ValidationError("estimate exponents a, b must lie in [1, inf]");
  if (!(c() >= 1.0)) throw ValidationError("exponent relation 1/c = 1/a + 1/b needs c >= 1");
  if (q_hi && *q_hi < q_lo) throw ValidationError("empty Q range for estimates");
}

namespace {

double safe_ratio(double lhs, double rhs) {
  if (rhs > 0.0) return lhs / rhs;
  return lhs == 0.0 ? 0.0 : kInfinity;
}

}  // namespace

KernelEstimateReport verify_kernel_estimates(const Field& f, const Field& g, const EstimateParams& params,
                                             const CutoffProfile& cutoff) {
  params.validate();
  require_same_grid(f, g);
  if (f.components() != 1 || g.components() != 1) throw ValidationError("kernel estimates expect scalar fields");

  const auto& grid = f.grid();
  const int q_hi = params.q_hi.value_or(grid.q_max() - 2);
  const int q_lo = std::max(-1, params.q_lo);
  if (q_hi < q_lo) throw ValidationError("empty Q range for estimates");
  const double c = params.c();

  const auto shells_f = decompose(f, cutoff);
  const auto shells_g = decompose(g, cutoff);
  const auto Df_a = localized_sum(shell_coefficients(shells_f, {params.s, params.a}));
  const auto Dg_b = localized_sum(shell_coefficients(shells_g, {params.t, params.b}));
  const auto Dgs_b = localized_sum(shell_coefficients(shells_g, {params.s, params.b}));
  const double g_inf = lp_norm(g, kInfinity);
  const double g_b = lp_norm(g, params.b);
  const double f_a = lp_norm(f, params.a);
  const Field fg = multiply(f, g);

  const std::size_t count = static_cast<std::size_t>(q_hi - q_lo + 1);
  std::vector<std::array<EstimateRow, kEstimateCount>> per_q(count);
  parallel_for(count, [&](std::size_t idx) {
    const int Q = q_lo + static_cast<int>(idx);
    const Field f_low = project_low(f, Q, cutoff);
    const Field g_low = project_low(g, Q, cutoff);
    const Field fg_low = project_low(fg, Q, cutoff);
    const Field comm = fg_low - multiply(f_low, g_low);
    const double lq = lambda(Q);

    auto& rows = per_q[idx];
    auto set = [&](EstimateId id, double lhs, double rhs) {
      rows[static_cast<std::size_t>(id)] = EstimateRow{Q, id, lhs, rhs, safe_ratio(lhs, rhs)};
    };
    set(EstimateId::commutator, lp_norm(comm, c),
        std::pow(lq, -params.s - params.t) * Df_a.at(Q) * Dg_b.at(Q));
    set(EstimateId::endpoint, lp_norm(comm, params.a), std::pow(lq, -params.s) * Df_a.at(Q) * g_inf);
    set(EstimateId::gradient_low, lp_norm(gradient(f_low), params.a), std::pow(lq, 1.0 - params.s) * Df_a.at(Q));
    set(EstimateId::high_tail, lp_norm(f - f_low, params.a), std::pow(lq, -params.s) * Df_a.at(Q));
    set(EstimateId::product_gradient, lp_norm(gradient(fg_low), c),
        std::pow(lq, 1.0 - params.s) * (Df_a.at(Q) * g_b + Dgs_b.at(Q) * f_a));
  });

  KernelEstimateReport report;
  report.params = params;
  report.params.q_hi = q_hi;
  for (const auto& rows : per_q)
    for (const auto& r : rows) report.rows.push_back(r);

  for (int e = 0; e < kEstimateCount; ++e) {
    EstimateSummary sm;
    sm.id = static_cast<EstimateId>(e);
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n = 0;
    for (const auto& rows : per_q) {
      const auto& r = rows[static_cast<std::size_t>(e)];
      sm.max_ratio = std::max(sm.max_ratio, r.ratio);
      if (r.ratio > 0.0 && std::isfinite(r.ratio)) {
        const double y = std::log2(r.ratio);
        sx += r.Q;
        sy += y;
        sxx += static_cast<double>(r.Q) * r.Q;
        sxy += r.Q * y;
        ++n;
      }
    }
    if (n >= 2) sm.growth_slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    sm.bounded = std::isfinite(sm.max_ratio) && sm.growth_slope <= params.growth_tolerance;
    report.all_bounded = report.all_bounded && sm.bounded;
    report.summaries.push_back(sm);
  }
  return report;
}

void KernelEstimateReport::write_csv(std::ostream& os) const {
  os << "Q,estimate,lhs,rhs,ratio\n";
  for (const auto& r : rows) {
    os << r.Q << ',' << estimate_name(r.id) << ',';
    write_double(os, r.lhs);
    os << ',';
    write_double(os, r.rhs);
    os << ',';
    write_double(os, r.ratio);
    os << '\n';
  }
}

}  // namespace ddns
