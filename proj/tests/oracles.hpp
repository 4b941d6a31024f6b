#pragma once

// Slow reference computations, written directly from the definitions and
// independent of the library's FFT path. Long double accumulators throughout.

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "ddns/energy_budget.hpp"
#include "ddns/spectral.hpp"

namespace oracle {

using ddns::Field;
using ddns::Lattice;
using ddns::TorusGrid;
using lcplx = std::complex<long double>;

inline long double two_pi() { return 2.0L * std::numbers::pi_v<long double>; }

inline long double dot_phase(const TorusGrid& g, const Lattice& k, const Lattice& x) {
  long double s = 0;
  for (int d = 0; d < g.dim(); ++d) s += static_cast<long double>(k[d]) * x[d];
  return two_pi() * s / g.n();
}

/// f^(k) = N^-d sum_x f(x) e^{-2 pi i k.x}, O(size^2).
inline std::vector<lcplx> dft(const Field& f, int c = 0) {
  const auto& g = f.grid();
  std::vector<lcplx> out(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    const Lattice k = g.wavenumber(i);
    lcplx acc = 0;
    for (std::size_t j = 0; j < g.size(); ++j) {
      const long double ph = dot_phase(g, k, g.coords(j));
      acc += static_cast<long double>(f.at(c, j)) * lcplx(std::cos(ph), -std::sin(ph));
    }
    out[i] = acc / static_cast<long double>(g.size());
  }
  return out;
}

/// S(x) = e^{-1/x} / (e^{-1/x} + e^{-1/(1-x)}).
inline long double smooth_step(long double x) {
  if (x <= 0) return 0;
  if (x >= 1) return 1;
  const long double a = std::exp(-1 / x), b = std::exp(-1 / (1 - x));
  return a / (a + b);
}

/// Default cutoff profile: flat on |xi| <= 1/2, support |xi| < 1.
inline long double chi(ddns::CutoffKind kind, long double r) {
  if (kind == ddns::CutoffKind::sharp) return r <= 0.5L ? 1 : 0;
  return smooth_step((1 - r) / 0.5L);
}

inline long double lam(int q) { return q == -1 ? 0.5L : std::ldexp(1.0L, q); }

/// Kernel of the low-pass projection sampled on the grid:
/// h(y) = sum_k chi(|k| / lambda_{Q+1}) e^{2 pi i k.y}.
inline std::vector<long double> low_pass_kernel(const TorusGrid& g, ddns::CutoffKind kind, int Q) {
  std::vector<long double> m(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    const Lattice k = g.wavenumber(i);
    long double k2 = 0;
    for (int d = 0; d < g.dim(); ++d) k2 += static_cast<long double>(k[d]) * k[d];
    m[i] = chi(kind, std::sqrt(k2) / lam(Q + 1));
  }
  std::vector<long double> h(g.size());
  for (std::size_t j = 0; j < g.size(); ++j) {
    long double acc = 0;
    const Lattice y = g.coords(j);
    for (std::size_t i = 0; i < g.size(); ++i)
      if (m[i] != 0) acc += m[i] * std::cos(dot_phase(g, g.wavenumber(i), y));
    h[j] = acc;
  }
  return h;
}

inline std::size_t shifted(const TorusGrid& g, std::size_t x, std::size_t y, int sign) {
  Lattice a = g.coords(x), b = g.coords(y);
  for (int d = 0; d < g.dim(); ++d) a[d] += sign * b[d];
  return g.flat_index(a);
}

/// r_Q(f, g)(x) = int h(y) (f(x-y) - f(x)) (g(x-y) - g(x)) dy, scalar f, g.
inline std::vector<long double> remainder(const Field& f, const Field& g, int Q, ddns::CutoffKind kind) {
  const auto& grid = f.grid();
  const auto h = low_pass_kernel(grid, kind, Q);
  std::vector<long double> r(grid.size());
  for (std::size_t x = 0; x < grid.size(); ++x) {
    long double acc = 0;
    for (std::size_t y = 0; y < grid.size(); ++y) {
      const std::size_t xy = shifted(grid, x, y, -1);
      acc += h[y] * (static_cast<long double>(f.at(0, xy)) - f.at(0, x)) *
             (static_cast<long double>(g.at(0, xy)) - g.at(0, x));
    }
    r[x] = acc / static_cast<long double>(grid.size());
  }
  return r;
}

/// r_Q(rho, u_i, u_j)(x) = int h(y) drho du_i du_j dy with increments f(x-y) - f(x).
inline std::vector<long double> remainder3(const Field& rho, const Field& u, int i, int j, int Q,
                                           ddns::CutoffKind kind) {
  const auto& grid = rho.grid();
  const auto h = low_pass_kernel(grid, kind, Q);
  std::vector<long double> r(grid.size());
  for (std::size_t x = 0; x < grid.size(); ++x) {
    long double acc = 0;
    for (std::size_t y = 0; y < grid.size(); ++y) {
      const std::size_t xy = shifted(grid, x, y, -1);
      acc += h[y] * (static_cast<long double>(rho.at(0, xy)) - rho.at(0, x)) *
             (static_cast<long double>(u.at(i, xy)) - u.at(i, x)) *
             (static_cast<long double>(u.at(j, xy)) - u.at(j, x));
    }
    r[x] = acc / static_cast<long double>(grid.size());
  }
  return r;
}

struct Stats {
  long double momentum[3]{};
  long double density[3]{};
  long double sum_rho[3]{};
};

/// Increment averages by a double loop over the grid; primes at x + lag.
inline Stats increment_stats(const ddns::SolutionState& s, const Lattice& lag) {
  const auto& g = s.grid();
  const int d = g.dim();
  Stats out;
  for (std::size_t x = 0; x < g.size(); ++x) {
    Lattice c = g.coords(x);
    for (int i = 0; i < d; ++i) c[i] += lag[i];
    const std::size_t xp = g.flat_index(c);
    const long double r0 = s.rho.at(0, x), r1 = s.rho.at(0, xp);
    long double du[3]{}, dm[3]{}, us[3]{};
    long double du2 = 0, dm_du = 0, us_du = 0;
    for (int i = 0; i < d; ++i) {
      const long double u0 = s.u.at(i, x), u1 = s.u.at(i, xp);
      du[i] = u1 - u0;
      dm[i] = r1 * u1 - r0 * u0;
      us[i] = u1 + u0;
      du2 += du[i] * du[i];
      dm_du += dm[i] * du[i];
      us_du += us[i] * du[i];
    }
    for (int i = 0; i < d; ++i) {
      out.momentum[i] += dm_du * du[i];
      out.density[i] += (r1 - r0) * du[i] * us_du;
      out.sum_rho[i] += (r1 + r0) * du2 * du[i];
    }
  }
  const long double vol = g.cell_volume();
  for (int i = 0; i < 3; ++i) {
    out.momentum[i] *= vol;
    out.density[i] *= vol;
    out.sum_rho[i] *= vol;
  }
  return out;
}

/// Constant-density flux -1/4 div_l <|du|^2 du> with centred differences.
inline long double homogeneous_flux(const Field& u, const Lattice& lag) {
  const auto& g = u.grid();
  const int d = g.dim();
  auto third_order = [&](const Lattice& l, int j) {
    long double acc = 0;
    for (std::size_t x = 0; x < g.size(); ++x) {
      Lattice c = g.coords(x);
      for (int i = 0; i < d; ++i) c[i] += l[i];
      const std::size_t xp = g.flat_index(c);
      long double du2 = 0;
      for (int i = 0; i < d; ++i) {
        const long double v = static_cast<long double>(u.at(i, xp)) - u.at(i, x);
        du2 += v * v;
      }
      acc += du2 * (static_cast<long double>(u.at(j, xp)) - u.at(j, x));
    }
    return acc * g.cell_volume();
  };
  long double div = 0;
  for (int j = 0; j < d; ++j) {
    Lattice lp = lag, lm = lag;
    ++lp[j];
    --lm[j];
    div += (third_order(lp, j) - third_order(lm, j)) * g.n() / 2;
  }
  return -div / 4;
}

inline double max_abs(const std::vector<long double>& v) {
  long double m = 0;
  for (auto x : v) m = std::max(m, std::fabs(x));
  return static_cast<double>(m);
}

}  // namespace oracle
