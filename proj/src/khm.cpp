#include "ddns/khm.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>

#include "ddns/errors.hpp"
#include "ddns/format.hpp"
#include "ddns/parallel.hpp"
#include "ddns/reduce.hpp"

namespace ddns {

LagGrid::LagGrid(TorusGrid grid, int radius, bool full) : grid_(std::move(grid)), radius_(radius), full_(full) {}

LagGrid LagGrid::box(const TorusGrid& grid, int radius) {
  if (radius < 0 || radius >= grid.n() / 2)
    throw ValidationError("lag box radius must lie in [0, N/2) so the neighbours l +- e_i stay on the lattice");
  LagGrid g(grid, radius, false);
  const int d = grid.dim();
  const int side = 2 * radius + 1;
  std::size_t count = 1;
  for (int a = 0; a < d; ++a) count *= static_cast<std::size_t>(side);
  for (std::size_t i = 0; i < count; ++i) {
    Lattice l{0, 0, 0};
    std::size_t rest = i;
    for (int a = d - 1; a >= 0; --a) {
      l[a] = static_cast<int>(rest % side) - radius;
      rest /= side;
    }
    g.lags_.push_back(l);
  }
  return g;
}

LagGrid LagGrid::full(const TorusGrid& grid) {
  LagGrid g(grid, grid.n() / 2, true);
  g.lags_.reserve(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) g.lags_.push_back(grid.wavenumber(i));
  return g;
}

Vec3 LagGrid::physical(const Lattice& lag) const {
  Vec3 x{0.0, 0.0, 0.0};
  for (int a = 0; a < grid_.dim(); ++a) x[a] = lag[a] * grid_.spacing();
  return x;
}

double LagGrid::length(const Lattice& lag) const {
  double s = 0.0;
  for (int a = 0; a < grid_.dim(); ++a) s += static_cast<double>(lag[a]) * lag[a];
  return std::sqrt(s) * grid_.spacing();
}

Lattice lattice_lag(const TorusGrid& grid, const Vec3& lag) {
  Lattice l{0, 0, 0};
  for (int a = 0; a < grid.dim(); ++a) {
    const double cells = lag[a] * grid.n();
    const double r = std::round(cells);
    if (!std::isfinite(cells) || std::abs(cells - r) > 1e-9)
      throw ValidationError("lag component " + format_double(lag[a]) + " is not on the grid lattice");
    l[a] = static_cast<int>(r);
  }
  return l;
}

// ---------------------------------------------------------------------------

IncrementStats increment_stats(const SolutionState& state, const Lattice& lag) {
  const auto& grid = state.grid();
  const int d = grid.dim();
  const std::size_t n = grid.size();
  const auto rho = state.rho.values();
  const auto u = state.u.values();

  std::vector<std::vector<double>> terms(3 * d, std::vector<double>(n));
  for (std::size_t x = 0; x < n; ++x) {
    auto c = grid.coords(x);
    for (int a = 0; a < d; ++a) c[a] += lag[a];
    const std::size_t xp = grid.flat_index(c);
    double du[3], dm[3];
    double dm_du = 0.0, sum_du = 0.0, du2 = 0.0;
    for (int i = 0; i < d; ++i) {
      const double ui = u[i * n + x], uip = u[i * n + xp];
      du[i] = uip - ui;
      dm[i] = rho[xp] * uip - rho[x] * ui;
      dm_du += dm[i] * du[i];
      sum_du += (uip + ui) * du[i];
      du2 += du[i] * du[i];
    }
    const double drho = rho[xp] - rho[x];
    const double srho = rho[xp] + rho[x];
    for (int j = 0; j < d; ++j) {
      terms[j][x] = dm_du * du[j];
      terms[d + j][x] = drho * du[j] * sum_du;
      terms[2 * d + j][x] = srho * du2 * du[j];
    }
  }
  IncrementStats s{{0, 0, 0}, {0, 0, 0}, {0, 0, 0}};
  const double w = grid.cell_volume();
  for (int j = 0; j < d; ++j) {
    s.momentum[j] = integrate(terms[j], w);
    s.density[j] = integrate(terms[d + j], w);
    s.sum_rho[j] = integrate(terms[2 * d + j], w);
  }
  return s;
}

IncrementStats increment_stats(const SolutionState& state, const Vec3& lag) {
  return increment_stats(state, lattice_lag(state.grid(), lag));
}

namespace {

Lattice shifted(Lattice l, int axis, int by) {
  l[axis] += by;
  return l;
}

}  // namespace

StructureFunctionFlux khm_flux(const SolutionState& state, const LagGrid& lags) {
  const auto& grid = state.grid();
  if (!(lags.grid() == grid)) throw ValidationError("lag grid and state live on different grids");
  const int d = grid.dim();

  // Stencil: every lag and its axis neighbours, keyed by flat lattice index.
  std::vector<char> needed(grid.size(), 0);
  for (const auto& l : lags.lags()) {
    needed[grid.flat_index(l)] = 1;
    for (int a = 0; a < d; ++a) {
      needed[grid.flat_index(shifted(l, a, 1))] = 1;
      needed[grid.flat_index(shifted(l, a, -1))] = 1;
    }
  }
  std::vector<std::size_t> todo;
  for (std::size_t i = 0; i < needed.size(); ++i)
    if (needed[i]) todo.push_back(i);

  std::vector<IncrementStats> stats(grid.size());
  parallel_for(todo.size(), [&](std::size_t k) {
    const std::size_t idx = todo[k];
    stats[idx] = increment_stats(state, grid.coords(idx));
  });

  const double inv_2h = 0.5 * grid.n();
  StructureFunctionFlux out;
  out.dim = d;
  out.spacing = grid.spacing();
  out.rows.reserve(lags.lags().size());
  for (const auto& l : lags.lags()) {
    double div_a = 0.0, div_b = 0.0, div_c = 0.0;
    for (int j = 0; j < d; ++j) {
      const auto& plus = stats[grid.flat_index(shifted(l, j, 1))];
      const auto& minus = stats[grid.flat_index(shifted(l, j, -1))];
      div_a += (plus.momentum[j] - minus.momentum[j]) * inv_2h;
      div_b += (plus.density[j] - minus.density[j]) * inv_2h;
      div_c += (plus.sum_rho[j] - minus.sum_rho[j]) * inv_2h;
    }
    KhmRow row;
    row.lag = l;
    row.length = lags.length(l);
    row.pi_div = -0.25 * div_a;
    row.pi_sym = -0.125 * div_b - 0.125 * div_c;
    row.stats = stats[grid.flat_index(l)];
    out.rows.push_back(row);
  }
  return out;
}

std::vector<double> khm_flux_div(const SolutionState& state, const LagGrid& lags) {
  const auto f = khm_flux(state, lags);
  std::vector<double> v;
  for (const auto& r : f.rows) v.push_back(r.pi_div);
  return v;
}

std::vector<double> khm_flux_sym(const SolutionState& state, const LagGrid& lags) {
  const auto f = khm_flux(state, lags);
  std::vector<double> v;
  for (const auto& r : f.rows) v.push_back(r.pi_sym);
  return v;
}

double StructureFunctionFlux::max_abs_div() const {
  double m = 0.0;
  for (const auto& r : rows) m = std::max(m, std::abs(r.pi_div));
  return m;
}

double StructureFunctionFlux::form_gap() const {
  double gap = 0.0;
  for (const auto& r : rows) gap = std::max(gap, std::abs(r.pi_div - r.pi_sym));
  const double scale = max_abs_div();
  return scale > 0.0 ? gap / scale : gap;
}

void StructureFunctionFlux::write_csv(std::ostream& os) const {
  for (int a = 0; a < dim; ++a) os << 'l' << (a + 1) << ',';
  os << "l_norm,pi_div,pi_sym\n";
  for (const auto& r : rows) {
    for (int a = 0; a < dim; ++a) {
      write_double(os, r.lag[a] * spacing);
      os << ',';
    }
    write_double(os, r.length);
    os << ',';
    write_double(os, r.pi_div);
    os << ',';
    write_double(os, r.pi_sym);
    os << '\n';
  }
}

double small_lag_slope(const StructureFunctionFlux& flux, double max_length) {
  std::map<double, double> peak;
  double global = 0.0;
  for (const auto& r : flux.rows) {
    global = std::max(global, std::abs(r.pi_div));
    if (r.length <= 0.0 || r.length > max_length * (1.0 + 1e-12)) continue;
    // Lengths are sqrt of integers times h; round to merge equal radii.
    const double key = std::round(r.length * 1e9) / 1e9;
    auto& p = peak[key];
    p = std::max(p, std::abs(r.pi_div));
  }
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (const auto& [len, v] : peak) {
    if (!(v > 1e-13 * global)) continue;
    const double x = std::log(len), y = std::log(v);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++n;
  }
  if (n < 2) return 0.0;
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

// ---------------------------------------------------------------------------
// Spectral-in-l variant

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// corr(X, Y)(l) = <X(r+l) Y(r)>, as values over the lag lattice.
std::vector<double> correlate(const Field& x, const Field& y) {
  const auto xs = x.spectrum();
  const auto ys = y.spectrum();
  std::vector<cplx> prod(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) prod[i] = xs[i] * std::conj(ys[i]);
  const Field c = Field::from_spectrum(x.grid(), 1, prod);
  return {c.values().begin(), c.values().end()};
}

/// One factor X' + sign X of an increment product.
struct Factor {
  const std::vector<double>* values;
  double unprimed_sign;
};

/// < prod_f (X_f(r+l) + s_f X_f(r)) > for every l, expanded into correlations.
void accumulate_expansion(const TorusGrid& grid, const std::vector<Factor>& factors, double weight,
                          std::vector<double>& out) {
  const std::size_t n = grid.size();
  const std::size_t nf = factors.size();
  for (unsigned mask = 0; mask < (1u << nf); ++mask) {
    std::vector<double> primed(n, 1.0), unprimed(n, 1.0);
    double coef = weight;
    for (std::size_t f = 0; f < nf; ++f) {
      const auto& v = *factors[f].values;
      if (mask & (1u << f)) {
        for (std::size_t x = 0; x < n; ++x) primed[x] *= v[x];
      } else {
        for (std::size_t x = 0; x < n; ++x) unprimed[x] *= v[x];
        coef *= factors[f].unprimed_sign;
      }
    }
    const auto c = correlate(Field(grid, 1, std::move(primed)), Field(grid, 1, std::move(unprimed)));
    for (std::size_t x = 0; x < n; ++x) out[x] += coef * c[x];
  }
}

Field spectral_divergence(const Field& v) { return divergence(v); }

}  // namespace

IncrementFields increment_fields(const SolutionState& state) {
  const auto& grid = state.grid();
  const int d = grid.dim();
  const std::size_t n = grid.size();

  std::vector<std::vector<double>> u(d), m(d);
  const auto rho_v = state.rho.values();
  const std::vector<double> rho(rho_v.begin(), rho_v.end());
  std::vector<double> e(n, 0.0);
  for (int i = 0; i < d; ++i) {
    auto c = state.u.component(i);
    u[i].assign(c.begin(), c.end());
    m[i].resize(n);
    for (std::size_t x = 0; x < n; ++x) {
      m[i][x] = rho[x] * u[i][x];
      e[x] += u[i][x] * u[i][x];
    }
  }

  std::vector<double> A(n * d, 0.0), B(n * d, 0.0), C(n * d, 0.0);
  for (int j = 0; j < d; ++j) {
    std::vector<double> a(n, 0.0), b(n, 0.0), c(n, 0.0);
    for (int i = 0; i < d; ++i) {
      accumulate_expansion(grid, {{&m[i], -1.0}, {&u[i], -1.0}, {&u[j], -1.0}}, 1.0, a);
      accumulate_expansion(grid, {{&rho, 1.0}, {&u[i], -1.0}, {&u[i], -1.0}, {&u[j], -1.0}}, 1.0, c);
    }
    // (u'+u).du = |u'|^2 - |u|^2
    accumulate_expansion(grid, {{&rho, -1.0}, {&u[j], -1.0}, {&e, -1.0}}, 1.0, b);
    std::copy(a.begin(), a.end(), A.begin() + j * n);
    std::copy(b.begin(), b.end(), B.begin() + j * n);
    std::copy(c.begin(), c.end(), C.begin() + j * n);
  }
  return IncrementFields{Field(grid, d, std::move(A)), Field(grid, d, std::move(B)), Field(grid, d, std::move(C))};
}

SpectralKhm khm_flux_spectral(const SolutionState& state) {
  auto stats = increment_fields(state);
  Field pi_div = -0.25 * spectral_divergence(stats.momentum);
  Field pi_sym = -0.125 * spectral_divergence(stats.density) - 0.125 * spectral_divergence(stats.sum_rho);
  return SpectralKhm{std::move(stats), std::move(pi_div), std::move(pi_sym)};
}

DivergenceFreeCheck divergence_free_check(const SolutionState& state) {
  const auto& grid = state.grid();
  const int d = grid.dim();
  const std::size_t n = grid.size();

  const Field energy_weight = contract(state.u, state.u);
  const Field s = multiply(state.rho, energy_weight);
  std::vector<double> Z(n * d);
  for (int j = 0; j < d; ++j) {
    const auto c = correlate(state.u.component_field(j), s);
    std::copy(c.begin(), c.end(), Z.begin() + j * n);
  }
  const Field z(grid, d, std::move(Z));

  // Spectral: div and the individual partials d_j Z_j.
  const Field grad = gradient(z);
  std::vector<double> div(n, 0.0);
  double partial_max = 0.0;
  for (int j = 0; j < d; ++j) {
    const auto djj = grad.component(j * d + j);
    for (std::size_t x = 0; x < n; ++x) {
      div[x] += djj[x];
      partial_max = std::max(partial_max, std::abs(djj[x]));
    }
  }
  double div_max = 0.0;
  for (double v : div) div_max = std::max(div_max, std::abs(v));

  // Centred differences with spacing 1/N.
  double cdiv_max = 0.0, cpartial_max = 0.0;
  const double inv_2h = 0.5 * grid.n();
  for (std::size_t x = 0; x < n; ++x) {
    const auto c = grid.coords(x);
    double acc = 0.0;
    for (int j = 0; j < d; ++j) {
      const double dj =
          (z.at(j, grid.flat_index(shifted(c, j, 1))) - z.at(j, grid.flat_index(shifted(c, j, -1)))) * inv_2h;
      acc += dj;
      cpartial_max = std::max(cpartial_max, std::abs(dj));
    }
    cdiv_max = std::max(cdiv_max, std::abs(acc));
  }

  DivergenceFreeCheck r;
  r.spectral = partial_max > 0.0 ? div_max / partial_max : div_max;
  r.centred = cpartial_max > 0.0 ? cdiv_max / cpartial_max : cdiv_max;
  return r;
}

}  // namespace ddns
