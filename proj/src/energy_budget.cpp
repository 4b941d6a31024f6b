#include "ddns/energy_budget.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ddns/errors.hpp"
#include "ddns/format.hpp"
#include "ddns/parallel.hpp"

namespace ddns {

SolutionState SolutionState::make(Field rho, Field u, std::optional<Field> p, std::optional<Field> force, double t,
                                  double mu, double div_tol) {
  const int d = rho.grid().dim();
  if (rho.components() != 1) throw ValidationError("density must be a scalar field");
  if (u.components() != d) throw ValidationError("velocity must have d components");
  require_same_grid(rho, u);
  if (p) {
    require_same_grid(rho, *p);
    if (p->components() != 1) throw ValidationError("pressure must be a scalar field");
  }
  if (force) {
    require_same_grid(rho, *force);
    if (force->components() != d) throw ValidationError("force must have d components");
  }
  if (!std::isfinite(t)) throw ValidationError("snapshot time must be finite");
  if (!(mu >= 0.0) || !std::isfinite(mu)) throw ValidationError("viscosity must be finite and non-negative");

  const double lo = min_value(rho);
  if (!(lo > 0.0))
    throw ValidationError("density violates 0 < rho_lo <= rho <= rho_hi: min rho = " + format_double(lo));
  const double defect = divergence_defect(u);
  if (defect > div_tol)
    throw ValidationError("velocity is not divergence-free: max|k.u^|/||u^|| = " + format_double(defect));

  SolutionState s{std::move(rho), std::move(u), std::move(p), std::move(force), t, mu, 0.0, 0.0};
  s.rho_lo = lo;
  s.rho_hi = max_value(s.rho);
  return s;
}

double kinetic_energy(const SolutionState& state) {
  return 0.5 * inner(multiply(state.rho, state.u), state.u);
}

double velocity_gradient_norm2(const SolutionState& state) {
  const Field g = gradient(state.u);
  return inner(g, g);
}

double force_power(const SolutionState& state) {
  if (!state.force) return 0.0;
  return inner(multiply(state.rho, state.u), *state.force);
}

// ---------------------------------------------------------------------------

namespace {

/// Products of one snapshot formed once so their spectra are cached across Q.
struct Products {
  const SolutionState& state;
  Field rho_u;
  Field rho_uu;
  std::optional<Field> rho_f;

  explicit Products(const SolutionState& s)
      : state(s), rho_u(multiply(s.rho, s.u)), rho_uu(multiply(s.rho, outer(s.u, s.u))) {
    if (s.force) rho_f = multiply(s.rho, *s.force);
  }
};

struct Coarse {
  Field rho_low;
  Field rho_u_low;
  Field U;
  double min_rho_low;
};

Coarse coarse_fields(const Products& pr, int Q, const CutoffProfile& cutoff) {
  Field rho_low = project_low(pr.state.rho, Q, cutoff);
  const double m = min_value(rho_low);
  if (!(m > 0.0)) throw NonPositiveCoarseDensity(Q, m);
  Field rho_u_low = project_low(pr.rho_u, Q, cutoff);
  Field U = divide(rho_u_low, rho_low);
  return Coarse{std::move(rho_low), std::move(rho_u_low), std::move(U), m};
}

FluxResult flux_from(const Products& pr, const Coarse& c, int Q, const CutoffProfile& cutoff) {
  const Field F = project_low(pr.rho_uu, Q, cutoff) - outer(c.U, c.rho_u_low);
  FluxResult r;
  r.min_coarse_density = c.min_rho_low;
  r.nonlinear = inner(F, gradient(c.U));
  if (pr.state.p) {
    r.pressure = inner(project_low(*pr.state.p, Q, cutoff), divergence(c.U));
    r.pressure_present = true;
  }
  r.total = r.nonlinear + r.pressure;
  return r;
}

BudgetRates rates_from(const Products& pr, int Q, const CutoffProfile& cutoff) {
  const Coarse c = coarse_fields(pr, Q, cutoff);
  BudgetRates r;
  r.coarse_energy = 0.5 * inner(c.rho_u_low, c.U);
  r.flux = flux_from(pr, c, Q, cutoff);
  if (pr.state.mu != 0.0)
    r.viscous = pr.state.mu * inner(gradient(project_low(pr.state.u, Q, cutoff)), gradient(c.U));
  if (pr.rho_f) r.force = inner(project_low(*pr.rho_f, Q, cutoff), c.U);
  return r;
}

}  // namespace

FavreVelocity favre_velocity(const SolutionState& state, int Q, const CutoffProfile& cutoff) {
  const Products pr(state);
  auto c = coarse_fields(pr, Q, cutoff);
  return FavreVelocity{std::move(c.U), c.min_rho_low};
}

double coarse_energy(const SolutionState& state, int Q, const CutoffProfile& cutoff) {
  const Products pr(state);
  const auto c = coarse_fields(pr, Q, cutoff);
  return 0.5 * inner(c.rho_u_low, c.U);
}

Field flux_tensor(const SolutionState& state, int Q, const CutoffProfile& cutoff) {
  const Products pr(state);
  const auto c = coarse_fields(pr, Q, cutoff);
  return project_low(pr.rho_uu, Q, cutoff) - outer(c.U, c.rho_u_low);
}

Field remainder(const Field& f, const Field& g, int Q, const CutoffProfile& cutoff) {
  require_same_grid(f, g);
  const Field fg = outer(f, g);
  return project_low(fg, Q, cutoff) - outer(project_low(f, Q, cutoff), g) - outer(f, project_low(g, Q, cutoff)) + fg;
}

Field remainder3(const Field& rho, const Field& u, int Q, const CutoffProfile& cutoff) {
  require_same_grid(rho, u);
  if (rho.components() != 1) throw ValidationError("remainder3 expects a scalar density");
  const Field uu = outer(u, u);
  const Field rho_u = multiply(rho, u);
  const Field rho_u_low = project_low(rho_u, Q, cutoff);
  const Field u_low = project_low(u, Q, cutoff);
  Field r = project_low(multiply(rho, uu), Q, cutoff);
  r = r - outer(rho_u_low, u) - outer(u, rho_u_low);
  r = r + multiply(project_low(rho, Q, cutoff), uu) - multiply(rho, project_low(uu, Q, cutoff));
  r = r + multiply(rho, outer(u_low, u) + outer(u, u_low)) - multiply(rho, uu);
  return r;
}

CommutatorTerms commutator_terms(const SolutionState& state, int Q, const CutoffProfile& cutoff) {
  const Products pr(state);
  const auto c = coarse_fields(pr, Q, cutoff);
  const Field u_low = project_low(state.u, Q, cutoff);
  const Field u_high = state.u - u_low;
  const Field rho_high = state.rho - c.rho_low;
  const Field w = c.rho_u_low - multiply(c.rho_low, u_low);
  return CommutatorTerms{
      remainder3(state.rho, state.u, Q, cutoff),
      -1.0 * divide(outer(w, w), c.rho_low),
      multiply(rho_high, outer(u_high, u_high)),
      2.0 * symmetric_part(outer(w, u_high)),
      multiply(state.rho, project_low(outer(state.u, state.u), Q, cutoff) - outer(u_low, u_low)),
  };
}

DecompositionResidual decomposition_check(const SolutionState& state, int Q, const CutoffProfile& cutoff) {
  const Field F = flux_tensor(state, Q, cutoff);
  const auto t = commutator_terms(state, Q, cutoff);
  const Field total = t.triple_remainder + t.mass_defect_square + t.high_triple + t.cross + t.density_commutator;
  DecompositionResidual r;
  r.absolute = lp_norm(F - total, 2.0);
  r.flux_norm = lp_norm(F, 2.0);
  // the unfiltered product sets the scale when every term is at roundoff
  r.term_scale = std::max(r.flux_norm, lp_norm(multiply(state.rho, outer(state.u, state.u)), 2.0));
  for (const Field* f : {&t.triple_remainder, &t.mass_defect_square, &t.high_triple, &t.cross, &t.density_commutator})
    r.term_scale = std::max(r.term_scale, lp_norm(*f, 2.0));
  r.degenerate = r.flux_norm <= 1e-8 * r.term_scale;
  const double denom = r.degenerate ? r.term_scale : r.flux_norm;
  r.relative = denom > 0.0 ? r.absolute / denom : 0.0;
  return r;
}

FluxResult flux(const SolutionState& state, int Q, const CutoffProfile& cutoff) {
  const Products pr(state);
  return flux_from(pr, coarse_fields(pr, Q, cutoff), Q, cutoff);
}

BudgetRates budget_rates(const SolutionState& state, int Q, const CutoffProfile& cutoff) {
  const Products pr(state);
  return rates_from(pr, Q, cutoff);
}

// ---------------------------------------------------------------------------
// Series

void validate_series(std::span<const SolutionState> states) {
  if (states.empty()) throw ValidationError("empty snapshot series");
  const auto& first = states.front();
  for (std::size_t i = 1; i < states.size(); ++i) {
    const auto& s = states[i];
    if (!(s.grid() == first.grid())) throw ValidationError("snapshots live on different grids");
    if (s.mu != first.mu) throw ValidationError("snapshots disagree on the viscosity");
    if (s.force.has_value() != first.force.has_value())
      throw ValidationError("snapshots disagree on the presence of a force");
    if (!(s.t > states[i - 1].t)) throw ValidationError("snapshot times must increase strictly");
  }
}

const FluxRow& FluxSpectrum::at(std::size_t snapshot, int Q) const {
  const std::size_t per = static_cast<std::size_t>(q_hi - q_lo + 1);
  if (Q < q_lo || Q > q_hi) throw ValidationError("Q outside the flux spectrum range");
  return rows.at(snapshot * per + static_cast<std::size_t>(Q - q_lo));
}

FluxSpectrum flux_spectrum(std::span<const SolutionState> states, const CutoffProfile& cutoff, int q_lo,
                           std::optional<int> q_hi_opt) {
  validate_series(states);
  const int q_hi = q_hi_opt.value_or(states.front().grid().q_max());
  if (q_lo < -1 || q_hi < q_lo) throw ValidationError("invalid Q range for the flux spectrum");
  const std::size_t per = static_cast<std::size_t>(q_hi - q_lo + 1);
  const std::size_t ns = states.size();

  std::vector<BudgetRates> rates(ns * per);
  std::vector<GlobalRow> global(ns);
  parallel_for(ns, [&](std::size_t i) {
    const Products pr(states[i]);
    for (std::size_t j = 0; j < per; ++j) rates[i * per + j] = rates_from(pr, q_lo + static_cast<int>(j), cutoff);
    global[i].t = states[i].t;
    global[i].E = kinetic_energy(states[i]);
  });

  // Instantaneous global integrands.
  std::vector<double> dissipation(ns), power(ns);
  for (std::size_t i = 0; i < ns; ++i) {
    dissipation[i] = states[i].mu == 0.0 ? 0.0 : states[i].mu * velocity_gradient_norm2(states[i]);
    power[i] = force_power(states[i]);
  }

  FluxSpectrum out;
  out.q_lo = q_lo;
  out.q_hi = q_hi;
  out.rows.resize(ns * per);
  for (std::size_t j = 0; j < per; ++j) {
    double int_pi = 0.0, eps = 0.0, frc = 0.0;
    for (std::size_t i = 0; i < ns; ++i) {
      const auto& r = rates[i * per + j];
      if (i > 0) {
        const auto& prev = rates[(i - 1) * per + j];
        const double h = 0.5 * (states[i].t - states[i - 1].t);
        int_pi += h * (prev.flux.total + r.flux.total);
        eps += h * (prev.viscous + r.viscous);
        frc += h * (prev.force + r.force);
      }
      FluxRow row;
      row.t = states[i].t;
      row.Q = q_lo + static_cast<int>(j);
      row.E_leQ = r.coarse_energy;
      row.Pi_Q = r.flux.total;
      row.Pi_Q_pressure = r.flux.pressure;
      row.pressure_present = r.flux.pressure_present;
      row.eps_Q = eps;
      row.force_Q = frc;
      row.int_Pi_Q = int_pi;
      row.budget_residual = std::abs(r.coarse_energy - rates[j].coarse_energy - (int_pi - eps + frc));
      out.rows[i * per + j] = row;
    }
  }

  double eps = 0.0, frc = 0.0;
  for (std::size_t i = 0; i < ns; ++i) {
    if (i > 0) {
      const double h = 0.5 * (states[i].t - states[i - 1].t);
      eps += h * (dissipation[i - 1] + dissipation[i]);
      frc += h * (power[i - 1] + power[i]);
    }
    global[i].eps = eps;
    global[i].force = frc;
    global[i].balance_residual = std::abs(global[i].E - global[0].E + eps - frc);
  }
  out.global = std::move(global);
  return out;
}

namespace {

void require_pair(std::span<const SolutionState> states) {
  if (states.size() < 2) throw ValidationError("time integrals need at least two snapshots");
}

}  // namespace

double viscous_term(std::span<const SolutionState> states, int Q, const CutoffProfile& cutoff) {
  require_pair(states);
  const auto fs = flux_spectrum(states, cutoff, Q, Q);
  return fs.rows.back().eps_Q;
}

double viscous_total(std::span<const SolutionState> states) {
  require_pair(states);
  validate_series(states);
  double eps = 0.0;
  double prev = states[0].mu * velocity_gradient_norm2(states[0]);
  for (std::size_t i = 1; i < states.size(); ++i) {
    const double cur = states[i].mu * velocity_gradient_norm2(states[i]);
    eps += 0.5 * (states[i].t - states[i - 1].t) * (prev + cur);
    prev = cur;
  }
  return eps;
}

double budget_residual(std::span<const SolutionState> states, int Q, const CutoffProfile& cutoff) {
  require_pair(states);
  const auto fs = flux_spectrum(states, cutoff, Q, Q);
  return fs.rows.back().budget_residual;
}

EnergyBalanceReport energy_balance_check(std::span<const SolutionState> states, const CutoffProfile& cutoff) {
  require_pair(states);
  const int tail = std::max(-1, states.front().grid().q_max() - 2);
  const auto fs = flux_spectrum(states, cutoff, tail, tail);
  const auto& g_end = fs.global.back();
  const auto& row = fs.rows.back();
  EnergyBalanceReport r;
  r.energy_change = g_end.E - fs.global.front().E;
  r.eps = g_end.eps;
  r.force_work = g_end.force;
  r.balance_residual = g_end.balance_residual;
  r.tail_Q = tail;
  r.coarse_energy_gap = std::abs(row.E_leQ - g_end.E);
  r.integrated_flux = row.int_Pi_Q;
  r.viscous_gap = std::abs(row.eps_Q - g_end.eps);
  r.force_gap = std::abs(row.force_Q - g_end.force);
  return r;
}

void FluxSpectrum::write_csv(std::ostream& os) const {
  os << "t,Q,E_leQ,Pi_Q,Pi_Q_pressure,eps_Q,force_Q,budget_residual\n";
  for (const auto& r : rows) {
    write_double(os, r.t);
    os << ',' << r.Q;
    for (double v : {r.E_leQ, r.Pi_Q, r.Pi_Q_pressure, r.eps_Q, r.force_Q, r.budget_residual}) {
      os << ',';
      write_double(os, v);
    }
    os << '\n';
  }
}

}  // namespace ddns
