#include "ddns/solver.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <sstream>

#include "ddns/errors.hpp"
#include "ddns/format.hpp"
#include "ddns/hash.hpp"
#include "ddns/reduce.hpp"

namespace ddns {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

Field maybe_dealias(const Field& f, bool on) { return on ? dealias(f) : f; }

double max_speed(const Field& u) {
  const std::size_t n = u.points();
  double m = 0.0;
  for (std::size_t x = 0; x < n; ++x) {
    double s = 0.0;
    for (int c = 0; c < u.components(); ++c) s += u.at(c, x) * u.at(c, x);
    m = std::max(m, s);
  }
  return std::sqrt(m);
}

Field reciprocal(const Field& rho) {
  std::vector<double> v(rho.values().begin(), rho.values().end());
  for (auto& x : v) x = 1.0 / x;
  return Field(rho.grid(), 1, std::move(v));
}

}  // namespace

Field forcing_field(const TorusGrid& grid, const ForcingSpec& spec, double t) {
  if (grid.dim() < 2) throw ValidationError("the shear force needs d >= 2");
  const std::size_t n = grid.size();
  std::vector<double> v(n * grid.dim(), 0.0);
  const double amp = spec.amplitude * std::cos(spec.frequency * t);
  for (std::size_t i = 0; i < n; ++i) {
    const auto c = grid.coords(i);
    const long long m = (static_cast<long long>(spec.wavenumber) * c[1] % grid.n() + grid.n()) % grid.n();
    v[i] = amp * std::sin(kTwoPi * static_cast<double>(m) / grid.n());
  }
  return Field(grid, grid.dim(), std::move(v));
}

// ---------------------------------------------------------------------------
// Configuration

void SolverConfig::validate() const {
  TorusGrid(2, n);  // validates n
  if (!(mu >= 0.0) || !std::isfinite(mu)) throw ValidationError("viscosity mu must be finite and >= 0");
  if (!(end_time >= 0.0) || !std::isfinite(end_time)) throw ValidationError("end time must be finite and >= 0");
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ValidationError("time step dt must be positive");
  if (!(pressure_tol > 0.0 && pressure_tol <= 1e-10)) throw ValidationError("pressure_tol must lie in (0, 1e-10]");
  if (pressure_max_iter < 1) throw ValidationError("pressure_max_iter must be >= 1");
  if (!(cfl > 0.0 && cfl <= 0.5)) throw ValidationError("CFL constant must lie in (0, 0.5]");
  if (snapshot_every < 1) throw ValidationError("snapshot cadence must be >= 1");
  if (!std::isfinite(forcing.amplitude) || !std::isfinite(forcing.frequency))
    throw ValidationError("forcing parameters must be finite");
  if (forcing.active() && forcing.wavenumber < 1) throw ValidationError("forcing wavenumber must be >= 1");
  rho0.validate();
  u0.validate();
  steps();
}

long long SolverConfig::steps() const {
  const double ratio = end_time / dt;
  const long long k = std::llround(ratio);
  if (std::abs(ratio - static_cast<double>(k)) > 1e-9 * std::max(1.0, ratio))
    throw ValidationError("end time " + format_double(end_time) + " is not a whole number of steps of " +
                          format_double(dt));
  return k;
}

namespace {

void put_generator(std::map<std::string, std::string>& kv, const std::string& prefix, const GeneratorSpec& g) {
  kv[prefix + "kind"] = generator_name(g.kind);
  kv[prefix + "seed"] = std::to_string(g.seed);
  kv[prefix + "value"] = format_double(g.value);
  kv[prefix + "mode"] = std::to_string(g.mode[0]) + "," + std::to_string(g.mode[1]) + "," + std::to_string(g.mode[2]);
  kv[prefix + "amplitude"] = format_double(g.amplitude);
  kv[prefix + "s"] = format_double(g.s);
  kv[prefix + "p"] = format_double(g.p);
  kv[prefix + "sigma"] = format_double(g.sigma);
  kv[prefix + "scale"] = format_double(g.scale);
  kv[prefix + "divergence_free"] = g.divergence_free ? "true" : "false";
  kv[prefix + "contrast"] = format_double(g.contrast);
  kv[prefix + "smoothness"] = format_double(g.smoothness);
  kv[prefix + "k_max"] = std::to_string(g.k_max);
}

}  // namespace

std::string SolverConfig::canonical() const {
  std::map<std::string, std::string> kv;
  kv["n"] = std::to_string(n);
  kv["mu"] = format_double(mu);
  kv["end_time"] = format_double(end_time);
  kv["dt"] = format_double(dt);
  kv["dealias"] = dealias ? "true" : "false";
  kv["pressure_tol"] = format_double(pressure_tol);
  kv["pressure_max_iter"] = std::to_string(pressure_max_iter);
  kv["cfl"] = format_double(cfl);
  kv["force_amplitude"] = format_double(forcing.amplitude);
  kv["force_wavenumber"] = std::to_string(forcing.wavenumber);
  kv["force_frequency"] = format_double(forcing.frequency);
  kv["snapshot_every"] = std::to_string(snapshot_every);
  put_generator(kv, "rho_", rho0);
  put_generator(kv, "u_", u0);
  std::string out;
  for (const auto& [k, v] : kv) out += k + "=" + v + "\n";
  return out;
}

// ---------------------------------------------------------------------------
// Pressure

PressureSolve pressure_solve(const Field& rho, const Field& G, double tol, int max_iter, bool dealias_on,
                             const Field* guess) {
  require_same_grid(rho, G);
  const auto& grid = rho.grid();
  const Field rhs = divergence(G);
  const double rhs_norm = lp_norm(rhs, 2.0);
  PressureSolve out{constant_field(grid, 1, 0.0)};
  if (rhs_norm == 0.0) return out;

  const Field inv_rho = reciprocal(rho);
  const double m = mean(inv_rho);
  auto apply = [&](const Field& p) { return divergence(maybe_dealias(multiply(inv_rho, gradient(p)), dealias_on)); };

  Field p = guess ? *guess : constant_field(grid, 1, 0.0);
  double first = -1.0, prev = -1.0;
  for (int it = 0;; ++it) {
    const Field r = rhs - apply(p);
    const double rn = lp_norm(r, 2.0) / rhs_norm;
    if (first < 0.0) first = rn;
    if (it > 0) out.contraction = std::pow(rn / first, 1.0 / it);
    if (rn <= tol) {
      out.p = std::move(p);
      out.iterations = it;
      out.residual = rn;
      return out;
    }
    const bool diverging = it >= 3 && rn > prev && rn > 10.0 * first;
    if (it >= max_iter || diverging || !std::isfinite(rn)) throw PressureNonConvergence(it, rn, out.contraction);
    prev = rn;
    p = p + (1.0 / m) * inverse_div_grad(r);
  }
}

Field momentum_forcing(const Field& rho, const Field& u, double mu, const std::optional<Field>& force,
                       bool dealias_on) {
  const auto& grid = u.grid();
  const int d = grid.dim();
  const std::size_t n = grid.size();
  const Field grad_u = gradient(u);
  std::vector<double> adv(n * d, 0.0);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      for (std::size_t x = 0; x < n; ++x) adv[i * n + x] -= u.at(j, x) * grad_u.at(i * d + j, x);
  Field G = maybe_dealias(Field(grid, d, std::move(adv)), dealias_on);
  if (mu != 0.0) G = G + maybe_dealias(mu * divide(laplacian(u), rho), dealias_on);
  if (force) G = G + *force;
  return G;
}

PressureSolve consistent_pressure(const SolutionState& state, double tol, int max_iter, bool dealias_on) {
  const Field G = momentum_forcing(state.rho, state.u, state.mu, state.force, dealias_on);
  return pressure_solve(state.rho, G, tol, max_iter, dealias_on, state.p ? &*state.p : nullptr);
}

Field unit_density_pressure(const Field& u) {
  return inverse_div_grad(-1.0 * divergence(divergence(outer(u, u))));
}

// ---------------------------------------------------------------------------
// Time stepping

namespace {

struct Rates {
  Field rho_t;
  Field u_t;
  PressureSolve pressure;
};

Rates rates(const Field& rho, const Field& u, double t, const SolverConfig& cfg, const Field* guess) {
  const double lo = min_value(rho);
  if (!(lo > 0.0)) throw NumericalError("density lost positivity during a stage (min " + format_double(lo) + ")");
  const auto& grid = rho.grid();
  std::optional<Field> force;
  if (cfg.forcing.active()) force = forcing_field(grid, cfg.forcing, t);
  const Field G = momentum_forcing(rho, u, cfg.mu, force, cfg.dealias);
  auto ps = pressure_solve(rho, G, cfg.pressure_tol, cfg.pressure_max_iter, cfg.dealias, guess);
  Field u_t = G - maybe_dealias(divide(gradient(ps.p), rho), cfg.dealias);
  Field rho_t = -1.0 * divergence(maybe_dealias(multiply(rho, u), cfg.dealias));
  return Rates{std::move(rho_t), std::move(u_t), std::move(ps)};
}

}  // namespace

SolutionState step(const SolutionState& state, const SolverConfig& cfg, StepDiagnostics* diag) {
  const auto& grid = state.grid();
  if (grid.dim() != 2) throw ValidationError("the solver is two-dimensional");
  const double dt = cfg.dt;
  const double speed = max_speed(state.u);
  const double cfl_number = dt * speed / grid.spacing();
  if (cfl_number > cfg.cfl)
    throw CflViolation("dt = " + format_double(dt) + " violates dt <= " + format_double(cfg.cfl) +
                       " dx / max|u| (CFL number " + format_double(cfl_number) + ")");

  const double t = state.t;
  const Field* guess = state.p ? &*state.p : nullptr;
  auto k1 = rates(state.rho, state.u, t, cfg, guess);
  auto k2 = rates(state.rho + (0.5 * dt) * k1.rho_t, state.u + (0.5 * dt) * k1.u_t, t + 0.5 * dt, cfg, &k1.pressure.p);
  auto k3 = rates(state.rho + (0.5 * dt) * k2.rho_t, state.u + (0.5 * dt) * k2.u_t, t + 0.5 * dt, cfg, &k2.pressure.p);
  auto k4 = rates(state.rho + dt * k3.rho_t, state.u + dt * k3.u_t, t + dt, cfg, &k3.pressure.p);

  const double w = dt / 6.0;
  Field rho = state.rho + w * (k1.rho_t + 2.0 * k2.rho_t + 2.0 * k3.rho_t + k4.rho_t);
  Field u = leray_project(state.u + w * (k1.u_t + 2.0 * k2.u_t + 2.0 * k3.u_t + k4.u_t));

  const double lo = min_value(rho), hi = max_value(rho);
  if (!(lo > 0.0)) throw NumericalError("density lost positivity (min " + format_double(lo) + ")");

  SolutionState next{std::move(rho), std::move(u), std::nullopt, std::nullopt, t + dt, state.mu,
                     std::min(state.rho_lo, lo), std::max(state.rho_hi, hi)};
  if (cfg.forcing.active()) next.force = forcing_field(grid, cfg.forcing, next.t);
  const Field G = momentum_forcing(next.rho, next.u, next.mu, next.force, cfg.dealias);
  auto snap_p = pressure_solve(next.rho, G, cfg.pressure_tol, cfg.pressure_max_iter, cfg.dealias, &k4.pressure.p);
  next.p = std::move(snap_p.p);

  if (diag) {
    StepDiagnostics& dg = *diag;
    dg = StepDiagnostics{};
    dg.t = next.t;
    for (const auto* k : {&k1, &k2, &k3, &k4}) {
      dg.pressure_iterations += k->pressure.iterations;
      dg.pressure_residual = std::max(dg.pressure_residual, k->pressure.residual);
      dg.contraction = std::max(dg.contraction, k->pressure.contraction);
    }
    dg.divergence_defect = divergence_defect(next.u);
    dg.rho_min = lo;
    dg.rho_max = hi;
    dg.overshoot = std::max({0.0, state.rho_lo - lo, hi - state.rho_hi});
    dg.gibbs_warning = dg.overshoot > 1e-8;
    dg.cfl_number = cfl_number;
  }
  return next;
}

SolutionState initial_state(const SolverConfig& cfg) {
  cfg.validate();
  const TorusGrid grid(2, cfg.n);
  Field rho = generate(grid, cfg.rho0, 1);
  Field u = leray_project(generate(grid, cfg.u0, 2));
  if (cfg.dealias) {
    rho = dealias(rho);
    u = dealias(u);
  }
  std::optional<Field> force;
  if (cfg.forcing.active()) force = forcing_field(grid, cfg.forcing, 0.0);
  auto state = SolutionState::make(std::move(rho), std::move(u), std::nullopt, std::move(force), 0.0, cfg.mu);
  state.p = consistent_pressure(state, cfg.pressure_tol, cfg.pressure_max_iter, cfg.dealias).p;
  return state;
}

RunResult run(const SolverConfig& cfg) { return run(cfg, initial_state(cfg)); }

RunResult run(const SolverConfig& cfg, const SolutionState& initial) {
  cfg.validate();
  if (initial.grid().dim() != 2 || initial.grid().n() != cfg.n)
    throw ValidationError("initial state does not match the configured grid");
  RunResult out;
  out.config_hash = hex64(fnv1a64(cfg.canonical()));
  const long long steps = cfg.steps();
  const double lo0 = min_value(initial.rho), hi0 = max_value(initial.rho);

  SolutionState state = initial;
  out.snapshots.push_back(state);
  for (long long k = 1; k <= steps; ++k) {
    StepDiagnostics dg;
    state = step(state, cfg, &dg);
    // Times from the step count, not accumulated sums.
    state.t = initial.t + static_cast<double>(k) * cfg.dt;
    dg.t = state.t;
    const double over = std::max({0.0, lo0 - dg.rho_min, dg.rho_max - hi0});
    out.max_overshoot = std::max(out.max_overshoot, over);
    out.gibbs_warning = out.gibbs_warning || over > 1e-8;
    out.diagnostics.push_back(dg);
    if (k % cfg.snapshot_every == 0 || k == steps) out.snapshots.push_back(state);
  }
  return out;
}

void RunResult::write_diagnostics_csv(std::ostream& os) const {
  os << "t,pressure_iterations,pressure_residual,contraction,divergence_defect,rho_min,rho_max,overshoot,cfl_number\n";
  for (const auto& d : diagnostics) {
    write_double(os, d.t);
    os << ',' << d.pressure_iterations;
    for (double v : {d.pressure_residual, d.contraction, d.divergence_defect, d.rho_min, d.rho_max, d.overshoot,
                     d.cfl_number}) {
      os << ',';
      write_double(os, v);
    }
    os << '\n';
  }
}

// ---------------------------------------------------------------------------
// Weak residuals

namespace {

struct TestFunction {
  std::vector<double> phi;
  std::vector<std::vector<double>> grad;  // d components
  double k2 = 0.0;
};

std::vector<TestFunction> test_bank(const TorusGrid& grid, int k_max) {
  const int d = grid.dim();
  const std::size_t n = grid.size();
  std::vector<TestFunction> bank;
  const int r = std::min(k_max, grid.n() / 2 - 1);
  std::vector<Lattice> modes;
  Lattice k{0, 0, 0};
  const int side = 2 * r + 1;
  int total = 1;
  for (int a = 0; a < d; ++a) total *= side;
  for (int idx = 0; idx < total; ++idx) {
    int rest = idx;
    for (int a = d - 1; a >= 0; --a) {
      k[a] = rest % side - r;
      rest /= side;
    }
    int k2 = 0, first = 0;
    for (int a = 0; a < d; ++a) {
      k2 += k[a] * k[a];
      if (first == 0) first = k[a];
    }
    if (k2 > k_max * k_max || first < 0) continue;
    modes.push_back(k);
  }
  for (const auto& m : modes) {
    bool zero = true;
    for (int a = 0; a < d; ++a) zero = zero && m[a] == 0;
    for (int kind = 0; kind < (zero ? 1 : 2); ++kind) {
      TestFunction tf;
      tf.phi.resize(n);
      tf.grad.assign(d, std::vector<double>(n));
      for (int a = 0; a < d; ++a) tf.k2 += static_cast<double>(m[a]) * m[a];
      for (std::size_t i = 0; i < n; ++i) {
        const auto c = grid.coords(i);
        long long kx = 0;
        for (int a = 0; a < d; ++a) kx += static_cast<long long>(m[a]) * c[a];
        const long long w = ((kx % grid.n()) + grid.n()) % grid.n();
        const double th = kTwoPi * static_cast<double>(w) / grid.n();
        const double cs = std::cos(th), sn = std::sin(th);
        tf.phi[i] = kind == 0 ? cs : sn;
        for (int a = 0; a < d; ++a) tf.grad[a][i] = kTwoPi * m[a] * (kind == 0 ? -sn : cs);
      }
      bank.push_back(std::move(tf));
    }
  }
  return bank;
}

double dot(std::span<const double> a, std::span<const double> b, double w) {
  std::vector<double> p(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) p[i] = a[i] * b[i];
  return integrate(p, w);
}

}  // namespace

WeakResidualReport weak_residuals(std::span<const SolutionState> states, int k_max) {
  if (states.size() < 2) throw ValidationError("weak residuals need at least two snapshots");
  validate_series(states);
  const auto& grid = states.front().grid();
  const int d = grid.dim();
  const double w = grid.cell_volume();
  const auto bank = test_bank(grid, k_max);
  const std::size_t ns = states.size();
  bool have_p = true;
  for (const auto& s : states) have_p = have_p && s.p.has_value();

  WeakResidualReport rep;
  rep.test_functions = static_cast<int>(bank.size());
  rep.momentum_checked = have_p;

  // Per snapshot, per test function: the functionals entering each identity.
  std::vector<std::vector<double>> mass_val(ns), mass_rate(ns);
  std::vector<std::vector<double>> mom_val(ns), mom_rate(ns);
  for (std::size_t s = 0; s < ns; ++s) {
    const auto& st = states[s];
    const Field m = multiply(st.rho, st.u);
    const Field muu = multiply(st.rho, outer(st.u, st.u));
    std::optional<Field> rf;
    if (st.force) rf = multiply(st.rho, *st.force);
    for (const auto& tf : bank) {
      mass_val[s].push_back(dot(st.rho.values(), tf.phi, w));
      double r = 0.0;
      for (int a = 0; a < d; ++a) r += dot(m.component(a), tf.grad[a], w);
      mass_rate[s].push_back(r);
      double inc = 0.0;
      for (int a = 0; a < d; ++a) inc += dot(st.u.component(a), tf.grad[a], w);
      rep.incompressibility = std::max(rep.incompressibility, std::abs(inc));
      if (!have_p) continue;
      const double lap = -kTwoPi * kTwoPi * tf.k2;
      for (int i = 0; i < d; ++i) {
        mom_val[s].push_back(dot(m.component(i), tf.phi, w));
        double rate = dot(st.p->values(), tf.grad[i], w);
        for (int j = 0; j < d; ++j) rate += dot(muu.component(i * d + j), tf.grad[j], w);
        rate += st.mu * lap * dot(st.u.component(i), tf.phi, w);
        if (rf) rate += dot(rf->component(i), tf.phi, w);
        mom_rate[s].push_back(rate);
      }
    }
  }

  auto residual = [&](const std::vector<std::vector<double>>& val, const std::vector<std::vector<double>>& rate,
                      std::size_t idx) {
    double integral = 0.0;
    for (std::size_t s = 1; s < ns; ++s)
      integral += 0.5 * (states[s].t - states[s - 1].t) * (rate[s - 1][idx] + rate[s][idx]);
    return std::abs(val[ns - 1][idx] - val[0][idx] - integral);
  };
  for (std::size_t f = 0; f < bank.size(); ++f) rep.mass = std::max(rep.mass, residual(mass_val, mass_rate, f));
  if (have_p)
    for (std::size_t f = 0; f < mom_val[0].size(); ++f)
      rep.momentum = std::max(rep.momentum, residual(mom_val, mom_rate, f));
  return rep;
}

}  // namespace ddns
