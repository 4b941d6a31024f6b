#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "ddns/besov.hpp"
#include "ddns/errors.hpp"
#include "ddns/format.hpp"
#include "ddns/io.hpp"
#include "ddns/khm.hpp"

namespace ddns {

namespace {

struct GeneratorKeys {
  std::string kind;
  std::string mode = "1,0,0";
};

void add_generator(CLI::App& app, const std::string& prefix, GeneratorSpec& g, GeneratorKeys& keys) {
  keys.kind = generator_name(g.kind);
  const std::string p = "--" + prefix + "_";
  app.add_option(p + "kind", keys.kind, "constant|single_mode|taylor_green|random_besov|density_profile");
  app.add_option(p + "seed", g.seed);
  app.add_option(p + "value", g.value, "constant value; offset of a scalar single mode");
  app.add_option(p + "mode", keys.mode, "wavevector, comma separated");
  app.add_option(p + "amplitude", g.amplitude);
  app.add_option(p + "s", g.s);
  app.add_option(p + "p", g.p);
  app.add_option(p + "sigma", g.sigma, "shell decay exponent");
  app.add_option(p + "scale", g.scale);
  app.add_option(p + "divergence_free", g.divergence_free);
  app.add_option(p + "contrast", g.contrast, "density contrast A in [0, 1)");
  app.add_option(p + "smoothness", g.smoothness);
  app.add_option(p + "k_max", g.k_max);
}

void finish_generator(GeneratorSpec& g, const GeneratorKeys& keys) {
  g.kind = parse_generator(keys.kind);
  Lattice k{0, 0, 0};
  std::stringstream ss(keys.mode);
  std::string part;
  int a = 0;
  while (std::getline(ss, part, ',')) {
    if (a >= 3) throw ValidationError("mode has more than three components: " + keys.mode);
    try {
      std::size_t used = 0;
      k[a++] = std::stoi(part, &used);
      if (used != part.size()) throw std::invalid_argument(part);
    } catch (const std::exception&) {
      throw ValidationError("malformed mode '" + keys.mode + "'");
    }
  }
  g.mode = k;
}

/// CSV sink: the named file, or the given stream when the path is empty.
class Sink {
 public:
  Sink(const std::string& path, std::ostream& fallback) {
    if (!path.empty()) {
      file_.open(path);
      if (!file_) throw ValidationError("cannot open " + path + " for writing");
    }
    os_ = path.empty() ? &fallback : &file_;
  }
  std::ostream& operator*() { return *os_; }

 private:
  std::ofstream file_;
  std::ostream* os_;
};

std::vector<SolutionState> load_states(const RunConfig& cfg, bool reconstruct) {
  auto states = read_states(cfg.input);
  if (!reconstruct) return states;
  for (auto& s : states) {
    if (s.p) continue;
    double dev = 0.0;
    for (double v : s.rho.values()) dev = std::max(dev, std::abs(v - 1.0));
    if (dev > 1e-14)
      throw ValidationError("pressure reconstruction solves the Poisson problem and needs rho = 1");
    s.p = unit_density_pressure(s.u);
  }
  return states;
}

// ---------------------------------------------------------------------------
// Subcommands

void cmd_synth(const RunConfig& cfg, std::ostream& err) {
  if (cfg.output.empty()) throw ValidationError("synth needs --output");
  const auto grid = cfg.grid();
  const auto& sc = cfg.solver;
  SolutionState state = [&] {
    if (sc.u0.kind == GeneratorKind::taylor_green && sc.rho0.kind == GeneratorKind::constant &&
        sc.rho0.value == 1.0 && !sc.forcing.active())
      return taylor_green(grid, sc.mu, cfg.time);
    std::optional<Field> force;
    if (sc.forcing.active()) force = forcing_field(grid, sc.forcing, cfg.time);
    return SolutionState::make(generate(grid, sc.rho0, 1), generate(grid, sc.u0, grid.dim()), std::nullopt,
                               std::move(force), cfg.time, sc.mu);
  }();
  if (!cfg.synth_pressure) {
    state.p.reset();
  } else if (!state.p) {
    const auto ps = consistent_pressure(state, sc.pressure_tol, sc.pressure_max_iter, false);
    state.p = ps.p;
    err << "pressure: " << ps.iterations << " iterations, contraction " << format_double(ps.contraction) << '\n';
  }
  write_snapshot(cfg.output, state);
}

void cmd_simulate(const RunConfig& cfg, std::ostream& err) {
  if (cfg.output.empty()) throw ValidationError("simulate needs --output (a directory)");
  if (cfg.dim != 2) throw ValidationError("the solver is two-dimensional (dim = 2)");
  const auto sc = cfg.solver_config();
  auto result = run(sc);
  result.config_hash = cfg.hash();
  write_series(cfg.output, result.snapshots, SeriesManifest{result.config_hash, result.scheme, result.version, {}, {}});
  std::ofstream diag(std::filesystem::path(cfg.output) / "diagnostics.csv");
  diag << provenance_line(cfg) << '\n';
  result.write_diagnostics_csv(diag);
  if (result.gibbs_warning)
    err << "warning: density left its initial bounds by " << format_double(result.max_overshoot)
        << " (Gibbs overshoot above 1e-8)\n";
}

void cmd_project(const RunConfig& cfg, std::ostream& out) {
  const auto states = read_states(cfg.input);
  const auto cutoff = cfg.cutoff_profile();
  Sink sink(cfg.output, out);
  *sink << provenance_line(cfg) << '\n' << "t,field,q,lambda_q,l2_norm\n";
  for (const auto& s : states) {
    for (const auto& [name, f] : {std::pair<const char*, const Field*>{"rho", &s.rho}, {"u", &s.u}}) {
      const auto dec = decompose(*f, cutoff);
      for (int q = -1; q <= dec.q_max(); ++q) {
        write_double(*sink, s.t);
        *sink << ',' << name << ',' << q << ',';
        write_double(*sink, lambda(q));
        *sink << ',';
        write_double(*sink, lp_norm(dec.shell(q), 2.0));
        *sink << '\n';
      }
    }
  }
}

BesovParams besov_params(const RunConfig& cfg) {
  BesovParams p;
  p.s = cfg.s;
  p.p = cfg.besov_p;
  if (cfg.besov_r == "c0") {
    p.r_is_c0 = true;
  } else if (cfg.besov_r != "inf") {
    p.r = std::stod(cfg.besov_r);
  }
  return p;
}

void cmd_besov(const RunConfig& cfg, std::ostream& out) {
  const auto states = read_states(cfg.input);
  const auto cutoff = cfg.cutoff_profile();
  const auto params = besov_params(cfg);
  Sink sink(cfg.output, out);
  *sink << provenance_line(cfg) << '\n' << "t,field,q,lambda_q,d_q,D_q,norm,tail_sup,decay_slope\n";
  for (const auto& s : states) {
    for (const auto& [name, f] : {std::pair<const char*, const Field*>{"rho", &s.rho}, {"u", &s.u}}) {
      const auto coeffs = shell_coefficients(*f, params, cutoff);
      const auto sums = localized_sum(coeffs);
      const auto norm = besov_norm(coeffs);
      for (int q = -1; q <= coeffs.q_max(); ++q) {
        write_double(*sink, s.t);
        *sink << ',' << name << ',' << q;
        for (double v : {lambda(q), coeffs.at(q), sums.at(q), norm.value, norm.tail_sup, norm.decay_slope}) {
          *sink << ',';
          write_double(*sink, v);
        }
        *sink << '\n';
      }
    }
  }
}

void cmd_flux(const RunConfig& cfg, std::ostream& out) {
  const auto states = load_states(cfg, cfg.reconstruct_pressure);
  const auto fs = flux_spectrum(states, cfg.cutoff_profile(), cfg.q_lo.value_or(-1), cfg.q_hi);
  Sink sink(cfg.output, out);
  *sink << provenance_line(cfg) << '\n';
  fs.write_csv(*sink);
}

void cmd_budget(const RunConfig& cfg, std::ostream& out) {
  const auto states = load_states(cfg, cfg.reconstruct_pressure);
  if (states.size() < 2) throw ValidationError("budget needs a series with at least two snapshots");
  const auto fs = flux_spectrum(states, cfg.cutoff_profile(), cfg.q_lo.value_or(-1), cfg.q_hi);
  const std::size_t last = states.size() - 1;
  const auto& g0 = fs.global.front();
  const auto& g1 = fs.global.back();
  Sink sink(cfg.output, out);
  *sink << provenance_line(cfg) << '\n'
        << "Q,E_leQ_change,int_Pi_Q,eps_Q,force_Q,budget_residual,E_change,eps,force_work,balance_residual\n";
  for (int Q = fs.q_lo; Q <= fs.q_hi; ++Q) {
    const auto& r = fs.at(last, Q);
    *sink << Q;
    for (double v : {r.E_leQ - fs.at(0, Q).E_leQ, r.int_Pi_Q, r.eps_Q, r.force_Q, r.budget_residual, g1.E - g0.E,
                     g1.eps, g1.force, g1.balance_residual}) {
      *sink << ',';
      write_double(*sink, v);
    }
    *sink << '\n';
  }
}

void cmd_khm(const RunConfig& cfg, std::ostream& out) {
  const auto states = read_states(cfg.input);
  const auto& s = states.front();
  const auto flux = khm_flux(s, LagGrid::box(s.grid(), cfg.lag_radius));
  Sink sink(cfg.output, out);
  *sink << provenance_line(cfg) << '\n';
  flux.write_csv(*sink);
}

void cmd_verify(const RunConfig& cfg, std::ostream& out) {
  Field f = constant_field(cfg.grid(), 1, 0.0), g = f;
  if (!cfg.input.empty()) {
    const auto states = read_states(cfg.input);
    f = states.front().rho;
    g = states.front().u.component_field(0);
  } else {
    f = generate(cfg.grid(), cfg.solver.rho0, 1);
    g = generate(cfg.grid(), cfg.solver.u0, 1);
  }
  EstimateParams p;
  p.s = cfg.s;
  p.t = cfg.t_smooth;
  p.a = cfg.a;
  p.b = cfg.b;
  p.q_lo = cfg.q_lo.value_or(3);
  p.q_hi = cfg.q_hi;
  p.growth_tolerance = cfg.growth_tolerance;
  const auto report = verify_kernel_estimates(f, g, p, cfg.cutoff_profile());
  Sink sink(cfg.output, out);
  *sink << provenance_line(cfg) << '\n';
  report.write_csv(*sink);
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  GeneratorKeys rho_keys, u_keys;
  auto& sc = cfg.solver;

  CLI::App app{"Coarse-grained energy budgets and structure functions for density-dependent flow"};
  app.set_config("--config", "", "flat key = value file; keys mirror the long options");
  app.allow_config_extras(CLI::config_extras_mode::error);
  app.require_subcommand(1, 1);

  app.add_option("--dim", cfg.dim);
  app.add_option("--n", cfg.n, "points per axis (power of two >= 8)");
  app.add_option("--cutoff", cfg.cutoff, "smooth|sharp");
  app.add_option("--s", cfg.s);
  app.add_option("--t", cfg.t_smooth, "smoothness of the second factor in the estimates");
  app.add_option("--a", cfg.a);
  app.add_option("--b", cfg.b);
  app.add_option("--besov_p", cfg.besov_p);
  app.add_option("--besov_r", cfg.besov_r, "number, inf or c0");
  app.add_option("--hypothesis_regime", cfg.hypothesis_regime, "require 1/a + 3/b = 1, b >= 3");
  app.add_option_function<int>("--q_lo", [&](const int& v) { cfg.q_lo = v; });
  app.add_option_function<int>("--q_hi", [&](const int& v) { cfg.q_hi = v; });
  app.add_option("--tail_start", cfg.tail_start);
  app.add_option("--lag_radius", cfg.lag_radius);
  app.add_option("--growth_tolerance", cfg.growth_tolerance);
  app.add_option("--reconstruct_pressure", cfg.reconstruct_pressure, "Poisson pressure for rho = 1 inputs");
  app.add_option("--time", cfg.time, "snapshot time for synth");
  app.add_option("--synth_pressure", cfg.synth_pressure);
  app.add_option("--mu", sc.mu);
  app.add_option("--end_time", sc.end_time);
  app.add_option("--dt", sc.dt);
  app.add_option("--dealias", sc.dealias);
  app.add_option("--pressure_tol", sc.pressure_tol);
  app.add_option("--pressure_max_iter", sc.pressure_max_iter);
  app.add_option("--cfl", sc.cfl);
  app.add_option("--snapshot_every", sc.snapshot_every);
  app.add_option("--force_amplitude", sc.forcing.amplitude);
  app.add_option("--force_wavenumber", sc.forcing.wavenumber);
  app.add_option("--force_frequency", sc.forcing.frequency);
  add_generator(app, "rho", sc.rho0, rho_keys);
  add_generator(app, "u", sc.u0, u_keys);
  app.add_option("--input", cfg.input, "snapshot file or series directory");
  app.add_option("--output", cfg.output, "output file (CSV to stdout when empty) or directory");

  using Handler = std::function<void()>;
  std::map<CLI::App*, Handler> handlers;
  auto sub = [&](const char* name, const char* help, Handler h) {
    auto* s = app.add_subcommand(name, help);
    s->fallthrough();
    handlers[s] = std::move(h);
  };
  sub("synth", "write a generated snapshot", [&] { cmd_synth(cfg, err); });
  sub("simulate", "run the solver into a series directory", [&] { cmd_simulate(cfg, err); });
  sub("project", "shell norms ||f_q||_2 against lambda_q", [&] { cmd_project(cfg, out); });
  sub("besov", "shell coefficients d_q, localized sums D_Q and norms", [&] { cmd_besov(cfg, out); });
  sub("flux", "flux spectrum per snapshot and Q", [&] { cmd_flux(cfg, out); });
  sub("budget", "budget residual sweep over Q at the final time", [&] { cmd_budget(cfg, out); });
  sub("khm", "structure-function flux pi(l) on a lag box", [&] { cmd_khm(cfg, out); });
  sub("verify-estimates", "measured constants of the shell estimates", [&] { cmd_verify(cfg, out); });

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }

  try {
    finish_generator(sc.rho0, rho_keys);
    finish_generator(sc.u0, u_keys);
    cfg.validate();
    for (auto& [app_ptr, handler] : handlers)
      if (app_ptr->parsed()) handler();
    return 0;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return 3;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
}

}  // namespace ddns
