#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "ddns/energy_budget.hpp"
#include "ddns/errors.hpp"
#include "ddns/field_factory.hpp"
#include "helpers.hpp"
#include "oracles.hpp"

using namespace ddns;
using testing_util::max_abs;
using testing_util::max_abs_diff;
using testing_util::random_state;

TEST_CASE("state construction checks its invariants") {
  TorusGrid g(2, 16);
  Field rho = constant_field(g, 1, 1.0);
  Field u = single_mode(g, {1, 2, 0}, 1.0, 2);
  CHECK_NOTHROW(SolutionState::make(rho, u));
  Field bad = rho;
  bad.mutable_values()[5] = -0.5;
  try {
    SolutionState::make(bad, u);
    FAIL("accepted a negative density");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("0 < rho_lo <= rho <= rho_hi") != std::string::npos);
    CHECK(std::string(e.what()).find("-0.5") != std::string::npos);
  }
  CHECK_THROWS_AS(SolutionState::make(rho, testing_util::noise(g, 2, 1)), ValidationError);
  CHECK_THROWS_AS(SolutionState::make(rho, constant_field(g, 1, 0.0)), ValidationError);
  CHECK_THROWS_AS(SolutionState::make(rho, u, std::nullopt, std::nullopt, 0.0, -1.0), ValidationError);
  CHECK_THROWS_AS(SolutionState::make(rho, single_mode(TorusGrid(2, 8), {1, 0, 0}, 1.0, 2)), ValidationError);
  CHECK_THROWS_AS(SolutionState::make(rho, u, constant_field(g, 2, 0.0)), ValidationError);
  auto s = SolutionState::make(density_profile(g, 0.4, 1.0, 3), u);
  CHECK(s.rho_lo == doctest::Approx(min_value(s.rho)));
  CHECK(s.rho_hi == doctest::Approx(max_value(s.rho)));
}

TEST_CASE("Taylor-Green energy and coarse energies") {
  TorusGrid g(2, 32);
  auto tg = taylor_green(g, 0.0, 0.0);
  CHECK(kinetic_energy(tg) == doctest::Approx(0.25).epsilon(1e-14));
  CHECK(velocity_gradient_norm2(tg) == doctest::Approx(4 * std::numbers::pi * std::numbers::pi).epsilon(1e-13));
  for (auto kind : {CutoffKind::smooth, CutoffKind::sharp}) {
    auto cut = CutoffProfile::make(kind);
    // |k| = sqrt 2 sits in the transition band of the smooth cutoff at Q = 0
    const double c = static_cast<double>(oracle::chi(kind, std::sqrt(2.0) / 2.0));
    CHECK(coarse_energy(tg, 0, cut) == doctest::Approx(0.25 * c * c).epsilon(1e-13));
    CHECK(coarse_energy(tg, 1, cut) == doctest::Approx(0.25).epsilon(1e-14));
    CHECK(coarse_energy(tg, g.q_max(), cut) == doctest::Approx(0.25).epsilon(1e-14));
  }
}

TEST_CASE("coarse energy at the extremes of Q") {
  TorusGrid g(2, 32);
  auto s = random_state(g, 4, 0.4);
  Field m = multiply(s.rho, s.u);
  const double mrho = mean(s.rho), m0 = mean(m, 0), m1 = mean(m, 1);
  for (auto kind : {CutoffKind::smooth, CutoffKind::sharp}) {
    auto cut = CutoffProfile::make(kind);
    CHECK(coarse_energy(s, -1, cut) == doctest::Approx(0.5 * (m0 * m0 + m1 * m1) / mrho).epsilon(1e-12));
    CHECK(coarse_energy(s, g.q_max(), cut) == doctest::Approx(kinetic_energy(s)).epsilon(1e-12));
  }
}

TEST_CASE("Favre velocity is (rho u)_{<=Q} / rho_{<=Q}") {
  TorusGrid g(2, 32);
  auto s = random_state(g, 7, 0.5);
  auto cut = CutoffProfile::smooth();
  for (int Q = -1; Q <= g.q_max(); ++Q) {
    auto fv = favre_velocity(s, Q, cut);
    Field lhs = multiply(project_low(s.rho, Q, cut), fv.U);
    CHECK(max_abs_diff(lhs, project_low(multiply(s.rho, s.u), Q, cut)) < 1e-13);
    CHECK(fv.min_coarse_density == doctest::Approx(min_value(project_low(s.rho, Q, cut))));
  }
  // at constant density the Favre filter is the plain filter
  auto c = SolutionState::make(constant_field(g, 1, 2.0), s.u);
  CHECK(max_abs_diff(favre_velocity(c, 2, cut).U, project_low(s.u, 2, cut)) < 1e-14);
}

TEST_CASE("coarse density can turn negative under a sharp cutoff") {
  TorusGrid g(2, 16);
  Field rho = constant_field(g, 1, 1e-3);
  rho.mutable_values()[0] = 1.0;
  auto s = SolutionState::make(rho, Field(g, 2));
  bool thrown = false;
  for (int Q = 0; Q < g.q_max(); ++Q) {
    try {
      favre_velocity(s, Q, CutoffProfile::sharp());
    } catch (const NonPositiveCoarseDensity& e) {
      thrown = true;
      CHECK(e.min_coarse_density <= 0.0);
      CHECK(e.cutoff_index == Q);
    }
  }
  CHECK(thrown);
}

TEST_CASE("remainder matches direct quadrature over y") {
  TorusGrid g(2, 16);
  Field f = testing_util::noise(g, 1, 1), h = testing_util::noise(g, 1, 2);
  for (auto kind : {CutoffKind::smooth, CutoffKind::sharp}) {
    auto cut = CutoffProfile::make(kind);
    for (int Q : {-1, 0, 2, 4}) {
      auto ref = oracle::remainder(f, h, Q, kind);
      Field r = remainder(f, h, Q, cut);
      double err = 0.0;
      for (std::size_t i = 0; i < g.size(); ++i) err = std::max(err, std::fabs(static_cast<double>(r.at(0, i) - ref[i])));
      CHECK(err <= 1e-12 * std::max(1.0, oracle::max_abs(ref)));
    }
  }
}

TEST_CASE("remainder identity r_Q - f_>Q g_>Q = (fg)_<=Q - f_<=Q g_<=Q") {
  TorusGrid g(2, 32);
  Field f = testing_util::noise(g, 1, 3), h = testing_util::noise(g, 1, 4);
  for (auto kind : {CutoffKind::smooth, CutoffKind::sharp}) {
    auto cut = CutoffProfile::make(kind);
    for (int Q = -1; Q <= g.q_max(); ++Q) {
      Field lhs = remainder(f, h, Q, cut) - multiply(project_high(f, Q, cut), project_high(h, Q, cut));
      Field rhs = project_low(multiply(f, h), Q, cut) - multiply(project_low(f, Q, cut), project_low(h, Q, cut));
      CHECK(max_abs_diff(lhs, rhs) < 1e-12);
    }
  }
}

TEST_CASE("vector remainder is the tensor of scalar remainders") {
  TorusGrid g(2, 16);
  Field a = testing_util::noise(g, 2, 5), b = testing_util::noise(g, 2, 6);
  auto cut = CutoffProfile::smooth();
  Field r = remainder(a, b, 1, cut);
  REQUIRE(r.components() == 4);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      Field rij = remainder(a.component_field(i), b.component_field(j), 1, cut);
      CHECK(max_abs_diff(r.component_field(i * 2 + j), rij) < 1e-14);
    }
}

TEST_CASE("triple remainder matches direct quadrature") {
  TorusGrid g(2, 16);
  auto s = random_state(g, 2, 0.4, 0.0);
  for (auto kind : {CutoffKind::smooth, CutoffKind::sharp}) {
    Field r = remainder3(s.rho, s.u, 1, CutoffProfile::make(kind));
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) {
        auto ref = oracle::remainder3(s.rho, s.u, i, j, 1, kind);
        double err = 0.0;
        for (std::size_t x = 0; x < g.size(); ++x)
          err = std::max(err, std::fabs(static_cast<double>(r.at(i * 2 + j, x) - ref[x])));
        CHECK(err <= 1e-12 * std::max(1.0, oracle::max_abs(ref)));
      }
  }
}

TEST_CASE("flux tensor and its five-term decomposition") {
  TorusGrid g(2, 32);
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    auto s = random_state(g, seed, 0.3, seed == 0 ? 0.0 : 1.0 / 3.0);
    for (auto kind : {CutoffKind::smooth, CutoffKind::sharp}) {
      auto cut = CutoffProfile::make(kind);
      for (int Q = -1; Q <= g.q_max(); ++Q) {
        Field F = flux_tensor(s, Q, cut);
        CHECK(max_abs_diff(F, symmetric_part(F)) < 1e-13);
        auto terms = commutator_terms(s, Q, cut);
        Field total = terms.triple_remainder + terms.mass_defect_square + terms.high_triple + terms.cross +
                      terms.density_commutator;
        auto res = decomposition_check(s, Q, cut);
        CHECK(res.relative <= 1e-10);
        CHECK(res.absolute == doctest::Approx(lp_norm(F - total, 2.0)).epsilon(1e-6).scale(1e-14));
        if (Q == g.q_max()) CHECK(res.degenerate);
      }
    }
  }
}

TEST_CASE("flux vanishes for band-limited Taylor-Green beyond the band") {
  TorusGrid g(2, 64);
  auto tg = taylor_green(g, 0.01, 0.0);
  for (auto kind : {CutoffKind::smooth, CutoffKind::sharp}) {
    auto cut = CutoffProfile::make(kind);
    for (int Q = -1; Q <= g.q_max(); ++Q) {
      auto f = flux(tg, Q, cut);
      CHECK(f.pressure_present);
      CHECK(std::abs(f.total) < 1e-12);
    }
  }
  auto no_p = SolutionState::make(tg.rho, tg.u);
  CHECK_FALSE(flux(no_p, 2, CutoffProfile::smooth()).pressure_present);
  CHECK(flux(no_p, 2, CutoffProfile::smooth()).pressure == 0.0);
}

TEST_CASE("flux of a random state is finite and collapses at the top shell") {
  TorusGrid g(2, 64);
  auto s = random_state(g, 9, 0.3, 0.0);
  auto cut = CutoffProfile::smooth();
  double biggest = 0.0;
  for (int Q = -1; Q <= g.q_max(); ++Q) biggest = std::max(biggest, std::abs(flux(s, Q, cut).total));
  CHECK(biggest > 1e-3);
  CHECK(std::abs(flux(s, g.q_max(), cut).total) < 1e-12 * biggest + 1e-14);
}

TEST_CASE("budget rates at the top shell reduce to the global ones") {
  TorusGrid g(2, 32);
  auto base = random_state(g, 5, 0.3);
  Field force = single_mode(g, {0, 1, 0}, 0.7, 2);
  auto s = SolutionState::make(base.rho, base.u, std::nullopt, force, 0.0, 0.02);
  auto r = budget_rates(s, g.q_max(), CutoffProfile::smooth());
  CHECK(r.coarse_energy == doctest::Approx(kinetic_energy(s)).epsilon(1e-12));
  CHECK(r.force == doctest::Approx(force_power(s)).epsilon(1e-12));
  CHECK(r.viscous == doctest::Approx(0.02 * velocity_gradient_norm2(s)).epsilon(1e-12));
  CHECK(force_power(base) == 0.0);
}

TEST_CASE("series validation") {
  TorusGrid g(2, 16);
  auto a = taylor_green(g, 0.0, 0.0);
  auto b = taylor_green(g, 0.0, 0.1);
  std::vector<SolutionState> ok{a, b};
  CHECK_NOTHROW(validate_series(ok));
  std::vector<SolutionState> back{b, a};
  CHECK_THROWS_AS(validate_series(back), ValidationError);
  std::vector<SolutionState> mixed{a, taylor_green(TorusGrid(2, 8), 0.0, 0.1)};
  CHECK_THROWS_AS(validate_series(mixed), ValidationError);
  std::vector<SolutionState> visc{a, taylor_green(g, 0.1, 0.1)};
  CHECK_THROWS_AS(validate_series(visc), ValidationError);
  CHECK_THROWS_AS(validate_series(std::vector<SolutionState>{}), ValidationError);
  std::vector<SolutionState> one{a};
  CHECK_THROWS_AS(viscous_total(one), ValidationError);
  CHECK_THROWS_AS(budget_residual(one, 0, CutoffProfile::smooth()), ValidationError);
  CHECK_THROWS_AS(flux_spectrum(ok, CutoffProfile::smooth(), 3, 2), ValidationError);
}

TEST_CASE("decaying Taylor-Green series closes the budget") {
  TorusGrid g(2, 32);
  const double mu = 0.01;
  std::vector<SolutionState> series;
  for (int k = 0; k <= 100; ++k) series.push_back(taylor_green(g, mu, 1e-3 * k));
  auto cut = CutoffProfile::smooth();
  auto spec = flux_spectrum(series, cut);
  CHECK(spec.q_lo == -1);
  CHECK(spec.q_hi == g.q_max());
  CHECK(spec.rows.size() == series.size() * static_cast<std::size_t>(g.q_max() + 2));
  const double decay = std::exp(-16 * std::numbers::pi * std::numbers::pi * mu * 0.1);
  CHECK(spec.global.back().E / spec.global.front().E == doctest::Approx(decay).epsilon(1e-12));
  for (const auto& row : spec.global) CHECK(row.balance_residual < 1e-7);
  for (const auto& row : spec.rows) {
    CHECK(std::abs(row.Pi_Q) < 1e-12);
    CHECK(row.budget_residual < 1e-7);
  }
  CHECK(spec.at(100, 3).eps_Q == doctest::Approx(viscous_total(series)).epsilon(1e-12));
  CHECK(viscous_term(series, 3, cut) == doctest::Approx(viscous_total(series)).epsilon(1e-12));
  CHECK(viscous_term(series, 0, CutoffProfile::sharp()) < 1e-30);
  auto rep = energy_balance_check(series, cut);
  CHECK(rep.tail_Q == g.q_max() - 2);
  CHECK(rep.balance_residual < 1e-7);
  CHECK(rep.coarse_energy_gap < 1e-14);
  CHECK(rep.viscous_gap < 1e-12);

  std::ostringstream os;
  spec.write_csv(os);
  CHECK(os.str().rfind("t,Q,E_leQ,Pi_Q,Pi_Q_pressure,eps_Q,force_Q,budget_residual\n", 0) == 0);
}

TEST_CASE("flux spectrum is independent of the worker count") {
  TorusGrid g(2, 32);
  std::vector<SolutionState> series;
  for (int k = 0; k < 4; ++k) {
    auto s = random_state(g, 3, 0.3);
    series.push_back(SolutionState::make(s.rho, s.u, std::nullopt, std::nullopt, 0.1 * k));
  }
  auto text = [&] {
    std::ostringstream os;
    flux_spectrum(series, CutoffProfile::smooth()).write_csv(os);
    return os.str();
  };
  setenv("DDNS_WORKERS", "1", 1);
  auto a = text();
  setenv("DDNS_WORKERS", "3", 1);
  auto b = text();
  unsetenv("DDNS_WORKERS");
  CHECK(a == b);
}
