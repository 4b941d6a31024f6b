#include <doctest.h>

#include <cmath>
#include <numbers>

#include "ddns/besov.hpp"
#include "ddns/errors.hpp"
#include "ddns/field_factory.hpp"
#include "ddns/solver.hpp"
#include "helpers.hpp"

using namespace ddns;
using testing_util::max_abs;
using testing_util::max_abs_diff;

namespace {

// (u.grad)u with component i = sum_j u_j d_j u_i
Field advection(const Field& u) {
  const Field grad = gradient(u);
  const int d = u.grid().dim();
  Field out(u.grid(), d);
  for (int i = 0; i < d; ++i) {
    auto dst = out.mutable_component(i);
    for (int j = 0; j < d; ++j)
      for (std::size_t x = 0; x < u.points(); ++x) dst[x] += u.at(j, x) * grad.at(i * d + j, x);
  }
  return out;
}

}  // namespace

TEST_CASE("SplitMix64 reference sequence") {
  SplitMix64 rng(0);
  CHECK(rng.next() == 0xe220a8397b1dcdafULL);
  CHECK(rng.next() == 0x6e789e6aa1b965f4ULL);
  CHECK(rng.next() == 0x06c45d188009454fULL);
  SplitMix64 a(1234567);
  SplitMix64 b(1234567);
  for (int i = 0; i < 10; ++i) CHECK(a.next() == b.next());
  CHECK(SplitMix64::to_unit(0) == 0.0);
  CHECK(SplitMix64::to_unit(~0ULL) < 1.0);
}

TEST_CASE("counter-based draws") {
  const std::uint64_t G = 0x9e3779b97f4a7c15ULL;
  for (std::uint64_t seed : {0ULL, 7ULL, 1ULL << 40})
    for (std::uint64_t stream : {0ULL, 3ULL})
      for (std::uint64_t counter : {0ULL, 1ULL, 99ULL}) {
        const auto expect = SplitMix64::mix((seed + G * (counter + 1)) ^ SplitMix64::mix(stream + G));
        CHECK(SplitMix64::draw(seed, stream, counter) == expect);
      }
  // draw(seed, 0, counter) for stream-free use is still seed-sensitive
  CHECK(SplitMix64::draw(1, 0, 0) != SplitMix64::draw(2, 0, 0));
}

TEST_CASE("generator names") {
  for (auto k : {GeneratorKind::constant, GeneratorKind::single_mode, GeneratorKind::taylor_green,
                 GeneratorKind::random_besov, GeneratorKind::density_profile})
    CHECK(parse_generator(generator_name(k)) == k);
  CHECK_THROWS_AS(parse_generator("gaussian"), ValidationError);
}

TEST_CASE("generator spec validation") {
  GeneratorSpec s;
  CHECK_NOTHROW(s.validate());
  s.contrast = 1.0;
  CHECK_THROWS_AS(s.validate(), ValidationError);
  s = GeneratorSpec{};
  s.sigma = -0.1;
  CHECK_THROWS_AS(s.validate(), ValidationError);
  s = GeneratorSpec{};
  s.k_max = 0;
  CHECK_THROWS_AS(s.validate(), ValidationError);
  s = GeneratorSpec{};
  s.scale = 0.0;
  CHECK_THROWS_AS(s.validate(), ValidationError);
  TorusGrid g(2, 16);
  CHECK_THROWS_AS(generate(g, GeneratorSpec{GeneratorKind::taylor_green}, 1), ValidationError);
  CHECK_THROWS_AS(generate(g, GeneratorSpec{GeneratorKind::density_profile}, 2), ValidationError);
  CHECK_THROWS_AS(single_mode(g, {0, 0, 0}, 1.0, 2), ValidationError);
}

TEST_CASE("constant and single-mode fields") {
  TorusGrid g(2, 16);
  Field c = generate(g, GeneratorSpec{GeneratorKind::constant, 0, 2.5}, 1);
  CHECK(min_value(c) == 2.5);
  CHECK(max_value(c) == 2.5);
  Field s = single_mode(g, {2, 1, 0}, 0.5, 1, 1.0);
  CHECK(mean(s) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(max_value(s) == doctest::Approx(1.5));
  for (std::size_t i = 0; i < g.size(); ++i) {
    auto x = g.position(i);
    CHECK(s.at(0, i) == doctest::Approx(1.0 + 0.5 * std::cos(2 * std::numbers::pi * (2 * x[0] + x[1]))).epsilon(1e-14));
  }
  Field v = single_mode(g, {2, 1, 0}, 1.0, 2);
  CHECK(divergence_defect(v) < 1e-15);
  CHECK(lp_norm(v, kInfinity) == doctest::Approx(1.0));
}

TEST_CASE("Taylor-Green vortex") {
  TorusGrid g(2, 32);
  const double mu = 0.05, t = 0.3;
  auto s = taylor_green(g, mu, t);
  const double decay = std::exp(-8 * std::numbers::pi * std::numbers::pi * mu * t);
  CHECK(max_value(s.u) == doctest::Approx(decay).epsilon(1e-12));
  CHECK(kinetic_energy(s) == doctest::Approx(0.25 * decay * decay).epsilon(1e-13));
  CHECK(divergence_defect(s.u) < 1e-15);
  REQUIRE(s.p.has_value());
  CHECK(s.t == t);
  CHECK(s.mu == mu);
  // the pressure balances the advection: (u.grad)u = -grad p
  Field adv = advection(s.u);
  CHECK(max_abs_diff(adv, -1.0 * gradient(*s.p)) < 1e-12);
  CHECK(max_abs_diff(unit_density_pressure(s.u), *s.p) < 1e-13);
  CHECK_THROWS_AS(taylor_green(TorusGrid(3, 8), 0.0, 0.0), ValidationError);
}

TEST_CASE("random Besov fields hit their shell targets") {
  TorusGrid g(2, 64);
  for (double sigma : {0.0, 1.0 / 3.0, 1.0}) {
    for (bool df : {false, true}) {
      BesovFieldSpec spec{1.0 / 3.0, 3.0, sigma, 0.7, df ? 2 : 1, df, 42};
      Field f = random_besov(g, spec);
      CHECK(f.reality_defect() < 1e-13);
      if (df) CHECK(divergence_defect(f) < 1e-14);
      auto d = shell_coefficients(f, {1.0 / 3.0, 3.0}, CutoffProfile::sharp());
      CHECK(d.at(-1) < 1e-14);
      for (int q = 0; q < g.q_max(); ++q) CHECK(d.at(q) == doctest::Approx(0.7 * std::exp2(-sigma * q)).epsilon(1e-12));
      CHECK(d.at(g.q_max()) < 1e-13);
      if (sigma > 0.0) CHECK(fit_decay_slope(d, 0, g.q_max()) == doctest::Approx(-sigma).epsilon(1e-9));
    }
  }
  BesovFieldSpec bad;
  bad.divergence_free = true;
  CHECK_THROWS_AS(random_besov(g, bad), ValidationError);
  bad.components = 3;
  CHECK_THROWS_AS(random_besov(g, bad), ValidationError);
}

TEST_CASE("random fields are deterministic in the seed") {
  TorusGrid g(2, 32);
  BesovFieldSpec spec{1.0 / 3.0, 3.0, 0.0, 1.0, 2, true, 5};
  Field a = random_besov(g, spec), b = random_besov(g, spec);
  CHECK(std::equal(a.values().begin(), a.values().end(), b.values().begin()));
  spec.seed = 6;
  Field c = random_besov(g, spec);
  CHECK(max_abs_diff(a, c) > 0.1);
  Field r1 = density_profile(g, 0.3, 1.0, 9), r2 = density_profile(g, 0.3, 1.0, 9);
  CHECK(std::equal(r1.values().begin(), r1.values().end(), r2.values().begin()));
  CHECK(max_abs_diff(r1, density_profile(g, 0.3, 1.0, 10)) > 1e-3);
}

TEST_CASE("density profiles") {
  TorusGrid g(2, 32);
  Field flat = density_profile(g, 0.0, 1.0, 3);
  CHECK(min_value(flat) == 1.0);
  CHECK(max_value(flat) == 1.0);
  for (int kmax : {1, 4, 6}) {
    Field rho = density_profile(g, 0.3, 2.0, 3, kmax);
    double dev = 0.0;
    for (double v : rho.values()) dev = std::max(dev, std::abs(v - 1.0));
    CHECK(dev == doctest::Approx(0.3).epsilon(1e-14));
    CHECK(min_value(rho) >= 0.7 - 1e-14);
    auto spec = rho.spectrum();
    for (std::size_t i = 1; i < g.size(); ++i)
      if (g.wavenumber_norm2(i) > kmax * kmax) CHECK(std::abs(spec[i]) < 1e-15);
    CHECK(mean(rho) == doctest::Approx(1.0).epsilon(1e-14));
  }
  CHECK_THROWS_AS(density_profile(g, 1.0, 1.0, 0), ValidationError);
  CHECK_THROWS_AS(density_profile(g, 0.2, 1.0, 0, 0), ValidationError);
}

TEST_CASE("generate dispatches to the named generators") {
  TorusGrid g(2, 16);
  GeneratorSpec spec{GeneratorKind::random_besov, 3};
  spec.sigma = 0.5;
  Field a = generate(g, spec, 2);
  Field b = random_besov(g, {spec.s, spec.p, spec.sigma, spec.scale, 2, true, 3});
  CHECK(max_abs_diff(a, b) == 0.0);
  GeneratorSpec dp{GeneratorKind::density_profile, 4};
  dp.contrast = 0.2;
  dp.smoothness = 1.5;
  dp.k_max = 3;
  CHECK(max_abs_diff(generate(g, dp, 1), density_profile(g, 0.2, 1.5, 4, 3)) == 0.0);
  CHECK(max_abs_diff(generate(g, GeneratorSpec{GeneratorKind::taylor_green}, 2), taylor_green(g, 0, 0).u) == 0.0);
  GeneratorSpec sm{GeneratorKind::single_mode};
  sm.mode = {0, 2, 0};
  sm.amplitude = 0.25;
  CHECK(max_abs_diff(generate(g, sm, 2), single_mode(g, {0, 2, 0}, 0.25, 2)) == 0.0);
  CHECK(max_abs(generate(g, GeneratorSpec{}, 1)) == 0.0);
}
