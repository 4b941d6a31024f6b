#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "ddns/energy_budget.hpp"
#include "ddns/field_factory.hpp"
#include "ddns/spectral.hpp"

namespace testing_util {

/// White noise in [-1, 1), independent of the library generators.
inline ddns::Field noise(const ddns::TorusGrid& g, int components, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> v(g.size() * components);
  for (auto& x : v) x = u(rng);
  return ddns::Field(g, components, std::move(v));
}

inline double max_abs_diff(const ddns::Field& a, const ddns::Field& b) {
  double m = 0.0;
  auto x = a.values(), y = b.values();
  for (std::size_t i = 0; i < x.size(); ++i) m = std::max(m, std::abs(x[i] - y[i]));
  return m;
}

inline double max_abs(const ddns::Field& a) {
  double m = 0.0;
  for (double x : a.values()) m = std::max(m, std::abs(x));
  return m;
}

/// Variable-density state: rho = 1 + contrast g with smooth band-limited g,
/// u a divergence-free random-phase field with shell decay lambda_q^-sigma.
inline ddns::SolutionState random_state(const ddns::TorusGrid& g, std::uint64_t seed, double contrast = 0.3,
                                        double sigma = 1.0 / 3.0) {
  ddns::Field rho = ddns::density_profile(g, contrast, 2.0, seed, 4);
  ddns::BesovFieldSpec spec;
  spec.sigma = sigma;
  spec.components = g.dim();
  spec.divergence_free = true;
  spec.seed = seed + 1000;
  return ddns::SolutionState::make(rho, ddns::random_besov(g, spec));
}

}  // namespace testing_util
