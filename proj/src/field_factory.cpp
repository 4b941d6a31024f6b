#include "ddns/field_factory.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "ddns/errors.hpp"

namespace ddns {

namespace {

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

}  // namespace

std::uint64_t SplitMix64::mix(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t SplitMix64::next() {
  state_ += kGolden;
  return mix(state_);
}

std::uint64_t SplitMix64::draw(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter) {
  return mix((seed + kGolden * (counter + 1)) ^ mix(stream + kGolden));
}

std::string generator_name(GeneratorKind kind) {
  switch (kind) {
    case GeneratorKind::constant: return "constant";
    case GeneratorKind::single_mode: return "single_mode";
    case GeneratorKind::taylor_green: return "taylor_green";
    case GeneratorKind::random_besov: return "random_besov";
    case GeneratorKind::density_profile: return "density_profile";
  }
  return "constant";
}

GeneratorKind parse_generator(const std::string& name) {
  for (auto k : {GeneratorKind::constant, GeneratorKind::single_mode, GeneratorKind::taylor_green,
                 GeneratorKind::random_besov, GeneratorKind::density_profile})
    if (generator_name(k) == name) return k;
  throw ValidationError("unknown generator kind '" + name + "'");
}

void GeneratorSpec::validate() const {
  if (!std::isfinite(value) || !std::isfinite(amplitude)) throw ValidationError("generator values must be finite");
  if (!(s > 0.0 && s <= 1.0)) throw ValidationError("generator smoothness s must lie in (0, 1]");
  if (!(p >= 1.0)) throw ValidationError("generator integrability p must be >= 1");
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw ValidationError("shell decay exponent sigma must be >= 0");
  if (!(scale > 0.0) || !std::isfinite(scale)) throw ValidationError("shell scale must be positive");
  if (!(contrast >= 0.0 && contrast < 1.0)) throw ValidationError("density contrast A must lie in [0, 1)");
  if (!std::isfinite(smoothness)) throw ValidationError("density smoothness must be finite");
  if (k_max < 1) throw ValidationError("density band limit k_max must be >= 1");
}

// ---------------------------------------------------------------------------

Field single_mode(const TorusGrid& grid, const Lattice& k, double amplitude, int components, double offset) {
  const int d = grid.dim();
  if (components != 1 && components != d) throw ValidationError("single mode must be a scalar or a d-vector");
  double k2 = 0.0;
  for (int a = 0; a < d; ++a) k2 += static_cast<double>(k[a]) * k[a];

  std::array<double, 3> dir{1.0, 0.0, 0.0};
  if (components == d && d >= 2) {
    if (k2 == 0.0) throw ValidationError("a vector single mode needs a nonzero wavevector");
    if (d == 2) {
      dir = {-static_cast<double>(k[1]), static_cast<double>(k[0]), 0.0};
    } else {
      int axis = 0;
      for (int a = 1; a < 3; ++a)
        if (std::abs(k[a]) < std::abs(k[axis])) axis = a;
      std::array<double, 3> e{0.0, 0.0, 0.0};
      e[axis] = 1.0;
      dir = {k[1] * e[2] - k[2] * e[1], k[2] * e[0] - k[0] * e[2], k[0] * e[1] - k[1] * e[0]};
    }
    const double len = std::sqrt(dir[0] * dir[0] + dir[1] * dir[1] + dir[2] * dir[2]);
    for (auto& v : dir) v /= len;
  }

  const std::size_t n = grid.size();
  std::vector<double> v(n * components);
  for (std::size_t i = 0; i < n; ++i) {
    const auto c = grid.coords(i);
    // Integer phase arithmetic keeps the argument exact modulo N.
    long long kx = 0;
    for (int a = 0; a < d; ++a) kx += static_cast<long long>(k[a]) * c[a];
    const long long m = ((kx % grid.n()) + grid.n()) % grid.n();
    const double wave = std::cos(kTwoPi * static_cast<double>(m) / grid.n());
    if (components == 1)
      v[i] = offset + amplitude * wave;
    else
      for (int a = 0; a < d; ++a) v[a * n + i] = amplitude * dir[a] * wave;
  }
  return Field(grid, components, std::move(v));
}

SolutionState taylor_green(const TorusGrid& grid, double mu, double t) {
  if (grid.dim() != 2) throw ValidationError("the Taylor-Green vortex is two-dimensional");
  if (!(mu >= 0.0)) throw ValidationError("viscosity must be non-negative");
  const double pi = std::numbers::pi;
  const double decay = std::exp(-8.0 * pi * pi * mu * t);
  const std::size_t n = grid.size();
  std::vector<double> u(2 * n), p(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto x = grid.position(i);
    const double sx = std::sin(kTwoPi * x[0]), cx = std::cos(kTwoPi * x[0]);
    const double sy = std::sin(kTwoPi * x[1]), cy = std::cos(kTwoPi * x[1]);
    u[i] = decay * sx * cy;
    u[n + i] = -decay * cx * sy;
    p[i] = 0.25 * decay * decay * (std::cos(2.0 * kTwoPi * x[0]) + std::cos(2.0 * kTwoPi * x[1]));
  }
  return SolutionState::make(constant_field(grid, 1, 1.0), Field(grid, 2, std::move(u)), Field(grid, 1, std::move(p)),
                             std::nullopt, t, mu);
}

namespace {

/// Index of -k.
std::size_t mirror_index(const TorusGrid& grid, std::size_t i) {
  auto c = grid.coords(i);
  for (int a = 0; a < grid.dim(); ++a) c[a] = -c[a];
  return grid.flat_index(c);
}

/// e^{i theta} with theta drawn once per {k, -k} pair; conjugated on the
/// non-canonical member.
cplx pair_phase(const TorusGrid& grid, std::size_t i, std::uint64_t seed, std::uint64_t stream) {
  const std::size_t j = mirror_index(grid, i);
  const std::size_t canonical = std::min(i, j);
  const double theta = kTwoPi * SplitMix64::to_unit(SplitMix64::draw(seed, stream, canonical));
  const cplx z = std::polar(1.0, theta);
  return i == canonical ? z : std::conj(z);
}

}  // namespace

Field random_besov(const TorusGrid& grid, const BesovFieldSpec& spec) {
  if (!(spec.sigma >= 0.0)) throw ValidationError("shell decay exponent sigma must be >= 0");
  if (!(spec.s > 0.0) || !(spec.p >= 1.0) || !(spec.scale > 0.0))
    throw ValidationError("random Besov field needs s > 0, p >= 1 and a positive scale");
  const int d = grid.dim();
  const int comps = spec.components;
  if (comps != 1 && comps != d) throw ValidationError("random Besov field must be a scalar or a d-vector");
  if (spec.divergence_free && (comps != d || d < 2))
    throw ValidationError("divergence-free output needs a vector field in d >= 2");

  const std::size_t n = grid.size();
  const double limit2 = 0.25 * grid.n() * grid.n();
  std::vector<cplx> spec_all(n * comps, cplx(0.0));
  for (std::size_t i = 0; i < n; ++i) {
    const double k2 = grid.wavenumber_norm2(i);
    if (k2 == 0.0 || k2 >= limit2 || grid.is_nyquist(i)) continue;
    for (int c = 0; c < comps; ++c) spec_all[c * n + i] = pair_phase(grid, i, spec.seed, static_cast<std::uint64_t>(c));
  }
  Field raw = Field::from_spectrum(grid, comps, spec_all);
  if (spec.divergence_free) raw = leray_project(raw);

  const auto sharp = CutoffProfile::sharp();
  const auto base = raw.spectrum();
  std::vector<cplx> out(base.size(), cplx(0.0));
  for (int q = 0; q <= grid.q_max() - 1; ++q) {
    std::vector<cplx> shell(base.size(), cplx(0.0));
    bool any = false;
    for (std::size_t i = 0; i < n; ++i) {
      if (sharp.shell_multiplier(q, grid.wavenumber_norm2(i)) == 0.0) continue;
      for (int c = 0; c < comps; ++c) {
        shell[c * n + i] = base[c * n + i];
        any = any || base[c * n + i] != cplx(0.0);
      }
    }
    if (!any) continue;
    const double measured = lambda_pow(q, spec.s) * lp_norm(Field::from_spectrum(grid, comps, shell), spec.p);
    if (!(measured > 0.0)) continue;
    const double factor = spec.scale * lambda_pow(q, -spec.sigma) / measured;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += factor * shell[i];
  }
  return Field::from_spectrum(grid, comps, out);
}

Field density_profile(const TorusGrid& grid, double contrast, double smoothness, std::uint64_t seed, int k_max) {
  if (!(contrast >= 0.0 && contrast < 1.0)) throw ValidationError("density contrast A must lie in [0, 1)");
  if (k_max < 1) throw ValidationError("density band limit k_max must be >= 1");
  if (contrast == 0.0) return constant_field(grid, 1, 1.0);

  const std::size_t n = grid.size();
  const double kmax2 = static_cast<double>(k_max) * k_max;
  std::vector<cplx> spec(n, cplx(0.0));
  for (std::size_t i = 0; i < n; ++i) {
    const double k2 = grid.wavenumber_norm2(i);
    if (k2 == 0.0 || k2 > kmax2 || grid.is_nyquist(i)) continue;
    spec[i] = std::pow(k2, -0.5 * smoothness) * pair_phase(grid, i, seed, 0);
  }
  const Field g = Field::from_spectrum(grid, 1, spec);
  double peak = 0.0;
  for (double v : g.values()) peak = std::max(peak, std::abs(v));
  std::vector<double> rho(n);
  for (std::size_t i = 0; i < n; ++i) rho[i] = 1.0 + contrast * (g.values()[i] / peak);
  return Field(grid, 1, std::move(rho));
}

Field generate(const TorusGrid& grid, const GeneratorSpec& spec, int components) {
  spec.validate();
  switch (spec.kind) {
    case GeneratorKind::constant:
      return constant_field(grid, components, spec.value);
    case GeneratorKind::single_mode:
      return single_mode(grid, spec.mode, spec.amplitude, components, components == 1 ? spec.value : 0.0);
    case GeneratorKind::taylor_green:
      if (components != grid.dim()) throw ValidationError("taylor_green generates a velocity field");
      return taylor_green(grid, 0.0, 0.0).u;
    case GeneratorKind::random_besov:
      return random_besov(grid, BesovFieldSpec{spec.s, spec.p, spec.sigma, spec.scale, components,
                                               components > 1 && spec.divergence_free, spec.seed});
    case GeneratorKind::density_profile:
      if (components != 1) throw ValidationError("density_profile generates a scalar field");
      return density_profile(grid, spec.contrast, spec.smoothness, spec.seed, spec.k_max);
  }
  throw ValidationError("unknown generator kind");
}

}  // namespace ddns
