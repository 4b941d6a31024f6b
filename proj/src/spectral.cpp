#include "ddns/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <numbers>
#include <string>

#include "ddns/errors.hpp"
#include "ddns/reduce.hpp"
#include "fft.hpp"

namespace ddns {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

int signed_index(int i, int n) { return i <= n / 2 ? i : i - n; }

}  // namespace

// ---------------------------------------------------------------------------
// TorusGrid

TorusGrid::TorusGrid(int dim, int n) : dim_(dim), n_(n) {
  if (dim < 1 || dim > 3) throw ValidationError("grid dimension must be 1, 2 or 3, got " + std::to_string(dim));
  if (n < 8 || !is_power_of_two(n))
    throw ValidationError("points per axis must be a power of two >= 8, got " + std::to_string(n));
  size_ = 1;
  for (int i = 0; i < dim; ++i) size_ *= static_cast<std::size_t>(n);
  cell_volume_ = 1.0 / static_cast<double>(size_);
  q_max_ = static_cast<int>(std::lround(std::log2(n / 2))) + 1;
  knorm2_.resize(size_);
  for (std::size_t i = 0; i < size_; ++i) {
    const auto k = wavenumber(i);
    double s = 0.0;
    for (int a = 0; a < dim_; ++a) s += static_cast<double>(k[a]) * k[a];
    knorm2_[i] = s;
  }
}

Lattice TorusGrid::coords(std::size_t flat) const {
  Lattice c{0, 0, 0};
  for (int a = dim_ - 1; a >= 0; --a) {
    c[a] = static_cast<int>(flat % n_);
    flat /= n_;
  }
  return c;
}

std::size_t TorusGrid::flat_index(const Lattice& c) const {
  std::size_t flat = 0;
  for (int a = 0; a < dim_; ++a) {
    const int w = ((c[a] % n_) + n_) % n_;
    flat = flat * n_ + static_cast<std::size_t>(w);
  }
  return flat;
}

Lattice TorusGrid::wavenumber(std::size_t flat) const {
  auto c = coords(flat);
  for (int a = 0; a < dim_; ++a) c[a] = signed_index(c[a], n_);
  return c;
}

bool TorusGrid::is_nyquist(std::size_t flat) const {
  const auto c = coords(flat);
  for (int a = 0; a < dim_; ++a)
    if (c[a] == n_ / 2) return true;
  return false;
}

std::array<double, 3> TorusGrid::position(std::size_t flat) const {
  const auto c = coords(flat);
  std::array<double, 3> x{0.0, 0.0, 0.0};
  for (int a = 0; a < dim_; ++a) x[a] = static_cast<double>(c[a]) / n_;
  return x;
}

// ---------------------------------------------------------------------------
// Field

struct Field::SpectrumCache {
  std::once_flag once;
  std::vector<cplx> data;
};

Field::Field(TorusGrid grid, int components)
    : grid_(std::move(grid)),
      components_(components),
      values_(grid_.size() * static_cast<std::size_t>(components), 0.0),
      cache_(std::make_shared<SpectrumCache>()) {
  if (components < 1) throw ValidationError("field needs at least one component");
}

Field::Field(TorusGrid grid, int components, std::vector<double> values)
    : grid_(std::move(grid)),
      components_(components),
      values_(std::move(values)),
      cache_(std::make_shared<SpectrumCache>()) {
  if (components < 1) throw ValidationError("field needs at least one component");
  if (values_.size() != grid_.size() * static_cast<std::size_t>(components))
    throw ValidationError("field value count does not match grid and component count");
  for (double v : values_)
    if (!std::isfinite(v)) throw ValidationError("field values must be finite");
}

Field Field::from_spectrum(TorusGrid grid, int components, std::span<const cplx> spectrum) {
  const std::size_t n = grid.size();
  if (spectrum.size() != n * static_cast<std::size_t>(components))
    throw ValidationError("spectrum size does not match grid and component count");
  std::vector<double> values(spectrum.size());
  std::vector<cplx> buffer(n);
  double max_re = 0.0;
  double max_im = 0.0;
  for (int c = 0; c < components; ++c) {
    detail::inverse_fft(grid, spectrum.subspan(c * n, n), buffer);
    for (std::size_t i = 0; i < n; ++i) {
      values[c * n + i] = buffer[i].real();
      max_re = std::max(max_re, std::abs(buffer[i].real()));
      max_im = std::max(max_im, std::abs(buffer[i].imag()));
    }
  }
  Field f(std::move(grid), components, std::move(values));
  f.reality_defect_ = max_re > 0.0 ? max_im / max_re : max_im;
  return f;
}

std::span<const double> Field::component(int c) const {
  return std::span<const double>(values_).subspan(static_cast<std::size_t>(c) * points(), points());
}

std::span<double> Field::mutable_component(int c) {
  cache_ = std::make_shared<SpectrumCache>();
  return std::span<double>(values_).subspan(static_cast<std::size_t>(c) * points(), points());
}

std::span<double> Field::mutable_values() {
  cache_ = std::make_shared<SpectrumCache>();
  return values_;
}

std::span<const cplx> Field::spectrum() const {
  auto* cache = cache_.get();
  std::call_once(cache->once, [&] {
    const std::size_t n = points();
    cache->data.resize(values_.size());
    for (int c = 0; c < components_; ++c)
      detail::forward_fft(grid_, component(c), std::span<cplx>(cache->data).subspan(c * n, n));
  });
  return cache->data;
}

std::span<const cplx> Field::spectrum(int c) const {
  return spectrum().subspan(static_cast<std::size_t>(c) * points(), points());
}

Field Field::component_field(int c) const {
  auto v = component(c);
  return Field(grid_, 1, std::vector<double>(v.begin(), v.end()));
}

void require_same_grid(const Field& a, const Field& b) {
  if (!(a.grid() == b.grid())) throw ValidationError("fields live on different grids");
}

// ---------------------------------------------------------------------------
// Cutoffs

double smooth_step(double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double g = std::exp(-1.0 / x);
  const double h = std::exp(-1.0 / (1.0 - x));
  return g / (g + h);
}

double lambda_pow(int q, double exponent) { return std::exp2(static_cast<double>(q) * exponent); }

CutoffProfile::CutoffProfile(CutoffKind kind, double r0, double r1)
    : kind_(kind), flat_radius_(r0), support_radius_(r1) {}

CutoffProfile CutoffProfile::sharp() { return CutoffProfile(CutoffKind::sharp, 0.5, 0.5); }

CutoffProfile CutoffProfile::smooth(double flat_radius, double support_radius) {
  if (!(flat_radius >= 0.5))
    throw ValidationError("cutoff must equal 1 on |xi| <= 1/2 (flat radius " + std::to_string(flat_radius) + ")");
  if (!(support_radius <= 1.0))
    throw ValidationError("cutoff support must lie in the unit ball (support radius " +
                          std::to_string(support_radius) + ")");
  if (!(flat_radius < support_radius)) throw ValidationError("cutoff flat radius must be below its support radius");
  return CutoffProfile(CutoffKind::smooth, flat_radius, support_radius);
}

double CutoffProfile::chi(double radius) const {
  if (kind_ == CutoffKind::sharp) return radius <= 0.5 ? 1.0 : 0.0;
  return smooth_step((support_radius_ - radius) / (support_radius_ - flat_radius_));
}

double CutoffProfile::chi_scaled(double knorm2, double scale) const {
  if (kind_ == CutoffKind::sharp) return 4.0 * knorm2 <= scale * scale ? 1.0 : 0.0;
  return chi(std::sqrt(knorm2) / scale);
}

double CutoffProfile::shell_multiplier(int q, double knorm2) const {
  if (q == -1) return chi_scaled(knorm2, 1.0);
  return chi_scaled(knorm2, lambda(q + 1)) - chi_scaled(knorm2, lambda(q));
}

double CutoffProfile::low_multiplier(int Q, double knorm2) const { return chi_scaled(knorm2, lambda(Q + 1)); }

// ---------------------------------------------------------------------------
// Projections

Field project_shell(const Field& f, int q, const CutoffProfile& cutoff) {
  if (q < -1 || q > f.grid().q_max())
    throw ValidationError("shell index " + std::to_string(q) + " outside [-1, " +
                          std::to_string(f.grid().q_max()) + "]");
  return apply_radial(f, [&](double k2) { return cutoff.shell_multiplier(q, k2); });
}

Field project_low(const Field& f, int Q, const CutoffProfile& cutoff) {
  if (Q < -1) throw ValidationError("cutoff index must be >= -1, got " + std::to_string(Q));
  return apply_radial(f, [&](double k2) { return cutoff.low_multiplier(Q, k2); });
}

Field project_high(const Field& f, int Q, const CutoffProfile& cutoff) {
  if (Q < -1) throw ValidationError("cutoff index must be >= -1, got " + std::to_string(Q));
  return apply_radial(f, [&](double k2) { return 1.0 - cutoff.low_multiplier(Q, k2); });
}

Field project_near(const Field& f, int Q, const CutoffProfile& cutoff) {
  if (Q < -1) throw ValidationError("cutoff index must be >= -1, got " + std::to_string(Q));
  const int lo = std::max(-1, Q - 2);
  const int hi = std::min(f.grid().q_max(), Q + 2);
  return apply_radial(f, [&](double k2) {
    double m = 0.0;
    for (int q = lo; q <= hi; ++q) m += cutoff.shell_multiplier(q, k2);
    return m;
  });
}

ShellDecomposition decompose(const Field& f, const CutoffProfile& cutoff) {
  ShellDecomposition d;
  for (int q = -1; q <= f.grid().q_max(); ++q) d.shells.push_back(project_shell(f, q, cutoff));
  return d;
}

Field ShellDecomposition::reconstruct() const {
  Field out = shells.front();
  for (std::size_t i = 1; i < shells.size(); ++i) out = out + shells[i];
  return out;
}

// ---------------------------------------------------------------------------
// Differential operators

namespace {

/// Wavenumber used by odd-order derivatives: Nyquist components are zeroed.
std::array<double, 3> derivative_wavenumber(const TorusGrid& g, std::size_t flat) {
  const auto k = g.wavenumber(flat);
  std::array<double, 3> kd{0.0, 0.0, 0.0};
  for (int a = 0; a < g.dim(); ++a) kd[a] = (k[a] == g.n() / 2) ? 0.0 : static_cast<double>(k[a]);
  return kd;
}

}  // namespace

Field gradient(const Field& f) {
  const auto& g = f.grid();
  const int d = g.dim();
  const std::size_t n = g.size();
  if (f.components() != 1 && f.components() != d)
    throw ValidationError("gradient expects a scalar or vector field");
  const int out_comps = f.components() * d;
  std::vector<cplx> out(n * out_comps);
  auto spec = f.spectrum();
  for (std::size_t i = 0; i < n; ++i) {
    const auto kd = derivative_wavenumber(g, i);
    for (int c = 0; c < f.components(); ++c)
      for (int j = 0; j < d; ++j) out[(c * d + j) * n + i] = spec[c * n + i] * cplx(0.0, kTwoPi * kd[j]);
  }
  return Field::from_spectrum(g, out_comps, out);
}

Field divergence(const Field& v) {
  const auto& g = v.grid();
  const int d = g.dim();
  const std::size_t n = g.size();
  int out_comps = 0;
  if (v.components() == d)
    out_comps = 1;
  else if (v.components() == d * d)
    out_comps = d;
  else
    throw ValidationError("divergence expects a vector or tensor field");
  std::vector<cplx> out(n * out_comps);
  auto spec = v.spectrum();
  for (std::size_t i = 0; i < n; ++i) {
    const auto kd = derivative_wavenumber(g, i);
    for (int r = 0; r < out_comps; ++r) {
      cplx acc = 0.0;
      for (int j = 0; j < d; ++j) acc += spec[(r * d + j) * n + i] * cplx(0.0, kTwoPi * kd[j]);
      out[r * n + i] = acc;
    }
  }
  return Field::from_spectrum(g, out_comps, out);
}

Field laplacian(const Field& f) {
  return apply_radial(f, [](double k2) { return -kTwoPi * kTwoPi * k2; });
}

Field inverse_laplacian(const Field& f) {
  return apply_radial(f, [](double k2) { return k2 == 0.0 ? 0.0 : -1.0 / (kTwoPi * kTwoPi * k2); });
}

Field inverse_div_grad(const Field& f) {
  const auto& g = f.grid();
  const std::size_t n = g.size();
  auto spec = f.spectrum();
  std::vector<cplx> out(spec.size());
  for (std::size_t i = 0; i < n; ++i) {
    const auto kd = derivative_wavenumber(g, i);
    double k2 = 0.0;
    for (int a = 0; a < g.dim(); ++a) k2 += kd[a] * kd[a];
    if (k2 == 0.0) continue;
    const double m = -1.0 / (kTwoPi * kTwoPi * k2);
    for (int c = 0; c < f.components(); ++c) out[c * n + i] = spec[c * n + i] * m;
  }
  return Field::from_spectrum(g, f.components(), out);
}

Field leray_project(const Field& v) {
  const auto& g = v.grid();
  const int d = g.dim();
  const std::size_t n = g.size();
  if (v.components() != d) throw ValidationError("Leray projection expects a vector field");
  auto spec = v.spectrum();
  std::vector<cplx> out(spec.begin(), spec.end());
  for (std::size_t i = 0; i < n; ++i) {
    const auto kd = derivative_wavenumber(g, i);
    double k2 = 0.0;
    cplx kv = 0.0;
    for (int j = 0; j < d; ++j) {
      k2 += kd[j] * kd[j];
      kv += kd[j] * spec[j * n + i];
    }
    if (k2 == 0.0) continue;
    for (int j = 0; j < d; ++j) out[j * n + i] -= kd[j] * kv / k2;
  }
  return Field::from_spectrum(g, d, out);
}

Field dealias(const Field& f) {
  const auto& g = f.grid();
  const int kmax = g.n() / 3;
  const std::size_t n = g.size();
  auto spec = f.spectrum();
  std::vector<cplx> out(spec.begin(), spec.end());
  for (std::size_t i = 0; i < n; ++i) {
    const auto k = g.wavenumber(i);
    bool keep = true;
    for (int a = 0; a < g.dim(); ++a) keep = keep && std::abs(k[a]) <= kmax;
    if (keep) continue;
    for (int c = 0; c < f.components(); ++c) out[c * n + i] = 0.0;
  }
  return Field::from_spectrum(g, f.components(), out);
}

double divergence_defect(const Field& v) {
  const auto& g = v.grid();
  const int d = g.dim();
  const std::size_t n = g.size();
  if (v.components() != d) throw ValidationError("divergence defect expects a vector field");
  auto spec = v.spectrum();
  double max_kv = 0.0;
  std::vector<double> mags(spec.size());
  for (std::size_t i = 0; i < spec.size(); ++i) mags[i] = std::norm(spec[i]);
  for (std::size_t i = 0; i < n; ++i) {
    const auto kd = derivative_wavenumber(g, i);
    cplx kv = 0.0;
    for (int j = 0; j < d; ++j) kv += kd[j] * spec[j * n + i];
    max_kv = std::max(max_kv, std::abs(kv));
  }
  const double total = std::sqrt(sum(mags));
  return total > 0.0 ? max_kv / total : 0.0;
}

// ---------------------------------------------------------------------------
// Pointwise algebra

namespace {

void require_same_shape(const Field& a, const Field& b) {
  require_same_grid(a, b);
  if (a.components() != b.components()) throw ValidationError("fields have different component counts");
}

void require_scalar(const Field& s) {
  if (s.components() != 1) throw ValidationError("expected a scalar field");
}

}  // namespace

Field operator+(const Field& a, const Field& b) {
  require_same_shape(a, b);
  std::vector<double> v(a.values().size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = a.values()[i] + b.values()[i];
  return Field(a.grid(), a.components(), std::move(v));
}

Field operator-(const Field& a, const Field& b) {
  require_same_shape(a, b);
  std::vector<double> v(a.values().size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = a.values()[i] - b.values()[i];
  return Field(a.grid(), a.components(), std::move(v));
}

Field operator*(double alpha, const Field& a) {
  std::vector<double> v(a.values().begin(), a.values().end());
  for (auto& x : v) x *= alpha;
  return Field(a.grid(), a.components(), std::move(v));
}

Field multiply(const Field& scalar, const Field& f) {
  require_same_grid(scalar, f);
  require_scalar(scalar);
  const std::size_t n = f.points();
  std::vector<double> v(f.values().size());
  for (int c = 0; c < f.components(); ++c)
    for (std::size_t i = 0; i < n; ++i) v[c * n + i] = scalar.values()[i] * f.values()[c * n + i];
  return Field(f.grid(), f.components(), std::move(v));
}

Field divide(const Field& f, const Field& scalar) {
  require_same_grid(scalar, f);
  require_scalar(scalar);
  const std::size_t n = f.points();
  std::vector<double> v(f.values().size());
  for (int c = 0; c < f.components(); ++c)
    for (std::size_t i = 0; i < n; ++i) v[c * n + i] = f.values()[c * n + i] / scalar.values()[i];
  return Field(f.grid(), f.components(), std::move(v));
}

Field outer(const Field& a, const Field& b) {
  require_same_grid(a, b);
  const int da = a.components();
  const int db = b.components();
  const std::size_t n = a.points();
  std::vector<double> v(n * da * db);
  for (int i = 0; i < da; ++i)
    for (int j = 0; j < db; ++j)
      for (std::size_t x = 0; x < n; ++x) v[(i * db + j) * n + x] = a.values()[i * n + x] * b.values()[j * n + x];
  return Field(a.grid(), da * db, std::move(v));
}

Field contract(const Field& a, const Field& b) {
  require_same_shape(a, b);
  const std::size_t n = a.points();
  std::vector<double> v(n, 0.0);
  for (int c = 0; c < a.components(); ++c)
    for (std::size_t x = 0; x < n; ++x) v[x] += a.values()[c * n + x] * b.values()[c * n + x];
  return Field(a.grid(), 1, std::move(v));
}

Field symmetric_part(const Field& t) {
  const int d = t.grid().dim();
  if (t.components() != d * d) throw ValidationError("symmetric part expects a d*d tensor field");
  const std::size_t n = t.points();
  std::vector<double> v(t.values().size());
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      for (std::size_t x = 0; x < n; ++x)
        v[(i * d + j) * n + x] = 0.5 * (t.values()[(i * d + j) * n + x] + t.values()[(j * d + i) * n + x]);
  return Field(t.grid(), d * d, std::move(v));
}

Field constant_field(const TorusGrid& grid, int components, double value) {
  return Field(grid, components, std::vector<double>(grid.size() * components, value));
}

// ---------------------------------------------------------------------------
// Quadrature

double lp_norm(const Field& f, double p) {
  if (!(p >= 1.0)) throw ValidationError("L^p exponent must lie in [1, inf]");
  const std::size_t n = f.points();
  std::vector<double> mag2(n, 0.0);
  for (int c = 0; c < f.components(); ++c)
    for (std::size_t x = 0; x < n; ++x) mag2[x] += f.values()[c * n + x] * f.values()[c * n + x];
  if (std::isinf(p)) return std::sqrt(*std::max_element(mag2.begin(), mag2.end()));
  if (p == 2.0) return std::sqrt(integrate(mag2, f.grid().cell_volume()));
  for (auto& m : mag2) m = std::pow(m, 0.5 * p);
  return std::pow(integrate(mag2, f.grid().cell_volume()), 1.0 / p);
}

double inner(const Field& a, const Field& b) {
  require_same_shape(a, b);
  std::vector<double> prod(a.values().size());
  for (std::size_t i = 0; i < prod.size(); ++i) prod[i] = a.values()[i] * b.values()[i];
  return integrate(prod, a.grid().cell_volume());
}

double mean(const Field& f, int c) { return integrate(f.component(c), f.grid().cell_volume()); }

double min_value(const Field& f, int c) {
  auto v = f.component(c);
  return *std::min_element(v.begin(), v.end());
}

double max_value(const Field& f, int c) {
  auto v = f.component(c);
  return *std::max_element(v.begin(), v.end());
}

}  // namespace ddns
