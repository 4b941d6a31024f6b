#pragma once

// Fourier analysis on the unit torus [0,1)^d: grids, fields with cached
// spectra, dyadic Littlewood-Paley cutoffs, projections and spectral
// differential operators.

#include <array>
#include <complex>
#include <cstddef>
#include <memory>
#include <span>
#include <vector>

namespace ddns {

using cplx = std::complex<double>;
using Lattice = std::array<int, 3>;

/// Uniform periodic grid on [0,1)^d with N points per axis.
class TorusGrid {
 public:
  TorusGrid(int dim, int n);

  int dim() const { return dim_; }
  int n() const { return n_; }
  std::size_t size() const { return size_; }
  double spacing() const { return 1.0 / n_; }
  double cell_volume() const { return cell_volume_; }

  /// Largest shell index carrying lattice modes: log2(N/2) + 1.
  int q_max() const { return q_max_; }

  /// Signed wavenumber of a flat index; axis index N/2 maps to +N/2.
  Lattice wavenumber(std::size_t flat) const;
  /// |k|^2 of a flat index (an exact integer stored in a double).
  double wavenumber_norm2(std::size_t flat) const { return knorm2_[flat]; }
  /// True when some component sits on the Nyquist plane |k_i| = N/2.
  bool is_nyquist(std::size_t flat) const;

  /// Grid coordinates (i_1, .., i_d) of a flat row-major index.
  Lattice coords(std::size_t flat) const;
  /// Flat index of coordinates, wrapped periodically.
  std::size_t flat_index(const Lattice& c) const;
  /// Physical position x_i = i_i / N.
  std::array<double, 3> position(std::size_t flat) const;

  friend bool operator==(const TorusGrid& a, const TorusGrid& b) {
    return a.dim_ == b.dim_ && a.n_ == b.n_;
  }

 private:
  int dim_;
  int n_;
  std::size_t size_;
  double cell_volume_;
  int q_max_;
  std::vector<double> knorm2_;
};

/// Samples of a scalar, vector (d components) or tensor (d*d components,
/// component (i,j) at i*d+j) field. Component-major storage. Fourier
/// coefficients f^(k) = N^-d sum_x f(x) e^{-2 pi i k.x} are computed lazily
/// and cached; the cache is shared between copies and is thread-safe.
class Field {
 public:
  Field(TorusGrid grid, int components);
  Field(TorusGrid grid, int components, std::vector<double> values);

  /// Inverse transform of per-component spectra (concatenated). The real part
  /// is kept; the largest discarded imaginary part is recorded.
  static Field from_spectrum(TorusGrid grid, int components, std::span<const cplx> spectrum);

  const TorusGrid& grid() const { return grid_; }
  int components() const { return components_; }
  std::size_t points() const { return grid_.size(); }

  std::span<const double> values() const { return values_; }
  std::span<const double> component(int c) const;
  /// Mutable access; drops the cached spectrum.
  std::span<double> mutable_component(int c);
  std::span<double> mutable_values();

  double at(int c, std::size_t flat) const { return values_[c * points() + flat]; }

  /// All component spectra, concatenated in component order.
  std::span<const cplx> spectrum() const;
  std::span<const cplx> spectrum(int c) const;

  /// Largest |Im| discarded in from_spectrum, relative to the largest |Re|.
  double reality_defect() const { return reality_defect_; }

  Field component_field(int c) const;

 private:
  struct SpectrumCache;

  TorusGrid grid_;
  int components_;
  std::vector<double> values_;
  double reality_defect_ = 0.0;
  mutable std::shared_ptr<SpectrumCache> cache_;
};

/// Grid-compatibility guard; throws ValidationError.
void require_same_grid(const Field& a, const Field& b);

// ---------------------------------------------------------------------------
// Littlewood-Paley cutoffs

enum class CutoffKind { smooth, sharp };

/// lambda_q = 2^q, with lambda_{-1} = 1/2.
inline double lambda(int q) { return q == -1 ? 0.5 : static_cast<double>(1ULL << q); }
double lambda_pow(int q, double exponent);

/// Radial cutoff chi with chi = 1 on |xi| <= 1/2 and support in the unit ball.
///
/// smooth: chi(xi) = S((R - |xi|)/(R - r0)) with S(x) = g(x)/(g(x)+g(1-x)),
/// g(x) = exp(-1/x) for x > 0; defaults r0 = 1/2, R = 1.
/// sharp: chi = 1 for |xi| <= 1/2, 0 otherwise, so shell q holds
/// lambda_{q-1} < |k| <= lambda_q.
class CutoffProfile {
 public:
  static CutoffProfile sharp();
  /// Throws ValidationError unless 1/2 <= flat_radius < support_radius <= 1.
  static CutoffProfile smooth(double flat_radius = 0.5, double support_radius = 1.0);
  static CutoffProfile make(CutoffKind kind) {
    return kind == CutoffKind::sharp ? sharp() : smooth();
  }

  CutoffKind kind() const { return kind_; }
  double flat_radius() const { return flat_radius_; }
  double support_radius() const { return support_radius_; }

  double chi(double radius) const;
  double phi(double radius) const { return chi(0.5 * radius) - chi(radius); }

  /// phi_q(k) from |k|^2; phi_{-1} = chi.
  double shell_multiplier(int q, double knorm2) const;
  /// chi(k / lambda_{Q+1}), the multiplier of f_{<=Q}.
  double low_multiplier(int Q, double knorm2) const;

 private:
  CutoffProfile(CutoffKind kind, double r0, double r1);
  /// chi(|k| / scale) evaluated without rounding for the sharp profile.
  double chi_scaled(double knorm2, double scale) const;

  CutoffKind kind_;
  double flat_radius_;
  double support_radius_;
};

/// Smooth step S(x): 0 for x <= 0, 1 for x >= 1, C-infinity in between.
double smooth_step(double x);

// ---------------------------------------------------------------------------
// Projections

/// f_q = F^-1(phi_q F f), -1 <= q <= q_max.
Field project_shell(const Field& f, int q, const CutoffProfile& cutoff);
/// f_{<=Q} = F^-1(chi(k/lambda_{Q+1}) F f), Q >= -1.
Field project_low(const Field& f, int Q, const CutoffProfile& cutoff);
/// f_{>Q} = f - f_{<=Q}, formed in spectral space.
Field project_high(const Field& f, int Q, const CutoffProfile& cutoff);
/// f_{~Q}: shells Q-2..Q+2 clipped to [-1, q_max].
Field project_near(const Field& f, int Q, const CutoffProfile& cutoff);

/// The family {f_q}, q = -1..q_max.
struct ShellDecomposition {
  std::vector<Field> shells;

  const Field& shell(int q) const { return shells.at(static_cast<std::size_t>(q + 1)); }
  int q_max() const { return static_cast<int>(shells.size()) - 2; }
  Field reconstruct() const;
};

ShellDecomposition decompose(const Field& f, const CutoffProfile& cutoff);

/// Applies a real radial multiplier m(|k|^2) to every component.
template <class Multiplier>
Field apply_radial(const Field& f, Multiplier&& m) {
  const auto& g = f.grid();
  auto spec = f.spectrum();
  std::vector<cplx> out(spec.size());
  const std::size_t n = g.size();
  for (int c = 0; c < f.components(); ++c)
    for (std::size_t i = 0; i < n; ++i) out[c * n + i] = spec[c * n + i] * m(g.wavenumber_norm2(i));
  return Field::from_spectrum(g, f.components(), out);
}

// ---------------------------------------------------------------------------
// Differential operators (spectral, ik multiplier; odd derivatives vanish on
// the Nyquist planes so outputs stay real)

/// Scalar -> vector; vector -> tensor with component (i,j) = d_j f_i.
Field gradient(const Field& f);
/// Vector -> scalar; tensor -> vector with component i = sum_j d_j T_ij.
Field divergence(const Field& v);
Field laplacian(const Field& f);
/// Solves Laplacian(p) = f for zero-mean p (the mean mode of f is dropped).
Field inverse_laplacian(const Field& f);
/// Inverse of divergence(gradient(.)) on zero-mean fields. Differs from
/// inverse_laplacian only on the Nyquist planes, where the first derivatives
/// vanish; modes with no surviving derivative map to 0.
Field inverse_div_grad(const Field& f);
/// Leray projection onto divergence-free vector fields.
Field leray_project(const Field& v);
/// 2/3-rule truncation: zero every mode with some |k_i| > N/3.
Field dealias(const Field& f);

/// max_k |k . v^(k)| / ||v^||_2 for a vector field (0 for v = 0).
double divergence_defect(const Field& v);

// ---------------------------------------------------------------------------
// Pointwise algebra and quadrature

Field operator+(const Field& a, const Field& b);
Field operator-(const Field& a, const Field& b);
Field operator*(double alpha, const Field& a);

/// Scalar field times any field.
Field multiply(const Field& scalar, const Field& f);
/// Any field divided pointwise by a scalar field.
Field divide(const Field& f, const Field& scalar);
/// a (x) b for vectors: component (i,j) = a_i b_j.
Field outer(const Field& a, const Field& b);
/// Componentwise contraction sum_c a_c b_c, a scalar field.
Field contract(const Field& a, const Field& b);
/// Symmetric part of a d*d tensor.
Field symmetric_part(const Field& t);
Field constant_field(const TorusGrid& grid, int components, double value);

/// (cell_volume * sum_x |f(x)|^p)^(1/p), |.| the pointwise Euclidean
/// (Frobenius) norm over components; p = infinity gives the grid maximum.
double lp_norm(const Field& f, double p);
/// cell_volume * sum_x a(x).b(x).
double inner(const Field& a, const Field& b);
/// cell_volume * sum_x f(x), component c.
double mean(const Field& f, int c = 0);
double min_value(const Field& f, int c = 0);
double max_value(const Field& f, int c = 0);

}  // namespace ddns
