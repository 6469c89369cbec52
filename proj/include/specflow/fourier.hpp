#pragma once

// Periodic grid, spectral fields and the FFT-backed core operations:
// transforms, spectral derivatives, elliptic velocity inversions and
// exact (alias-free) products.

#include <complex>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace specflow {

using cplx = std::complex<double>;

inline constexpr double kTwoPi = 6.283185307179586476925286766559;

// Uniform n-by-n periodic grid on [0, L)^2. Wavenumbers are the integer
// lattice [-n/2, n/2)^2 scaled by 2*pi/L.
struct Grid2D {
  int n = 0;
  double L = kTwoPi;

  Grid2D() = default;
  Grid2D(int n_, double L_ = kTwoPi);

  // integer frequency of storage index i in [0, n)
  int freq(int i) const { return i <= n / 2 - 1 ? i : i - n; }
  // scaled wavenumber
  double wavenumber(int i) const { return freq(i) * (kTwoPi / L); }
  double x(int i) const { return L * i / n; }
  std::size_t size() const { return std::size_t(n) * n; }
  double k_scale() const { return kTwoPi / L; }

  bool operator==(const Grid2D& o) const { return n == o.n && L == o.L; }
  bool operator!=(const Grid2D& o) const { return !(*this == o); }
};

// Real samples on the grid, row-major: value(i1, i2) at x = (x(i1), x(i2)).
class PhysicalField {
 public:
  PhysicalField() = default;
  explicit PhysicalField(const Grid2D& g, double fill = 0.0)
      : grid_(g), v_(g.size(), fill) {}

  const Grid2D& grid() const { return grid_; }
  double& at(int i1, int i2) { return v_[std::size_t(i1) * grid_.n + i2]; }
  double at(int i1, int i2) const { return v_[std::size_t(i1) * grid_.n + i2]; }
  std::vector<double>& data() { return v_; }
  const std::vector<double>& data() const { return v_; }

  double max_abs() const;
  bool all_finite() const;

 private:
  Grid2D grid_;
  std::vector<double> v_;
};

// Fourier coefficients c_k of a periodic field, f(x) = sum_k c_k e^{i k.x};
// same row-major layout over storage indices as PhysicalField.
class SpectralField {
 public:
  SpectralField() = default;
  explicit SpectralField(const Grid2D& g) : grid_(g), c_(g.size(), cplx{}) {}

  const Grid2D& grid() const { return grid_; }
  cplx& at(int i1, int i2) { return c_[std::size_t(i1) * grid_.n + i2]; }
  cplx at(int i1, int i2) const { return c_[std::size_t(i1) * grid_.n + i2]; }
  std::vector<cplx>& data() { return c_; }
  const std::vector<cplx>& data() const { return c_; }

  // coefficient at integer frequency (k1, k2), any representative mod n
  cplx& coeff(int k1, int k2);
  cplx coeff(int k1, int k2) const;

  SpectralField& operator+=(const SpectralField& o);
  SpectralField& operator-=(const SpectralField& o);
  SpectralField& operator*=(double s);

 private:
  Grid2D grid_;
  std::vector<cplx> c_;
};

struct VectorField {
  SpectralField x, y;
};

// ---- transforms -----------------------------------------------------------

// Forward transform, normalized by 1/n^2 so coefficients are Fourier-series
// amplitudes. Rejects non-finite input.
SpectralField forward(const PhysicalField& f);
PhysicalField inverse(const SpectralField& f);

// complex-to-complex helpers used by the padded product machinery
void fft_forward_inplace(std::vector<cplx>& buf, int n);   // no normalization
void fft_backward_inplace(std::vector<cplx>& buf, int n);  // no normalization

// ---- spectral calculus ----------------------------------------------------

// d^(a1+a2) f / dx1^a1 dx2^a2. Nyquist row/column zeroed along any axis with
// odd order. Total order limited to 8.
SpectralField derivative(const SpectralField& f, int a1, int a2);

// Apply a scalar multiplier m(kx, ky) on the scaled wavenumber lattice.
// Nyquist rows are zeroed when zero_nyquist is set.
SpectralField apply_multiplier(const SpectralField& f,
                               const std::function<cplx(double, double)>& m,
                               bool zero_nyquist = true);

// u = grad^perp(psi), laplacian(psi) = omega, psi zero-mean. Requires
// zero-mean vorticity.
VectorField biot_savart(const SpectralField& omega);

// u = grad^perp applied to -|k|^{-alpha} theta_hat, alpha in (1, 2];
// alpha = 2 coincides with biot_savart.
VectorField fractional_velocity(const SpectralField& theta, double alpha);

SpectralField curl(const VectorField& u);  // d1 u2 - d2 u1
double max_divergence(const VectorField& u);

// ---- norms and pairings ---------------------------------------------------

double l2_norm(const SpectralField& f);  // = L * sqrt(sum |c_k|^2)
double l2_norm(const PhysicalField& f);  // quadrature: (L/n) sqrt(sum f^2)
double l2_inner(const SpectralField& f, const SpectralField& g);
cplx l2_inner_complex(const SpectralField& f, const SpectralField& g);
double linf_norm(const PhysicalField& f);

double hermitian_defect(const SpectralField& f);  // max |c(-k) - conj(c(k))|

// ---- products -------------------------------------------------------------

// Exact product: both factors spread onto a 2n grid, multiplied pointwise,
// transformed back and truncated. Alias-free for every retained mode.
SpectralField multiply_exact(const SpectralField& a, const SpectralField& b);

// Accumulates sum_j a_j * b_j on the padded physical grid, paying the final
// forward transform once.
class ProductAccumulator {
 public:
  explicit ProductAccumulator(const Grid2D& g);
  void add(const SpectralField& a, const SpectralField& b);
  // pre-padded physical factors (2n grid, interleaved complex)
  void add_padded(const std::vector<cplx>& pa, const std::vector<cplx>& pb);
  SpectralField finish() const;

  // expose padding for callers that cache padded factors
  static std::vector<cplx> pad_to_physical(const SpectralField& a);

 private:
  Grid2D grid_;
  std::vector<cplx> acc_;  // 2n x 2n physical accumulator
};

// 2/3-rule mask: zero modes with |k_i| > n/3 (integer frequencies).
void dealias_mask(SpectralField& f);
double masked_mass_fraction(const SpectralField& f);  // L2 fraction in masked modes

// Resolution-health indicator: squared-mass fraction carried by the top of
// the retained band (|k|_inf > n/4). The masked share of a quadratic product
// is O(1) by construction, so trust windows key off this instead.
double spectral_blocking_fraction(const SpectralField& f);

// ---- snapshot file format -------------------------------------------------

// "PCF1": magic, u32 n (LE), f64 L (LE), n*n f64 (LE) row-major samples.
void write_pcf1(const std::string& path, const PhysicalField& f);
PhysicalField read_pcf1(const std::string& path);

}  // namespace specflow
