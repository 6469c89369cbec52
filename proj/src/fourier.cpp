#include "specflow/fourier.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <map>
#include <mutex>

namespace specflow {

namespace {

bool is_pow2(int n) { return n > 0 && (n & (n - 1)) == 0; }

// FFTW plans per grid size, created once under a lock. Plans are created with
// FFTW_ESTIMATE | FFTW_UNALIGNED so they are deterministic and usable with
// any caller-owned buffer; execution itself is thread-safe.
struct PlanPair {
  fftw_plan fwd = nullptr;
  fftw_plan bwd = nullptr;
};

PlanPair& plans_for(int n) {
  static std::mutex mu;
  static std::map<int, PlanPair> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  std::vector<cplx> probe(std::size_t(n) * n);
  auto* p = reinterpret_cast<fftw_complex*>(probe.data());
  PlanPair pp;
  unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  pp.fwd = fftw_plan_dft_2d(n, n, p, p, FFTW_FORWARD, flags);
  pp.bwd = fftw_plan_dft_2d(n, n, p, p, FFTW_BACKWARD, flags);
  return cache.emplace(n, pp).first->second;
}

void require_same_grid(const Grid2D& a, const Grid2D& b) {
  if (a != b) throw std::invalid_argument("grid mismatch");
}

}  // namespace

Grid2D::Grid2D(int n_, double L_) : n(n_), L(L_) {
  if (n < 16 || !is_pow2(n))
    throw std::invalid_argument("grid size must be a power of two >= 16");
  if (!(L > 0.0)) throw std::invalid_argument("grid period must be positive");
}

double PhysicalField::max_abs() const {
  double m = 0.0;
  for (double x : v_) m = std::max(m, std::abs(x));
  return m;
}

bool PhysicalField::all_finite() const {
  for (double x : v_)
    if (!std::isfinite(x)) return false;
  return true;
}

cplx& SpectralField::coeff(int k1, int k2) {
  int n = grid_.n;
  int i1 = ((k1 % n) + n) % n;
  int i2 = ((k2 % n) + n) % n;
  return c_[std::size_t(i1) * n + i2];
}

cplx SpectralField::coeff(int k1, int k2) const {
  return const_cast<SpectralField*>(this)->coeff(k1, k2);
}

SpectralField& SpectralField::operator+=(const SpectralField& o) {
  require_same_grid(grid_, o.grid_);
  for (std::size_t i = 0; i < c_.size(); ++i) c_[i] += o.c_[i];
  return *this;
}

SpectralField& SpectralField::operator-=(const SpectralField& o) {
  require_same_grid(grid_, o.grid_);
  for (std::size_t i = 0; i < c_.size(); ++i) c_[i] -= o.c_[i];
  return *this;
}

SpectralField& SpectralField::operator*=(double s) {
  for (auto& z : c_) z *= s;
  return *this;
}

void fft_forward_inplace(std::vector<cplx>& buf, int n) {
  auto* p = reinterpret_cast<fftw_complex*>(buf.data());
  fftw_execute_dft(plans_for(n).fwd, p, p);
}

void fft_backward_inplace(std::vector<cplx>& buf, int n) {
  auto* p = reinterpret_cast<fftw_complex*>(buf.data());
  fftw_execute_dft(plans_for(n).bwd, p, p);
}

SpectralField forward(const PhysicalField& f) {
  if (!f.all_finite())
    throw std::invalid_argument("forward transform: input has non-finite values");
  const Grid2D& g = f.grid();
  SpectralField out(g);
  auto& c = out.data();
  for (std::size_t i = 0; i < c.size(); ++i) c[i] = f.data()[i];
  fft_forward_inplace(c, g.n);
  double scale = 1.0 / g.size();
  for (auto& z : c) z *= scale;
  return out;
}

PhysicalField inverse(const SpectralField& f) {
  const Grid2D& g = f.grid();
  std::vector<cplx> buf = f.data();
  fft_backward_inplace(buf, g.n);
  PhysicalField out(g);
  for (std::size_t i = 0; i < buf.size(); ++i) out.data()[i] = buf[i].real();
  return out;
}

SpectralField derivative(const SpectralField& f, int a1, int a2) {
  if (a1 < 0 || a2 < 0 || a1 + a2 > 8)
    throw std::invalid_argument("derivative multi-index order must be in [0, 8]");
  const Grid2D& g = f.grid();
  SpectralField out(g);
  const int n = g.n;
  for (int i1 = 0; i1 < n; ++i1) {
    bool nyq1 = (g.freq(i1) == -n / 2);
    double k1 = g.wavenumber(i1);
    for (int i2 = 0; i2 < n; ++i2) {
      bool nyq2 = (g.freq(i2) == -n / 2);
      if ((nyq1 && a1 % 2 == 1) || (nyq2 && a2 % 2 == 1)) continue;
      double k2 = g.wavenumber(i2);
      cplx m = 1.0;
      for (int r = 0; r < a1; ++r) m *= cplx(0.0, k1);
      for (int r = 0; r < a2; ++r) m *= cplx(0.0, k2);
      out.at(i1, i2) = m * f.at(i1, i2);
    }
  }
  return out;
}

SpectralField apply_multiplier(const SpectralField& f,
                               const std::function<cplx(double, double)>& m,
                               bool zero_nyquist) {
  const Grid2D& g = f.grid();
  SpectralField out(g);
  const int n = g.n;
  for (int i1 = 0; i1 < n; ++i1) {
    bool nyq1 = (g.freq(i1) == -n / 2);
    for (int i2 = 0; i2 < n; ++i2) {
      bool nyq2 = (g.freq(i2) == -n / 2);
      if (zero_nyquist && (nyq1 || nyq2)) continue;
      out.at(i1, i2) = m(g.wavenumber(i1), g.wavenumber(i2)) * f.at(i1, i2);
    }
  }
  return out;
}

VectorField biot_savart(const SpectralField& omega) {
  const Grid2D& g = omega.grid();
  double mean = std::abs(omega.at(0, 0));
  if (mean > 1e-12 * std::max(l2_norm(omega), 1e-300))
    throw std::invalid_argument("vorticity must have zero mean on the torus");
  VectorField u{SpectralField(g), SpectralField(g)};
  const int n = g.n;
  for (int i1 = 0; i1 < n; ++i1) {
    bool nyq1 = (g.freq(i1) == -n / 2);
    double k1 = g.wavenumber(i1);
    for (int i2 = 0; i2 < n; ++i2) {
      if (i1 == 0 && i2 == 0) continue;
      bool nyq2 = (g.freq(i2) == -n / 2);
      if (nyq1 || nyq2) continue;
      double k2 = g.wavenumber(i2);
      cplx psi = -omega.at(i1, i2) / (k1 * k1 + k2 * k2);
      u.x.at(i1, i2) = -cplx(0.0, k2) * psi;
      u.y.at(i1, i2) = cplx(0.0, k1) * psi;
    }
  }
  return u;
}

VectorField fractional_velocity(const SpectralField& theta, double alpha) {
  if (!(alpha > 1.0 && alpha <= 2.0))
    throw std::invalid_argument("fractional velocity requires alpha in (1, 2]");
  const Grid2D& g = theta.grid();
  double mean = std::abs(theta.at(0, 0));
  if (mean > 1e-12 * std::max(l2_norm(theta), 1e-300))
    throw std::invalid_argument("vorticity must have zero mean on the torus");
  VectorField u{SpectralField(g), SpectralField(g)};
  const int n = g.n;
  for (int i1 = 0; i1 < n; ++i1) {
    bool nyq1 = (g.freq(i1) == -n / 2);
    double k1 = g.wavenumber(i1);
    for (int i2 = 0; i2 < n; ++i2) {
      if (i1 == 0 && i2 == 0) continue;
      bool nyq2 = (g.freq(i2) == -n / 2);
      if (nyq1 || nyq2) continue;
      double k2 = g.wavenumber(i2);
      double k2sum = k1 * k1 + k2 * k2;
      cplx psi = (alpha == 2.0) ? -theta.at(i1, i2) / k2sum
                                : -std::pow(k2sum, -0.5 * alpha) * theta.at(i1, i2);
      u.x.at(i1, i2) = -cplx(0.0, k2) * psi;
      u.y.at(i1, i2) = cplx(0.0, k1) * psi;
    }
  }
  return u;
}

SpectralField curl(const VectorField& u) {
  SpectralField out = derivative(u.y, 1, 0);
  out -= derivative(u.x, 0, 1);
  return out;
}

double max_divergence(const VectorField& u) {
  SpectralField div = derivative(u.x, 1, 0);
  div += derivative(u.y, 0, 1);
  double m = 0.0;
  for (const auto& z : div.data()) m = std::max(m, std::abs(z));
  return m;
}

double l2_norm(const SpectralField& f) {
  double s = 0.0;
  for (const auto& z : f.data()) s += std::norm(z);
  return f.grid().L * std::sqrt(s);
}

double l2_norm(const PhysicalField& f) {
  double s = 0.0;
  for (double x : f.data()) s += x * x;
  return (f.grid().L / f.grid().n) * std::sqrt(s);
}

double l2_inner(const SpectralField& f, const SpectralField& g) {
  return l2_inner_complex(f, g).real();
}

cplx l2_inner_complex(const SpectralField& f, const SpectralField& g) {
  require_same_grid(f.grid(), g.grid());
  cplx s = 0.0;
  for (std::size_t i = 0; i < f.data().size(); ++i)
    s += f.data()[i] * std::conj(g.data()[i]);
  return f.grid().L * f.grid().L * s;
}

double linf_norm(const PhysicalField& f) { return f.max_abs(); }

double hermitian_defect(const SpectralField& f) {
  const int n = f.grid().n;
  double m = 0.0;
  for (int k1 = -n / 2 + 1; k1 < n / 2; ++k1)
    for (int k2 = -n / 2 + 1; k2 < n / 2; ++k2)
      m = std::max(m, std::abs(f.coeff(-k1, -k2) - std::conj(f.coeff(k1, k2))));
  return m;
}

// ---- padded products -------------------------------------------------------

namespace {

// spread coefficients of an n-grid field into the 2n lattice, then transform
// to physical (unnormalized backward FFT; 1/n^2 already in the coefficients)
std::vector<cplx> pad_spectrum(const SpectralField& a) {
  const int n = a.grid().n;
  const int m = 2 * n;
  std::vector<cplx> buf(std::size_t(m) * m, cplx{});
  for (int i1 = 0; i1 < n; ++i1) {
    int f1 = a.grid().freq(i1);
    int j1 = (f1 + m) % m;
    for (int i2 = 0; i2 < n; ++i2) {
      int f2 = a.grid().freq(i2);
      int j2 = (f2 + m) % m;
      buf[std::size_t(j1) * m + j2] = a.at(i1, i2);
    }
  }
  return buf;
}

}  // namespace

std::vector<cplx> ProductAccumulator::pad_to_physical(const SpectralField& a) {
  std::vector<cplx> buf = pad_spectrum(a);
  fft_backward_inplace(buf, 2 * a.grid().n);
  return buf;
}

ProductAccumulator::ProductAccumulator(const Grid2D& g)
    : grid_(g), acc_(std::size_t(2 * g.n) * (2 * g.n), cplx{}) {}

void ProductAccumulator::add(const SpectralField& a, const SpectralField& b) {
  require_same_grid(a.grid(), grid_);
  require_same_grid(b.grid(), grid_);
  add_padded(pad_to_physical(a), pad_to_physical(b));
}

void ProductAccumulator::add_padded(const std::vector<cplx>& pa,
                                    const std::vector<cplx>& pb) {
  for (std::size_t i = 0; i < acc_.size(); ++i) acc_[i] += pa[i] * pb[i];
}

SpectralField ProductAccumulator::finish() const {
  const int n = grid_.n;
  const int m = 2 * n;
  std::vector<cplx> buf = acc_;
  fft_forward_inplace(buf, m);
  double scale = 1.0 / (double(m) * m);
  SpectralField out(grid_);
  for (int i1 = 0; i1 < n; ++i1) {
    int f1 = grid_.freq(i1);
    int j1 = (f1 + m) % m;
    for (int i2 = 0; i2 < n; ++i2) {
      int f2 = grid_.freq(i2);
      int j2 = (f2 + m) % m;
      out.at(i1, i2) = buf[std::size_t(j1) * m + j2] * scale;
    }
  }
  return out;
}

SpectralField multiply_exact(const SpectralField& a, const SpectralField& b) {
  ProductAccumulator acc(a.grid());
  acc.add(a, b);
  return acc.finish();
}

void dealias_mask(SpectralField& f) {
  const Grid2D& g = f.grid();
  const int n = g.n;
  const int kc = n / 3;
  for (int i1 = 0; i1 < n; ++i1) {
    bool cut1 = std::abs(g.freq(i1)) > kc;
    for (int i2 = 0; i2 < n; ++i2)
      if (cut1 || std::abs(g.freq(i2)) > kc) f.at(i1, i2) = cplx{};
  }
}

double masked_mass_fraction(const SpectralField& f) {
  const Grid2D& g = f.grid();
  const int n = g.n;
  const int kc = n / 3;
  double cut = 0.0, tot = 0.0;
  for (int i1 = 0; i1 < n; ++i1) {
    bool cut1 = std::abs(g.freq(i1)) > kc;
    for (int i2 = 0; i2 < n; ++i2) {
      double m = std::norm(f.at(i1, i2));
      tot += m;
      if (cut1 || std::abs(g.freq(i2)) > kc) cut += m;
    }
  }
  return tot > 0.0 ? std::sqrt(cut / tot) : 0.0;
}

double spectral_blocking_fraction(const SpectralField& f) {
  const Grid2D& g = f.grid();
  const int n = g.n;
  const int kc = n / 4;
  double top = 0.0, tot = 0.0;
  for (int i1 = 0; i1 < n; ++i1) {
    bool top1 = std::abs(g.freq(i1)) > kc;
    for (int i2 = 0; i2 < n; ++i2) {
      double m = std::norm(f.at(i1, i2));
      tot += m;
      if (top1 || std::abs(g.freq(i2)) > kc) top += m;
    }
  }
  return tot > 0.0 ? top / tot : 0.0;
}

// ---- PCF1 ------------------------------------------------------------------

namespace {

void put_u32(FILE* fp, std::uint32_t v) {
  unsigned char b[4] = {(unsigned char)(v & 0xff), (unsigned char)((v >> 8) & 0xff),
                        (unsigned char)((v >> 16) & 0xff),
                        (unsigned char)((v >> 24) & 0xff)};
  std::fwrite(b, 1, 4, fp);
}

std::uint32_t get_u32(FILE* fp) {
  unsigned char b[4];
  if (std::fread(b, 1, 4, fp) != 4) throw std::runtime_error("PCF1: truncated file");
  return std::uint32_t(b[0]) | (std::uint32_t(b[1]) << 8) |
         (std::uint32_t(b[2]) << 16) | (std::uint32_t(b[3]) << 24);
}

void put_f64(FILE* fp, double v) {
  std::uint64_t u;
  std::memcpy(&u, &v, 8);
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = (unsigned char)((u >> (8 * i)) & 0xff);
  std::fwrite(b, 1, 8, fp);
}

double get_f64(FILE* fp) {
  unsigned char b[8];
  if (std::fread(b, 1, 8, fp) != 8) throw std::runtime_error("PCF1: truncated file");
  std::uint64_t u = 0;
  for (int i = 0; i < 8; ++i) u |= std::uint64_t(b[i]) << (8 * i);
  double v;
  std::memcpy(&v, &u, 8);
  return v;
}

}  // namespace

void write_pcf1(const std::string& path, const PhysicalField& f) {
  FILE* fp = std::fopen(path.c_str(), "wb");
  if (!fp) throw std::runtime_error("cannot open " + path + " for writing");
  std::fwrite("PCF1", 1, 4, fp);
  put_u32(fp, std::uint32_t(f.grid().n));
  put_f64(fp, f.grid().L);
  for (double v : f.data()) put_f64(fp, v);
  std::fclose(fp);
}

PhysicalField read_pcf1(const std::string& path) {
  FILE* fp = std::fopen(path.c_str(), "rb");
  if (!fp) throw std::runtime_error("cannot open " + path);
  char magic[4];
  if (std::fread(magic, 1, 4, fp) != 4 || std::memcmp(magic, "PCF1", 4) != 0) {
    std::fclose(fp);
    throw std::runtime_error("PCF1: bad magic in " + path);
  }
  int n = int(get_u32(fp));
  double L = get_f64(fp);
  Grid2D g(n, L);
  PhysicalField f(g);
  for (double& v : f.data()) v = get_f64(fp);
  std::fclose(fp);
  return f;
}

}  // namespace specflow
