#include "specflow/interp.hpp"

#include <cmath>
#include <stdexcept>

#include "specflow/rng.hpp"

namespace specflow {

namespace {

// Lagrange weights for nodes 0..p-1 evaluated at s.
void lagrange_weights(int p, double s, double* w) {
  for (int j = 0; j < p; ++j) {
    double prod = 1.0;
    for (int l = 0; l < p; ++l) {
      if (l == j) continue;
      prod *= (s - l) / double(j - l);
    }
    w[j] = prod;
  }
}

}  // namespace

Interpolator::Interpolator(const SpectralField& src, const InterpConfig& cfg)
    : coarse_(src.grid()), m_(cfg.oversample * src.grid().n), order_(cfg.order) {
  if (cfg.oversample < 1 || cfg.oversample > 16)
    throw std::invalid_argument("interpolation oversample must be in [1, 16]");
  if (order_ < 2 || order_ > 12)
    throw std::invalid_argument("interpolation order must be in [2, 12]");
  const int n = coarse_.n;
  std::vector<cplx> buf(std::size_t(m_) * m_, cplx{});
  for (int i1 = 0; i1 < n; ++i1) {
    int j1 = (coarse_.freq(i1) + m_) % m_;
    for (int i2 = 0; i2 < n; ++i2) {
      int j2 = (coarse_.freq(i2) + m_) % m_;
      buf[std::size_t(j1) * m_ + j2] = src.at(i1, i2);
    }
  }
  fft_backward_inplace(buf, m_);
  fine_.resize(buf.size());
  for (std::size_t i = 0; i < buf.size(); ++i) fine_[i] = buf[i].real();
}

double Interpolator::eval(double x, double y) const {
  const double L = coarse_.L;
  const int p = order_;
  double w1[12], w2[12];
  double u = x / L * m_;
  double v = y / L * m_;
  u -= std::floor(u / m_) * m_;
  v -= std::floor(v / m_) * m_;
  int i0 = int(std::floor(u)) - (p / 2 - 1);
  int j0 = int(std::floor(v)) - (p / 2 - 1);
  lagrange_weights(p, u - i0, w1);
  lagrange_weights(p, v - j0, w2);
  double acc = 0.0;
  for (int a = 0; a < p; ++a) {
    int ia = ((i0 + a) % m_ + m_) % m_;
    const double* row = &fine_[std::size_t(ia) * m_];
    double racc = 0.0;
    for (int b = 0; b < p; ++b) {
      int jb = ((j0 + b) % m_ + m_) % m_;
      racc += w2[b] * row[jb];
    }
    acc += w1[a] * racc;
  }
  return acc;
}

double Interpolator::residual_probe(const SpectralField& src, int npoints,
                                    std::uint64_t seed) const {
  CounterRng rng(seed);
  double worst = 0.0;
  for (int i = 0; i < npoints; ++i) {
    double x = rng.uniform() * coarse_.L;
    double y = rng.uniform() * coarse_.L;
    worst = std::max(worst, std::abs(eval(x, y) - eval_modes(src, x, y)));
  }
  return worst;
}

double eval_modes(const SpectralField& f, double x, double y) {
  const Grid2D& g = f.grid();
  cplx acc = 0.0;
  for (int i1 = 0; i1 < g.n; ++i1) {
    double k1 = g.wavenumber(i1);
    for (int i2 = 0; i2 < g.n; ++i2) {
      const cplx& c = f.at(i1, i2);
      if (c == cplx{}) continue;
      double k2 = g.wavenumber(i2);
      double ph = k1 * x + k2 * y;
      acc += c * cplx(std::cos(ph), std::sin(ph));
    }
  }
  return acc.real();
}

PhysicalField compose_displaced(const SpectralField& f, const PhysicalField& d1,
                                const PhysicalField& d2, const InterpConfig& cfg) {
  const Grid2D& g = f.grid();
  if (d1.grid() != g || d2.grid() != g)
    throw std::invalid_argument("grid mismatch");
  Interpolator it(f, cfg);
  PhysicalField out(g);
  for (int i1 = 0; i1 < g.n; ++i1)
    for (int i2 = 0; i2 < g.n; ++i2)
      out.at(i1, i2) = it.eval(g.x(i1) + d1.at(i1, i2), g.x(i2) + d2.at(i1, i2));
  return out;
}

}  // namespace specflow
