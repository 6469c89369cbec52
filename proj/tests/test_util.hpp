#pragma once

#include <cmath>
#include <functional>

#include "specflow/fourier.hpp"
#include "specflow/rng.hpp"

namespace specflow::testutil {

inline PhysicalField field_from(const Grid2D& g,
                                const std::function<double(double, double)>& f) {
  PhysicalField out(g);
  for (int i1 = 0; i1 < g.n; ++i1)
    for (int i2 = 0; i2 < g.n; ++i2) out.at(i1, i2) = f(g.x(i1), g.x(i2));
  return out;
}

inline SpectralField spectral_from(const Grid2D& g,
                                   const std::function<double(double, double)>& f) {
  return forward(field_from(g, f));
}

// Hermitian random field with |c_k| ~ (1+|k|)^{-decay}, modes below n/kdiv.
inline SpectralField random_spectral(const Grid2D& g, std::uint64_t seed,
                                     double decay, int kdiv = 2) {
  SpectralField f(g);
  const int n = g.n;
  const int kc = n / kdiv - 1;
  for (int k1 = -n / 2 + 1; k1 < n / 2; ++k1)
    for (int k2 = -n / 2 + 1; k2 < n / 2; ++k2) {
      if (k1 < 0 || (k1 == 0 && k2 <= 0)) continue;
      double r = std::hypot(double(k1), double(k2));
      if (r > kc) continue;
      double th = kTwoPi * uniform53_at(seed, mode_counter(k1, k2));
      cplx c = std::polar(std::pow(1.0 + r, -decay), th);
      f.coeff(k1, k2) = c;
      f.coeff(-k1, -k2) = std::conj(c);
    }
  return f;
}

// exact radial power law |c_k| = |k|^{-1-s}
inline SpectralField power_spectral(const Grid2D& g, std::uint64_t seed, double s,
                                    int kdiv = 2) {
  SpectralField f(g);
  const int n = g.n;
  const int kc = n / kdiv - 1;
  for (int k1 = -n / 2 + 1; k1 < n / 2; ++k1)
    for (int k2 = -n / 2 + 1; k2 < n / 2; ++k2) {
      if (k1 < 0 || (k1 == 0 && k2 <= 0)) continue;
      double r = std::hypot(double(k1), double(k2));
      if (r > kc) continue;
      double th = kTwoPi * uniform53_at(seed, mode_counter(k1, k2));
      cplx c = std::polar(std::pow(r, -1.0 - s), th);
      f.coeff(k1, k2) = c;
      f.coeff(-k1, -k2) = std::conj(c);
    }
  return f;
}

inline double rel_err(const SpectralField& got, const SpectralField& want) {
  SpectralField d = got;
  d -= want;
  double w = l2_norm(want);
  return w == 0.0 ? l2_norm(d) : l2_norm(d) / w;
}

inline double max_abs_diff(const PhysicalField& a, const PhysicalField& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.data().size(); ++i)
    m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
  return m;
}

}  // namespace specflow::testutil
