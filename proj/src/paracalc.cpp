#include "specflow/paracalc.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace specflow {

namespace {

int iceil_log2(double x) { return int(std::ceil(std::log2(x))); }

// padded physical representations of all dyadic blocks of f (empty blocks skipped)
std::vector<std::vector<cplx>> padded_blocks(const DyadicPartition& part,
                                             const SpectralField& f) {
  std::vector<std::vector<cplx>> out(part.kmax() + 1);
  for (int k = 0; k <= part.kmax(); ++k) {
    if (part.block_l2(f, k) == 0.0) continue;
    out[k] = ProductAccumulator::pad_to_physical(part.block(f, k));
  }
  return out;
}

double sup_spectral_norm(const Matrix2Field& A, const PhysicalField* mask = nullptr) {
  (void)mask;
  double sup = 0.0;
  const auto& a = A.a11.data();
  const auto& b = A.a12.data();
  const auto& c = A.a21.data();
  const auto& d = A.a22.data();
  for (std::size_t i = 0; i < a.size(); ++i) {
    // largest singular value of [[a,b],[c,d]]
    double q = a[i] * a[i] + b[i] * b[i] + c[i] * c[i] + d[i] * d[i];
    double det = a[i] * d[i] - b[i] * c[i];
    double disc = std::sqrt(std::max(0.0, q * q - 4.0 * det * det));
    sup = std::max(sup, std::sqrt(0.5 * (q + disc)));
  }
  return sup;
}

}  // namespace

AdmissibleCutoff AdmissibleCutoff::make(double B, double b) {
  if (!(B > 1.0)) throw std::invalid_argument("admissible cutoff requires B > 1");
  if (!(b > 0.0)) throw std::invalid_argument("admissible cutoff requires b > 0");
  AdmissibleCutoff c;
  c.B = B;
  c.b = b;
  c.n0 = iceil_log2(B) + 2;
  return c;
}

SpectralField paraproduct(const DyadicPartition& part, const SpectralField& f,
                          const SpectralField& g, const AdmissibleCutoff& cutoff) {
  if (f.grid() != g.grid()) throw std::invalid_argument("grid mismatch");
  ProductAccumulator acc(f.grid());
  const int n0 = cutoff.n0;
  for (int q = n0; q <= part.kmax(); ++q) {
    if (part.block_l2(g, q) == 0.0) continue;
    auto low = ProductAccumulator::pad_to_physical(part.lowpass(f, q - n0));
    auto blk = ProductAccumulator::pad_to_physical(part.block(g, q));
    acc.add_padded(low, blk);
  }
  return acc.finish();
}

SpectralField remainder(const DyadicPartition& part, const SpectralField& f,
                        const SpectralField& g, const AdmissibleCutoff& cutoff) {
  if (f.grid() != g.grid()) throw std::invalid_argument("grid mismatch");
  auto fb = padded_blocks(part, f);
  auto gb = padded_blocks(part, g);
  ProductAccumulator acc(f.grid());
  const int band = cutoff.n0 - 1;
  for (int q = 0; q <= part.kmax(); ++q) {
    if (gb[q].empty()) continue;
    for (int i = std::max(0, q - band); i <= std::min(part.kmax(), q + band); ++i) {
      if (fb[i].empty()) continue;
      acc.add_padded(fb[i], gb[q]);
    }
  }
  return acc.finish();
}

cplx SymbolRep::eval(int ix1, int ix2, double kx, double ky) const {
  cplx s = 0.0;
  for (const auto& t : terms)
    s += t.coeff.at(ix1, ix2) * t.multiplier(kx, ky);
  return s;
}

SymbolRep SymbolRep::constant_one(const Grid2D& g) {
  SymbolRep a;
  a.order = 0.0;
  a.zero_homogeneous = true;
  a.terms.push_back({PhysicalField(g, 1.0), [](double, double) { return cplx(1.0); }});
  return a;
}

SymbolRep SymbolRep::from_coefficient(const PhysicalField& c) {
  SymbolRep a;
  a.order = 0.0;
  a.terms.push_back({c, [](double, double) { return cplx(1.0); }});
  return a;
}

SymbolRep SymbolRep::from_multiplier(const Grid2D& g,
                                     std::function<cplx(double, double)> m,
                                     double order) {
  SymbolRep a;
  a.order = order;
  a.terms.push_back({PhysicalField(g, 1.0), std::move(m)});
  return a;
}

SpectralField paradiff_apply(const DyadicPartition& part, const SymbolRep& a,
                             const SpectralField& u, const AdmissibleCutoff& cutoff,
                             int eps_exp) {
  const Grid2D& g = u.grid();
  if (eps_exp < 0) throw std::invalid_argument("eps exponent must be >= 0");
  if ((1 << eps_exp) > g.n / 2)
    throw std::invalid_argument("unresolved semiclassical scale");
  const int n0 = cutoff.n0;
  const int start = n0 + eps_exp;
  const double scale = std::ldexp(1.0, -eps_exp);

  // spectral blocks of u with the dilated multiplier applied, padded once
  ProductAccumulator acc(g);
  std::vector<std::vector<cplx>> low_cache(part.kmax() + 1);
  for (const auto& term : a.terms) {
    SpectralField coeff_hat = forward(term.coeff);
    const auto& m = term.multiplier;
    for (int i = start; i <= part.kmax(); ++i) {
      if (part.block_l2(u, i) == 0.0) continue;
      SpectralField blk = part.block(u, i);
      // multiplier only evaluated on the block's support
      SpectralField mblk(g);
      for (int i1 = 0; i1 < g.n; ++i1)
        for (int i2 = 0; i2 < g.n; ++i2) {
          const cplx& c = blk.at(i1, i2);
          if (c == cplx{}) continue;
          cplx v = m(g.wavenumber(i1) * scale, g.wavenumber(i2) * scale);
          if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
            throw std::domain_error(
                "paradiff_apply: symbol undefined on required lattice points");
          mblk.at(i1, i2) = v * c;
        }
      int cap = i - start;
      if (low_cache[cap].empty())
        low_cache[cap] = ProductAccumulator::pad_to_physical(part.lowpass(coeff_hat, cap));
      acc.add_padded(low_cache[cap], ProductAccumulator::pad_to_physical(mblk));
    }
    for (auto& v : low_cache) v.clear();  // caps are per-coefficient
  }
  return acc.finish();
}

double symbol_seminorm(const SymbolRep& a, const Grid2D& g, double m, int rho,
                       int n) {
  if (rho != 0 && rho != 1)
    throw std::invalid_argument("symbol_seminorm: rho must be 0 or 1");
  if (n < 0 || n > 4)
    throw std::invalid_argument("symbol_seminorm: derivative count must be <= 4");
  const double h = g.k_scale();
  const double kmax_safe = (g.n / 2 - n - 1) * h;
  if (kmax_safe < 1.0)
    throw std::invalid_argument("symbol_seminorm: insufficient lattice range");

  // sample set: full small lattice plus dyadic shells with angular samples
  std::vector<std::pair<double, double>> xi;
  int small = std::min(6, g.n / 4);
  for (int i = -small; i <= small; ++i)
    for (int j = -small; j <= small; ++j) {
      double r = std::hypot(i * h, j * h);
      if (r >= 0.5 && r <= kmax_safe) xi.emplace_back(i * h, j * h);
    }
  for (double r = 8.0 * h; r <= kmax_safe; r *= 2.0)
    for (int t = 0; t < 32; ++t) {
      double th = kTwoPi * t / 32.0;
      xi.emplace_back(r * std::cos(th), r * std::sin(th));
    }

  const int nterms = int(a.terms.size());
  const std::size_t npx = g.size();
  double sup = 0.0;
  std::vector<cplx> d(nterms);

  // centered first differences composed per axis for the xi-derivatives
  std::function<cplx(const std::function<cplx(double, double)>&, double, double,
                     int, int)>
      diff = [&](const std::function<cplx(double, double)>& f, double kx,
                 double ky, int a1, int a2) -> cplx {
    if (a1 > 0)
      return (diff(f, kx + h, ky, a1 - 1, a2) - diff(f, kx - h, ky, a1 - 1, a2)) /
             (2.0 * h);
    if (a2 > 0)
      return (diff(f, kx, ky + h, a1, a2 - 1) - diff(f, kx, ky - h, a1, a2 - 1)) /
             (2.0 * h);
    return f(kx, ky);
  };

  for (int a1 = 0; a1 <= n; ++a1)
    for (int a2 = 0; a1 + a2 <= n; ++a2) {
      int ord = a1 + a2;
      for (const auto& [kx, ky] : xi) {
        double r = std::hypot(kx, ky);
        if (r - ord * h < 0.45) continue;  // keep the stencil off the origin
        double w = std::pow(1.0 + r, ord - m);
        for (int t = 0; t < nterms; ++t)
          d[t] = diff(a.terms[t].multiplier, kx, ky, a1, a2);
        double best = 0.0;
        const int N = g.n;
        for (std::size_t p = 0; p < npx; ++p) {
          cplx v = 0.0;
          for (int t = 0; t < nterms; ++t) v += a.terms[t].coeff.data()[p] * d[t];
          double mag = std::abs(v);
          if (rho == 1) {
            int i1 = int(p) / N, i2 = int(p) % N;
            double dx = g.L / N;
            for (int ax = 0; ax < 2; ++ax) {
              std::size_t q = ax == 0 ? std::size_t((i1 + 1) % N) * N + i2
                                      : std::size_t(i1) * N + (i2 + 1) % N;
              cplx vq = 0.0;
              for (int t = 0; t < nterms; ++t)
                vq += a.terms[t].coeff.data()[q] * d[t];
              mag = std::max(mag, std::abs(vq - v) / dx);
            }
          }
          best = std::max(best, mag);
        }
        sup = std::max(sup, w * best);
      }
    }
  return sup;
}

double matrix2_sup_norm(const Matrix2Field& A) { return sup_spectral_norm(A); }

DiffeoMap DiffeoMap::from_displacement(const PhysicalField& d1,
                                       const PhysicalField& d2) {
  const Grid2D& g = d1.grid();
  if (d2.grid() != g) throw std::invalid_argument("grid mismatch");
  DiffeoMap chi;
  chi.d1 = d1;
  chi.d2 = d2;
  SpectralField h1 = forward(d1), h2 = forward(d2);
  chi.jac.a11 = inverse(derivative(h1, 1, 0));
  chi.jac.a12 = inverse(derivative(h1, 0, 1));
  chi.jac.a21 = inverse(derivative(h2, 1, 0));
  chi.jac.a22 = inverse(derivative(h2, 0, 1));
  for (auto& v : chi.jac.a11.data()) v += 1.0;
  for (auto& v : chi.jac.a22.data()) v += 1.0;
  chi.det = PhysicalField(g);
  chi.inv_jac.a11 = PhysicalField(g);
  chi.inv_jac.a12 = PhysicalField(g);
  chi.inv_jac.a21 = PhysicalField(g);
  chi.inv_jac.a22 = PhysicalField(g);
  for (std::size_t i = 0; i < g.size(); ++i) {
    double a = chi.jac.a11.data()[i], b = chi.jac.a12.data()[i];
    double c = chi.jac.a21.data()[i], d = chi.jac.a22.data()[i];
    double det = a * d - b * c;
    if (!(det > 0.0)) throw std::domain_error("not a diffeomorphism");
    chi.det.data()[i] = det;
    chi.inv_jac.a11.data()[i] = d / det;
    chi.inv_jac.a12.data()[i] = -b / det;
    chi.inv_jac.a21.data()[i] = -c / det;
    chi.inv_jac.a22.data()[i] = a / det;
  }
  double sup = std::max(chi.jac_sup(), chi.inv_jac_sup());
  chi.window = std::max(1, int(std::floor(std::log2(sup))) + 1);
  return chi;
}

double DiffeoMap::jac_sup() const { return sup_spectral_norm(jac); }
double DiffeoMap::inv_jac_sup() const { return sup_spectral_norm(inv_jac); }

SpectralField paracompose(const DyadicPartition& part, const DiffeoMap& chi,
                          const SpectralField& u, const InterpConfig& cfg) {
  const Grid2D& g = u.grid();
  if (chi.d1.grid() != g) throw std::invalid_argument("grid mismatch");
  const int N = chi.window;
  SpectralField out(g);
  for (int k = 0; k <= part.kmax(); ++k) {
    if (part.block_l2(u, k) == 0.0) continue;
    SpectralField blk = part.block(u, k);
    Interpolator it(blk, cfg);
    double res = it.residual_probe(blk, 8, 0x70C0DEull + k);
    // Lagrange error scale for this block's top frequency; low blocks are held
    // to the configured tolerance, high blocks to the attainable bound.
    double phase = std::min(std::ldexp(1.0, k + 1), g.n / 2.0) * g.k_scale() *
                   g.L / (cfg.oversample * g.n);
    double attainable = 8.0 * 0.005 * std::pow(0.5 * phase, cfg.order);
    double gate = std::max(cfg.tol, attainable);
    if (res > gate * std::max(1.0, linf_norm(inverse(blk))))
      throw std::runtime_error("insufficient oversampling");
    PhysicalField comp(g);
    for (int i1 = 0; i1 < g.n; ++i1)
      for (int i2 = 0; i2 < g.n; ++i2)
        comp.at(i1, i2) =
            it.eval(g.x(i1) + chi.d1.at(i1, i2), g.x(i2) + chi.d2.at(i1, i2));
    SpectralField chat = forward(comp);
    // band filter sum_{|l-k| <= N, l >= 0} P_l = P_{<= min(k+N, kmax)} - P_{<= k-N-1}
    SpectralField banded = part.lowpass(chat, std::min(k + N, part.kmax()));
    if (k - N - 1 >= 0) banded -= part.lowpass(chat, k - N - 1);
    out += banded;
  }
  return out;
}

CompositionParts paralinearize_composition(const DyadicPartition& part,
                                           const SpectralField& u,
                                           const DiffeoMap& chi,
                                           const AdmissibleCutoff& cutoff,
                                           const InterpConfig& cfg) {
  CompositionParts parts;
  parts.composed = forward(compose_displaced(u, chi.d1, chi.d2, cfg));
  parts.pullback = paracompose(part, chi, u, cfg);
  SpectralField du1 = derivative(u, 1, 0);
  SpectralField du2 = derivative(u, 0, 1);
  SpectralField g1 = forward(compose_displaced(du1, chi.d1, chi.d2, cfg));
  SpectralField g2 = forward(compose_displaced(du2, chi.d1, chi.d2, cfg));
  parts.para_term = paraproduct(part, g1, forward(chi.d1), cutoff);
  parts.para_term += paraproduct(part, g2, forward(chi.d2), cutoff);
  parts.residual = parts.composed;
  parts.residual -= parts.pullback;
  parts.residual -= parts.para_term;
  return parts;
}

SymbolRep flow_symbol(const Matrix2Field& A, double beta, int n_theta) {
  if (n_theta != 8 && n_theta != 16 && n_theta != 32 && n_theta != 64)
    throw std::invalid_argument("flow_symbol: n_theta must be one of 8, 16, 32, 64");
  const Grid2D& g = A.a11.grid();
  const std::size_t npx = g.size();
  for (std::size_t i = 0; i < npx; ++i) {
    double det = A.a11.data()[i] * A.a22.data()[i] - A.a12.data()[i] * A.a21.data()[i];
    if (!(std::abs(det) > 1e-14))
      throw std::domain_error("flow_symbol: matrix singular at a grid point");
  }
  const int M = n_theta;
  std::vector<double> cth(M), sth(M);
  for (int m = 0; m < M; ++m) {
    cth[m] = std::cos(kTwoPi * m / M);
    sth[m] = std::sin(kTwoPi * m / M);
  }

  // angular samples g_x(theta) = |A(x) (cos, sin)|^{-beta}
  std::vector<double> samples(npx * M);
  for (std::size_t i = 0; i < npx; ++i) {
    double a = A.a11.data()[i], b = A.a12.data()[i];
    double c = A.a21.data()[i], d = A.a22.data()[i];
    for (int m = 0; m < M; ++m) {
      double v1 = a * cth[m] + b * sth[m];
      double v2 = c * cth[m] + d * sth[m];
      samples[i * M + m] = std::pow(v1 * v1 + v2 * v2, -0.5 * beta);
    }
  }

  // angular DFT per grid point; harmonics 0..M/2 (real field is even in
  // theta -> odd harmonics vanish for jacobian symbols, kept if present)
  SymbolRep rep;
  rep.order = 0.0;
  rep.zero_homogeneous = true;
  std::vector<PhysicalField> cosc(M / 2 + 1, PhysicalField(g));
  std::vector<PhysicalField> sinc(M / 2 + 1, PhysicalField(g));
  for (std::size_t i = 0; i < npx; ++i) {
    for (int j = 0; j <= M / 2; ++j) {
      double cr = 0.0, ci = 0.0;
      for (int m = 0; m < M; ++m) {
        double ph = kTwoPi * j * m / M;
        cr += samples[i * M + m] * std::cos(ph);
        ci -= samples[i * M + m] * std::sin(ph);
      }
      cr /= M;
      ci /= M;
      if (j == 0) {
        cosc[0].data()[i] = cr;
      } else if (j == M / 2) {
        cosc[j].data()[i] = cr;  // Nyquist harmonic: cosine only
      } else {
        cosc[j].data()[i] = 2.0 * cr;
        sinc[j].data()[i] = -2.0 * ci;
      }
    }
  }

  double scale0 = cosc[0].max_abs();
  for (int j = 0; j <= M / 2; ++j) {
    auto theta_of = [](double kx, double ky) { return std::atan2(ky, kx); };
    if (cosc[j].max_abs() > 1e-13 * scale0) {
      rep.terms.push_back(
          {cosc[j], [j, theta_of](double kx, double ky) {
             return cplx(std::cos(j * theta_of(kx, ky)));
           }});
    }
    if (j > 0 && j < M / 2 && sinc[j].max_abs() > 1e-13 * scale0) {
      rep.terms.push_back(
          {sinc[j], [j, theta_of](double kx, double ky) {
             return cplx(std::sin(j * theta_of(kx, ky)));
           }});
    }
  }

  // truncation estimate: refine to 2M angles on a subsampled set of points
  // and measure the coefficient mass beyond M/2
  const int M2 = 2 * M;
  int stride = std::max(1, g.n / 64);
  double worst = 0.0;
  for (int i1 = 0; i1 < g.n; i1 += stride)
    for (int i2 = 0; i2 < g.n; i2 += stride) {
      std::size_t i = std::size_t(i1) * g.n + i2;
      double a = A.a11.data()[i], b = A.a12.data()[i];
      double c = A.a21.data()[i], d = A.a22.data()[i];
      double total = 0.0;
      std::vector<double> gv(M2);
      for (int m = 0; m < M2; ++m) {
        double th = kTwoPi * m / M2;
        double v1 = a * std::cos(th) + b * std::sin(th);
        double v2 = c * std::cos(th) + d * std::sin(th);
        gv[m] = std::pow(v1 * v1 + v2 * v2, -0.5 * beta);
        total += gv[m] * gv[m] / M2;
      }
      double kept = 0.0;
      for (int j = -M / 2; j <= M / 2; ++j) {
        double cr = 0.0, ci = 0.0;
        for (int m = 0; m < M2; ++m) {
          double ph = kTwoPi * j * m / M2;
          cr += gv[m] * std::cos(ph);
          ci -= gv[m] * std::sin(ph);
        }
        cr /= M2;
        ci /= M2;
        double w = (j == -M / 2 || j == M / 2) ? 0.5 : 1.0;  // shared Nyquist pair
        kept += w * (cr * cr + ci * ci);
      }
      double beyond = std::max(0.0, total - kept);
      if (total > 0.0) worst = std::max(worst, std::sqrt(beyond / total));
    }
  rep.truncation_mass = worst;
  return rep;
}

SpectralField radial_filter(const SpectralField& f,
                            const std::function<double(double)>& chi_radial,
                            int eps_exp) {
  double scale = std::ldexp(1.0, -eps_exp);
  return apply_multiplier(
      f,
      [&](double kx, double ky) { return cplx(chi_radial(scale * std::hypot(kx, ky))); },
      /*zero_nyquist=*/false);
}

double commutator_check(const DyadicPartition& part, const VectorField& u,
                        const SpectralField& omega, int eps_exp,
                        const AdmissibleCutoff& cutoff,
                        const std::function<double(double)>& chi_radial,
                        int lambda_exp, const TailProfile& omega_tail) {
  const Grid2D& g = omega.grid();
  auto transport = [&](const SpectralField& w) {
    SpectralField s = paraproduct(part, u.x, derivative(w, 1, 0), cutoff);
    s += paraproduct(part, u.y, derivative(w, 0, 1), cutoff);
    return s;
  };
  SpectralField lhs = radial_filter(transport(omega), chi_radial, eps_exp);
  lhs -= transport(radial_filter(omega, chi_radial, eps_exp));

  Matrix2Field Du{inverse(derivative(u.x, 1, 0)), inverse(derivative(u.x, 0, 1)),
                  inverse(derivative(u.y, 1, 0)), inverse(derivative(u.y, 0, 1))};
  double du_sup = sup_spectral_norm(Du);
  double dr = omega_tail.value_at_exp(eps_exp + lambda_exp);
  if (dr <= 1e-14 * omega_tail.total)
    throw std::domain_error("commutator_check: reference tail below guard");
  if (du_sup == 0.0) return 0.0;
  (void)g;
  return l2_norm(lhs) / (du_sup * dr);
}

}  // namespace specflow
