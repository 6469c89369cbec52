#include <doctest.h>

#include <cmath>

#include "specflow/paracalc.hpp"
#include "test_util.hpp"

using namespace specflow;
using namespace specflow::testutil;

namespace {

DiffeoMap shear_map(const Grid2D& g, double t) {
  PhysicalField d1 = field_from(g, [t](double, double y) { return t * std::sin(y); });
  PhysicalField d2(g);
  return DiffeoMap::from_displacement(d1, d2);
}

}  // namespace

TEST_CASE("paraproduct: exact reconstruction and constant coefficient") {
  Grid2D g(128);
  DyadicPartition part(g);
  AdmissibleCutoff cutoff = AdmissibleCutoff::standard();

  for (int i = 0; i < 3; ++i) {
    SpectralField f = random_spectral(g, 300 + i, 1.6);
    SpectralField h = random_spectral(g, 400 + i, 1.3);
    SpectralField lhs = paraproduct(part, f, h, cutoff);
    lhs += paraproduct(part, h, f, cutoff);
    lhs += remainder(part, f, h, cutoff);
    SpectralField prod = multiply_exact(f, h);
    CHECK(rel_err(lhs, prod) < 1e-12);
  }

  // T_c g = c * (g - sum_{i < n0} Delta_i g), oracle by direct dyadic summation
  SpectralField c = spectral_from(g, [](double, double) { return 2.5; });
  SpectralField h = random_spectral(g, 21, 1.2);
  SpectralField got = paraproduct(part, c, h, cutoff);
  SpectralField want(g);
  for (int i = cutoff.n0; i <= part.kmax(); ++i) want += part.block(h, i);
  want *= 2.5;
  CHECK(rel_err(got, want) < 1e-12);
}

TEST_CASE("paraproduct: spectral localization annuli") {
  Grid2D g(128);
  DyadicPartition part(g);
  AdmissibleCutoff cutoff = AdmissibleCutoff::standard();
  SpectralField f = random_spectral(g, 42, 1.5);
  SpectralField h = random_spectral(g, 43, 1.2);
  for (int j = 3; j <= part.kmax() - 2; ++j) {
    SpectralField bj = part.block(h, j);
    if (l2_norm(bj) == 0.0) continue;
    SpectralField tf = paraproduct(part, f, bj, cutoff);
    double inner = (1.0 - 1.0 / cutoff.B) * std::ldexp(1.0, j - 1);
    double outer = (1.0 + 1.0 / cutoff.B) * std::ldexp(1.0, j + 1);
    double leak = 0.0, total = 0.0;
    for (int i1 = 0; i1 < g.n; ++i1)
      for (int i2 = 0; i2 < g.n; ++i2) {
        double r = std::hypot(g.wavenumber(i1), g.wavenumber(i2));
        double m = std::norm(tf.at(i1, i2));
        total += m;
        if (r < inner - 1e-9 || r > outer + 1e-9) leak += m;
      }
    CHECK(std::sqrt(leak / total) <= 1e-13);
  }
}

TEST_CASE("remainder: diagonal interactions and smoothing order") {
  Grid2D g(128);
  DyadicPartition part(g);
  AdmissibleCutoff cutoff = AdmissibleCutoff::standard();

  // spectra separated beyond the diagonal band (width n0 - 1 blocks):
  // the paraproducts carry the whole product
  SpectralField lo(g), hi(g);
  lo.coeff(2, 0) = 1.0;   // block 1 exactly
  lo.coeff(-2, 0) = 1.0;
  hi.coeff(40, 0) = 1.0;  // blocks 5 and 6
  hi.coeff(-40, 0) = 1.0;
  SpectralField r = remainder(part, lo, hi, cutoff);
  SpectralField prod = multiply_exact(lo, hi);
  CHECK(l2_norm(r) < 1e-12 * l2_norm(prod));

  // f = g single mode: identity closes (R = f^2 minus the paraproduct pieces)
  SpectralField mode(g);
  mode.coeff(6, 0) = 0.5;
  mode.coeff(-6, 0) = 0.5;
  SpectralField lhs = paraproduct(part, mode, mode, cutoff);
  lhs *= 2.0;
  lhs += remainder(part, mode, mode, cutoff);
  CHECK(rel_err(lhs, multiply_exact(mode, mode)) < 1e-12);

  // smoothing: |Delta_k R| decays at least like 2^{-k (a + b - 1)}
  double a = 1.5, b = 1.2;
  SpectralField fa = power_spectral(g, 71, a);
  SpectralField fb = power_spectral(g, 72, b);
  SpectralField rr = remainder(part, fa, fb, cutoff);
  std::vector<double> xs, ys;
  for (int k = 3; k <= part.kmax() - 2; ++k) {
    double m = part.block_l2(rr, k);
    if (m <= 0.0) continue;
    xs.push_back(k);
    ys.push_back(std::log2(m));
  }
  REQUIRE(xs.size() >= 3);
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i]; sy += ys[i]; sxx += xs[i] * xs[i]; sxy += xs[i] * ys[i];
  }
  double slope = (xs.size() * sxy - sx * sy) / (xs.size() * sxx - sx * sx);
  CHECK(-slope >= a + b - 1.0 - 0.1);
}

TEST_CASE("paradiff_apply: reductions and multiplier oracle") {
  Grid2D g(128);
  DyadicPartition part(g);
  AdmissibleCutoff cutoff = AdmissibleCutoff::standard();
  SpectralField u = random_spectral(g, 51, 1.4);

  // a(x, xi) = f(x): agrees with the paraproduct exactly
  PhysicalField coeff = inverse(random_spectral(g, 52, 2.0));
  SymbolRep af = SymbolRep::from_coefficient(coeff);
  SpectralField lhs = paradiff_apply(part, af, u, cutoff);
  SpectralField rhs = paraproduct(part, forward(coeff), u, cutoff);
  CHECK(rel_err(lhs, rhs) < 1e-12);

  // a = 1: the high part of u
  SymbolRep one = SymbolRep::constant_one(g);
  SpectralField hp = paradiff_apply(part, one, u, cutoff);
  SpectralField want(g);
  for (int i = cutoff.n0; i <= part.kmax(); ++i) want += part.block(u, i);
  CHECK(rel_err(hp, want) < 1e-12);

  // a = |xi|: blockwise |D| on the high part
  SymbolRep amod = SymbolRep::from_multiplier(
      g, [](double kx, double ky) { return cplx(std::hypot(kx, ky)); }, 1.0);
  SpectralField lhs2 = paradiff_apply(part, amod, u, cutoff);
  SpectralField want2 = apply_multiplier(
      want, [](double kx, double ky) { return cplx(std::hypot(kx, ky)); }, false);
  CHECK(rel_err(lhs2, want2) < 1e-12);
}

TEST_CASE("paradiff_apply: operator-norm surrogate is resolution stable") {
  double prev = 0.0;
  for (int n : {128, 256}) {
    Grid2D g(n);
    DyadicPartition part(g);
    AdmissibleCutoff cutoff = AdmissibleCutoff::standard();
    SpectralField u = power_spectral(g, 99, 1.5);
    SymbolRep amod = SymbolRep::from_multiplier(
        g, [](double kx, double ky) { return cplx(std::hypot(kx, ky)); }, 1.0);
    double M = symbol_seminorm(amod, g, 1.0, 0, 2);
    double s = 1.5;
    double ratio = sobolev_norm(paradiff_apply(part, amod, u, cutoff), s - 1.0) /
                   (M * sobolev_norm(u, s));
    CHECK(ratio < 10.0);
    if (prev > 0.0) CHECK(std::abs(std::log2(ratio / prev)) < 1.0);
    prev = ratio;
  }
}

TEST_CASE("symbol seminorms") {
  Grid2D g(128);
  SymbolRep one = SymbolRep::constant_one(g);
  CHECK(symbol_seminorm(one, g, 0.0, 0, 2) == doctest::Approx(1.0).epsilon(1e-12));

  // x-only symbol: M^0_0 = sup |f|
  PhysicalField f = inverse(random_spectral(g, 5, 2.0));
  SymbolRep af = SymbolRep::from_coefficient(f);
  CHECK(symbol_seminorm(af, g, 0.0, 0, 0) == doctest::Approx(f.max_abs()).epsilon(1e-12));

  // a = |xi|: first-order seminorm finite and resolution stable within 10%
  double prev = 0.0;
  for (int n : {128, 256}) {
    Grid2D gn(n);
    SymbolRep am = SymbolRep::from_multiplier(
        gn, [](double kx, double ky) { return cplx(std::hypot(kx, ky)); }, 1.0);
    double M = symbol_seminorm(am, gn, 1.0, 0, 2);
    CHECK(M > 0.0);
    CHECK(M < 100.0);
    if (prev > 0.0) CHECK(std::abs(M / prev - 1.0) < 0.1);
    prev = M;
  }

  CHECK_THROWS_AS((void)symbol_seminorm(one, g, 0.0, 2, 2), std::invalid_argument);
  CHECK_THROWS_AS((void)symbol_seminorm(one, g, 0.0, 0, 5), std::invalid_argument);
}

TEST_CASE("paracompose: identity, translation, shear bounds") {
  Grid2D g(128);
  DyadicPartition part(g);
  InterpConfig cfg;

  SpectralField u = random_spectral(g, 61, 1.5);
  PhysicalField zero(g);
  DiffeoMap ident = DiffeoMap::from_displacement(zero, zero);
  CHECK(ident.window == 1);
  SpectralField pu = paracompose(part, ident, u, cfg);
  CHECK(rel_err(pu, u) < 1e-12);

  // translation: phase-shift oracle, band-limited probe
  SpectralField ub = random_spectral(g, 62, 1.2, 16);  // modes below 8
  double a1 = 0.7, a2 = -1.3;
  PhysicalField c1(g, a1), c2(g, a2);
  DiffeoMap trans = DiffeoMap::from_displacement(c1, c2);
  SpectralField tu = paracompose(part, trans, ub, cfg);
  SpectralField want = apply_multiplier(
      ub,
      [&](double kx, double ky) {
        return std::polar(1.0, kx * a1 + ky * a2);
      },
      false);
  CHECK(rel_err(tu, want) < 1e-10);

  // shear on a single high mode: L2 norm within jacobian-controlled bounds
  DiffeoMap shear = shear_map(g, 0.8);
  SpectralField mode(g);
  mode.coeff(24, 0) = 0.5;
  mode.coeff(-24, 0) = 0.5;
  SpectralField su = paracompose(part, shear, mode, cfg);
  double C = std::max(shear.jac_sup(), shear.inv_jac_sup());
  double ratio = l2_norm(su) / l2_norm(mode);
  CHECK(ratio <= C);
  CHECK(ratio >= 1.0 / C);
}

TEST_CASE("paracompose rejects a folded map") {
  Grid2D g(64);
  PhysicalField d1 = field_from(g, [](double x, double) { return 1.2 * std::sin(x); });
  PhysicalField d2(g);
  CHECK_THROWS_WITH_AS((void)DiffeoMap::from_displacement(d1, d2),
                       "not a diffeomorphism", std::domain_error);
}

TEST_CASE("paralinearize_composition: identity and near-identity scaling") {
  Grid2D g(128);
  DyadicPartition part(g);
  AdmissibleCutoff cutoff = AdmissibleCutoff::standard();
  InterpConfig cfg;

  SpectralField u = random_spectral(g, 63, 1.6);
  PhysicalField zero(g);
  DiffeoMap ident = DiffeoMap::from_displacement(zero, zero);
  CompositionParts parts = paralinearize_composition(part, u, ident, cutoff, cfg);
  CHECK(rel_err(parts.pullback, u) < 1e-12);
  CHECK(l2_norm(parts.para_term) < 1e-12 * l2_norm(u));
  CHECK(l2_norm(parts.residual) < 1e-10 * l2_norm(u));

  // identity of the three parts against the direct composition
  DiffeoMap shear = shear_map(g, 0.6);
  CompositionParts sp = paralinearize_composition(part, u, shear, cutoff, cfg);
  SpectralField sum = sp.pullback;
  sum += sp.para_term;
  sum += sp.residual;
  CHECK(rel_err(sum, sp.composed) < 1e-9);

  // residual shrinks at least linearly with the displacement on a high mode;
  // the displacement keeps a high-frequency component so the first-order
  // window clip is visible, and stays weak enough that N = 1 for every t
  SpectralField mode(g);
  mode.coeff(24, 0) = 0.5;
  mode.coeff(-24, 0) = 0.5;
  double prev_ratio = 0.0;
  for (double t : {0.2, 0.1, 0.05}) {
    PhysicalField d1 = field_from(g, [t](double, double y) {
      return t * (std::sin(y) + 0.3 * std::sin(12.0 * y));
    });
    DiffeoMap chi = DiffeoMap::from_displacement(d1, zero);
    REQUIRE(chi.window == 1);
    CompositionParts p = paralinearize_composition(part, mode, chi, cutoff, cfg);
    double ratio = l2_norm(p.residual) / l2_norm(p.composed);
    CHECK(ratio > 1e-6);  // above the interpolation floor
    if (prev_ratio > 0.0) CHECK(prev_ratio / ratio > 1.8);
    prev_ratio = ratio;
  }
}

TEST_CASE("paralinearize_composition: low-band field under a rough shear") {
  Grid2D g(128);
  DyadicPartition part(g);
  AdmissibleCutoff cutoff = AdmissibleCutoff::standard();
  InterpConfig cfg;

  SpectralField u = random_spectral(g, 64, 1.2, 32);  // modes below 4
  PhysicalField d1 = field_from(
      g, [](double, double y) { return 0.04 * std::sin(16.0 * y); });
  PhysicalField zero(g);
  DiffeoMap chi = DiffeoMap::from_displacement(d1, zero);
  CompositionParts p = paralinearize_composition(part, u, chi, cutoff, cfg);

  // the pullback keeps the band content; the change lives in the other parts
  SpectralField pull_change = p.pullback;
  pull_change -= u;
  SpectralField comp_change = p.composed;
  comp_change -= u;
  CHECK(l2_norm(pull_change) < 0.5 * l2_norm(comp_change));
  SpectralField rest = p.para_term;
  rest += p.residual;
  CHECK(l2_norm(rest) > 0.5 * l2_norm(comp_change));
}

TEST_CASE("flow_symbol: identity, diagonal and shear harmonics") {
  Grid2D g(64);
  PhysicalField one(g, 1.0), zero(g), two(g, 2.0), half(g, 0.5);

  Matrix2Field id{one, zero, zero, one};
  SymbolRep aid = flow_symbol(id, 1.0, 16);
  REQUIRE(aid.terms.size() == 1);
  CHECK(aid.terms[0].coeff.at(3, 5) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(aid.eval(0, 0, 3.0, 4.0) - cplx(1.0)) < 1e-12);
  CHECK(aid.truncation_mass < 1e-12);

  Matrix2Field diag{two, zero, zero, half};
  SymbolRep ad = flow_symbol(diag, 1.0, 32);
  CHECK(std::abs(ad.eval(0, 0, 1.0, 0.0) - cplx(0.5)) < 1e-6);
  CHECK(std::abs(ad.eval(0, 0, 0.0, 1.0) - cplx(2.0)) < 1e-6);

  // shear jacobian inverse at t = 1: harmonic tail beyond 32 is negligible
  PhysicalField sh = inverse(spectral_from(g, [](double, double y) { return std::cos(y); }));
  Matrix2Field shear{one, sh, zero, one};
  SymbolRep as = flow_symbol(shear, 1.0, 64);
  CHECK(as.truncation_mass < 1e-6);
  // pointwise oracle at a few lattice directions
  for (auto [kx, ky] : {std::pair{3.0, 0.0}, {0.0, 5.0}, {4.0, 4.0}}) {
    double c = sh.at(7, 9);
    double v1 = kx + c * ky, v2 = ky;
    double want = std::hypot(kx, ky) / std::hypot(v1, v2);
    CHECK(std::abs(as.eval(7, 9, kx, ky) - cplx(want)) < 1e-5);
  }

  PhysicalField sing(g);  // zero determinant
  Matrix2Field bad{one, one, one, one};
  CHECK_THROWS_AS((void)flow_symbol(bad, 1.0, 16), std::domain_error);
  CHECK_THROWS_AS((void)flow_symbol(id, 1.0, 12), std::invalid_argument);
}

TEST_CASE("principal-symbol commutativity gains one dyadic order") {
  Grid2D g(256);
  DyadicPartition part(g);
  AdmissibleCutoff cutoff = AdmissibleCutoff::standard();

  PhysicalField one(g, 1.0), zero(g);
  PhysicalField sh = inverse(spectral_from(g, [](double, double y) { return 0.8 * std::cos(y); }));
  Matrix2Field shear{one, sh, zero, one};
  SymbolRep a = flow_symbol(shear, 1.0, 32);
  PhysicalField coeff = inverse(spectral_from(
      g, [](double x, double y) { return 1.0 + 0.4 * std::sin(x) * std::cos(y); }));
  SymbolRep b = SymbolRep::from_coefficient(coeff);

  // blocks fully inside the operator range (j >= n0); below it part of the
  // block is annihilated and the ratio is not meaningful
  std::vector<double> xs, ys;
  for (int j = cutoff.n0; j <= part.kmax() - 2; ++j) {
    SpectralField uj = part.block(random_spectral(g, 80 + j, 1.0), j);
    if (l2_norm(uj) == 0.0) continue;
    SpectralField ab = paradiff_apply(part, a, paradiff_apply(part, b, uj, cutoff), cutoff);
    SpectralField ba = paradiff_apply(part, b, paradiff_apply(part, a, uj, cutoff), cutoff);
    ab -= ba;
    xs.push_back(j);
    ys.push_back(std::log2(l2_norm(ab) / l2_norm(uj)));
  }
  REQUIRE(xs.size() >= 3);
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i]; sy += ys[i]; sxx += xs[i] * xs[i]; sxy += xs[i] * ys[i];
  }
  double slope = (xs.size() * sxy - sx * sy) / (xs.size() * sxx - sx * sx);
  CHECK(slope <= -0.8);
}

TEST_CASE("paracomposition functoriality on band-limited blocks") {
  Grid2D g(256);
  DyadicPartition part(g);
  InterpConfig cfg;

  PhysicalField zero(g);
  PhysicalField da = field_from(g, [](double, double y) { return 0.5 * std::sin(y); });
  PhysicalField db = field_from(g, [](double x, double) { return 0.4 * std::sin(x); });
  DiffeoMap chi = DiffeoMap::from_displacement(da, zero);
  DiffeoMap chit = DiffeoMap::from_displacement(zero, db);

  // chi^*(chit^* u) ~ u o (chit o chi): composed displacement
  // d(x) = d_chi(x) + d_chit(x + d_chi(x))
  PhysicalField dc2 = compose_displaced(forward(db), chi.d1, chi.d2, cfg);
  PhysicalField dc1 = da;
  DiffeoMap comp = DiffeoMap::from_displacement(dc1, dc2);

  std::vector<int> js;
  std::vector<double> ratio;
  for (int j = 3; j <= part.kmax() - 2; ++j) {
    SpectralField uj = part.block(random_spectral(g, 90 + j, 1.0), j);
    if (l2_norm(uj) == 0.0) continue;
    SpectralField lhs = paracompose(part, chi, paracompose(part, chit, uj, cfg), cfg);
    lhs -= paracompose(part, comp, uj, cfg);
    js.push_back(j);
    ratio.push_back(l2_norm(lhs) / l2_norm(uj));
  }
  REQUIRE(js.size() >= 3);
  // the defect is small everywhere and decays with the band of u until the
  // window-taper floor
  for (double r : ratio) CHECK(r <= std::ldexp(1.0, -8));
  CHECK(ratio[2] <= 0.75 * ratio[0]);
}

TEST_CASE("adapted-norm bounds for paraproduct and paracomposition") {
  InterpConfig cfg;
  double prev_C = 0.0;
  for (int n : {128, 256}) {
    Grid2D g(n);
    DyadicPartition part(g);
    AdmissibleCutoff cutoff = AdmissibleCutoff::standard();
    SpectralField w0 = power_spectral(g, 7, 1.5);
    AdaptedNormContext ctx = slow_varying_table(tail_profile(w0));

    SpectralField f = random_spectral(g, 31, 2.2);
    double fsup = linf_norm(inverse(f));
    SpectralField h2 = random_spectral(g, 33, 1.4);
    double C = adapted_norm(paraproduct(part, f, h2, cutoff), ctx) /
               (fsup * adapted_norm(h2, ctx));
    CHECK(C < 10.0);
    if (prev_C > 0.0) CHECK(std::abs(std::log2(C / prev_C)) < 1.0);
    prev_C = C;
  }

  // paracomposition constant is monotone in the shear strength
  Grid2D g(128);
  DyadicPartition part(g);
  SpectralField w0 = power_spectral(g, 7, 1.5);
  AdaptedNormContext ctx = slow_varying_table(tail_profile(w0));
  SpectralField u = random_spectral(g, 35, 1.4);
  double base = adapted_norm(u, ctx);
  double prev = 0.0;
  for (double t : {0.25, 0.5, 1.0}) {
    DiffeoMap chi = shear_map(g, t);
    double C = adapted_norm(paracompose(part, chi, u, cfg), ctx) / base;
    CHECK(C < 20.0);
    if (prev > 0.0) CHECK(C >= prev * 0.95);
    prev = C;
  }
}

TEST_CASE("commutator check") {
  Grid2D g(128);
  DyadicPartition part(g);
  AdmissibleCutoff cutoff = AdmissibleCutoff::standard();
  auto chi = [](double r) {
    double lo = 2.0, hi = 8.0;
    double gm = std::pow(hi / lo, 0.25);
    return smoothstep((r - lo) / (lo * gm - lo)) *
           (1.0 - smoothstep((r - hi / gm) / (hi - hi / gm)));
  };

  SpectralField omega = power_spectral(g, 3, 1.5);
  TailProfile tail = tail_profile(omega);

  // u = 0
  VectorField uz{SpectralField(g), SpectralField(g)};
  CHECK(commutator_check(part, uz, omega, 2, cutoff, chi, 1, tail) == 0.0);

  // constant u: multiplier, commutes to round-off
  SpectralField cst = spectral_from(g, [](double, double) { return 0.7; });
  VectorField uc{cst, cst};
  CHECK(commutator_check(part, uc, omega, 2, cutoff, chi, 1, tail) < 1e-12);

  // shear velocity, random omega: envelope over eps within a factor of 10.
  // Shells must sit above the paraproduct cutoff (e >= 1 here); below it both
  // commutator terms vanish identically.
  VectorField us = biot_savart(spectral_from(g, [](double, double y) { return std::cos(y); }));
  double lo = 1e300, hi = 0.0;
  for (int e = 1; e <= 3; ++e) {
    double v = commutator_check(part, us, omega, e, cutoff, chi, 1, tail);
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  CHECK(hi / lo <= 10.0);
}
