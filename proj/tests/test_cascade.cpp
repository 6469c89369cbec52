#include <doctest.h>

#include <cmath>

#include "specflow/cascade.hpp"
#include "test_util.hpp"

using namespace specflow;
using namespace specflow::testutil;

namespace {

// shear background plus a seeded power-law tail, dealias-band limited
SpectralField cascade_data(const Grid2D& g, double s, double amp,
                           std::uint64_t seed) {
  const int kc = g.n / 3;
  SpectralField f(g);
  for (int k1 = -g.n / 2 + 1; k1 < g.n / 2; ++k1)
    for (int k2 = -g.n / 2 + 1; k2 < g.n / 2; ++k2) {
      if (k1 < 0 || (k1 == 0 && k2 <= 0)) continue;
      double r = std::hypot(double(k1), double(k2));
      if (r > kc) continue;
      double taper = smoothstep(0.5 * r);
      if (taper == 0.0) continue;
      double th = kTwoPi * uniform53_at(seed, mode_counter(k1, k2));
      cplx c = std::polar(amp * std::pow(r, -1.0 - s) * taper, th);
      f.coeff(k1, k2) = c;
      f.coeff(-k1, -k2) = std::conj(c);
    }
  f.coeff(0, 1) += 0.5;
  f.coeff(0, -1) += 0.5;
  return f;
}

}  // namespace

TEST_CASE("chi cutoff profile") {
  ChiCutoff chi = ChiCutoff::standard();
  CHECK(chi(0.5) == 0.0);
  CHECK(chi(1.0) == 0.0);
  CHECK(chi(2.0) == 0.0);
  CHECK(chi(8.0) == 0.0);
  CHECK(chi(4.0) == doctest::Approx(1.0));
  for (double r = 0.0; r <= 10.0; r += 0.05) {
    CHECK(chi(r) >= 0.0);
    CHECK(chi(r) <= 1.0);
  }
  CHECK_THROWS_AS(ChiCutoff(0.5, 4.0), std::invalid_argument);
  CHECK_THROWS_AS(ChiCutoff(2.0, 1.5), std::invalid_argument);

  // scaled lattice finite differences of chi(eps |xi|) converge to the
  // continuum derivative bound once the transition is resolved
  double prev = 0.0;
  for (int e : {4, 5, 6}) {
    double scale = std::ldexp(1.0, -e);
    double worst = 0.0;
    for (int r = 0; r <= 9 << e; ++r) {
      double d4 = 0.0;
      for (int j = 0; j <= 4; ++j) {
        double binom = (j == 0 || j == 4) ? 1.0 : (j == 2 ? 6.0 : 4.0);
        double sign = (j % 2 == 0) ? 1.0 : -1.0;
        d4 += sign * binom * chi(scale * (r + j));
      }
      worst = std::max(worst, std::abs(d4) / std::pow(scale, 4.0));
    }
    CHECK(worst < 1e4);
    if (prev > 0.0) {
      CHECK(worst / prev < 2.5);
      CHECK(prev / worst < 2.5);
    }
    prev = worst;
  }
}

TEST_CASE("semiclassical pairing: compact spectrum, high-pass bracket, polarization") {
  Grid2D g(128);
  DyadicPartition part(g);
  AdmissibleCutoff cutoff = AdmissibleCutoff::make(2.0, 1.0);
  SymbolRep one = SymbolRep::constant_one(g);

  // band-limited u: pairing dies once the dilated cutoff passes the band
  SpectralField ub = random_spectral(g, 7, 1.2, 16);  // modes below 8
  CHECK(semiclassical_pairing(part, one, 3, ub, ub, cutoff) == 0.0);

  // a = 1 on broadband data: bracketed by tail masses at the dilated cutoffs
  SpectralField u = power_spectral(g, 11, 1.5);
  TailProfile tail = tail_profile(u);
  for (int e = 0; e <= 2; ++e) {
    double p = semiclassical_pairing(part, one, e, u, u, cutoff);
    double lo = tail.value_at_exp(e + cutoff.n0);
    double hi = tail.value_at_exp(e + cutoff.n0 - 2);
    CHECK(p >= lo * lo * (1.0 - 1e-12));
    CHECK(p <= hi * hi * (1.0 + 1e-12));
  }

  // polarization identity for the sesquilinear pairing
  SpectralField v = random_spectral(g, 13, 1.3);
  SymbolRep sym = SymbolRep::from_multiplier(
      g, [](double kx, double ky) { return cplx(std::hypot(kx, ky)); }, 1.0);
  auto s = [&](const SpectralField& a, const SpectralField& b) {
    return semiclassical_pairing_complex(part, sym, 1, a, b, cutoff);
  };
  SpectralField upv = u, umv = u;
  upv += v;
  umv -= v;
  SpectralField iv = v;
  iv *= 1.0;  // i * v via coefficient rotation
  for (auto& z : iv.data()) z *= cplx(0.0, 1.0);
  SpectralField upiv = u, umiv = u;
  upiv += iv;
  umiv -= iv;
  cplx four = 0.25 * (s(upv, upv) - s(umv, umv) +
                      cplx(0.0, 1.0) * (s(upiv, upiv) - s(umiv, umiv)));
  cplx direct = s(u, v);
  double quad_scale = std::abs(s(upv, upv)) + std::abs(s(umv, umv)) +
                      std::abs(s(upiv, upiv)) + std::abs(s(umiv, umiv));
  CHECK(std::abs(four - direct) <= 1e-12 * quad_scale);

  CHECK_THROWS_WITH_AS(
      (void)semiclassical_pairing(part, one, 8, u, u, cutoff),
      "unresolved semiclassical scale", std::invalid_argument);
}

TEST_CASE("rate check: principal exponent and subprincipal gains") {
  Grid2D g(256);
  DyadicPartition part(g);
  AdmissibleCutoff cutoff = AdmissibleCutoff::make(2.0, 1.0);
  double s = 1.5;
  SpectralField u = power_spectral(g, 7, s);

  SymbolRep one = SymbolRep::constant_one(g);
  RateFit principal = rate_check(part, one, u, u, 0, 3, cutoff, cutoff.n0 - 2);
  CHECK(principal.exponent == doctest::Approx(2.0 * s).epsilon(0.2 / (2 * s)));
  CHECK(principal.envelope > 0.0);
  CHECK(principal.envelope < 100.0);

  ChiCutoff chi(1.0, 2.0);
  // true order -1 part: one extra power of eps
  RateFit sub1 = subprincipal_rate_check(
      part,
      [](double kx, double ky) { return cplx(1.0 / std::sqrt(1.0 + kx * kx + ky * ky)); },
      -1.0, chi, u, u, 3, 6, cutoff, 0);
  CHECK(std::abs(sub1.exponent - 2.0 * s - 1.0) <= 0.15);

  // order -1/2 part: half an extra power
  RateFit subh = subprincipal_rate_check(
      part,
      [](double kx, double ky) {
        return cplx(std::pow(1.0 + kx * kx + ky * ky, -0.25));
      },
      -0.5, chi, u, u, 3, 6, cutoff, 0);
  CHECK(std::abs(subh.exponent - 2.0 * s - 0.5) <= 0.15);

  // sqrt(1+|xi|^2)/|xi| - 1 is order -2: two extra powers
  RateFit sub2 = subprincipal_rate_check(
      part,
      [](double kx, double ky) {
        double r = std::hypot(kx, ky);
        return cplx(std::sqrt(1.0 + r * r) / r - 1.0);
      },
      -2.0, chi, u, u, 3, 6, cutoff, 0);
  CHECK(std::abs(sub2.exponent - 2.0 * s - 2.0) <= 0.25);

  // envelope stability under grid refinement
  Grid2D g2(128);
  DyadicPartition part2(g2);
  SpectralField u2 = power_spectral(g2, 7, s);
  RateFit p2 = rate_check(part2, SymbolRep::constant_one(g2), u2, u2, 0, 2,
                          cutoff, cutoff.n0 - 2);
  CHECK(std::abs(std::log2(principal.envelope / p2.envelope)) < 1.0);

  // band-limited second slot: zero pairing for small eps
  SpectralField vb = random_spectral(g, 5, 1.0, 32);  // modes below 8
  SpectralField cu = chi_filter(u, chi, 5);
  SpectralField cv = chi_filter(vb, chi, 5);
  CHECK(l2_inner(paradiff_apply(part, one, cu, cutoff, 0), cv) == 0.0);

  SpectralField narrow = random_spectral(g, 9, 1.0, 64);
  CHECK_THROWS_WITH_AS((void)rate_check(part, one, narrow, narrow, 0, 3, cutoff, 2),
                       "rate check: insufficient dynamic range",
                       std::invalid_argument);
}

TEST_CASE("lyapunov pairing at t = 0 and for the frozen shear map") {
  Grid2D g(128);
  DyadicPartition part(g);
  AdmissibleCutoff cutoff = AdmissibleCutoff::make(2.0, 1.0);
  ChiCutoff chi(1.0, 4.0 / 3.0);
  SpectralField omega0 = cascade_data(g, 2.5, 0.05, 7);

  FlowMapState id = FlowMapState::identity(g);
  LyapunovPairing p0 = lyapunov_pairing(part, id, omega0, chi, 3, cutoff, 2.0, 32);
  CHECK(p0.W == 0.0);
  SpectralField w = chi_filter(omega0, chi, 3);
  double want = l2_norm(w) * l2_norm(w);
  CHECK(p0.P == doctest::Approx(want).epsilon(1e-12));
  CHECK(p0.truncation_mass < 1e-12);

  // frozen shear at t = 1: P agrees across angular resolutions within the
  // reported truncation masses
  VectorField shear = biot_savart(
      spectral_from(g, [](double, double y) { return std::cos(y); }));
  FlowMapState flow = FlowMapState::identity(g);
  InterpConfig icfg;
  for (int i = 0; i < 500; ++i) flow_step(flow, shear, 2e-3, icfg);
  LyapunovPairing p32 = lyapunov_pairing(part, flow, omega0, chi, 4, cutoff, 2.0, 32);
  LyapunovPairing p64 = lyapunov_pairing(part, flow, omega0, chi, 4, cutoff, 2.0, 64);
  CHECK(p32.truncation_mass < 1e-3);
  CHECK(std::abs(p32.P - p64.P) / p64.P <
        10.0 * (p32.truncation_mass + p64.truncation_mass) + 1e-9);
  CHECK(p32.W == doctest::Approx(p64.W));  // W has no angular expansion
}

TEST_CASE("dW/dt at t = 0 matches the squared-norm production term") {
  Grid2D g(128);
  DyadicPartition part(g);
  AdmissibleCutoff cutoff = AdmissibleCutoff::make(2.0, 1.0);
  ChiCutoff chi(1.0, 4.0 / 3.0);
  const int e = 3;
  const double dt = 1e-3;

  SolverState state;
  state.omega_hat = cascade_data(g, 2.5, 0.05, 7);
  state.dealias = true;
  dealias_mask(state.omega_hat);
  SpectralField omega0 = state.omega_hat;
  FlowMapState flow = FlowMapState::identity(g);
  InterpConfig icfg;
  icfg.oversample = 2;

  SpectralField w = chi_filter(omega0, chi, e);
  double P0 = l2_norm(w) * l2_norm(w);

  auto W_of = [&](const FlowMapState& f) {
    SpectralField F = lyapunov_field(part, f, cutoff, 2.0);
    return l2_inner(chi_filter(F, chi, e), w);
  };

  std::vector<double> W{W_of(flow)};
  for (int i = 0; i < 2; ++i) {
    SpectralField omega_mid;
    step_rk4(state, dt, &omega_mid);
    flow_step(flow, velocity_of(omega_mid, 2.0), dt, icfg);
    W.push_back(W_of(flow));
  }
  CHECK(W[0] == 0.0);
  // one-sided second-order stencil using W(0) = 0
  double dwdt = (4.0 * W[1] - W[2]) / (2.0 * dt);
  CHECK(std::abs(dwdt - P0) <= 0.25 * P0);
}

TEST_CASE("cascade report on a short run") {
  Grid2D g(128);
  CascadeConfig cc;
  cc.t_end = 0.3;
  cc.dt = 1e-3;
  cc.alpha = 2.0;
  cc.s = 2.5;
  cc.delta = 0.1;
  cc.eps_lo_exp = 3;
  cc.eps_hi_exp = 4;
  cc.n_theta = 32;
  cc.w_stride = 25;
  cc.p_stride = 100;
  cc.cutoff = AdmissibleCutoff::make(2.0, 1.0);
  cc.chi = ChiCutoff(1.0, 4.0 / 3.0);
  cc.interp.oversample = 2;

  SpectralField omega0 = cascade_data(g, 2.5, 0.05, 7);
  AdaptedNormContext ctx = slow_varying_table(tail_profile(omega0));
  SolverState state;
  state.omega_hat = omega0;
  state.dealias = true;
  dealias_mask(state.omega_hat);

  CascadeResult res = cascade_report(state, cc, ctx);
  REQUIRE(!res.series.rows.empty());
  int expected_rows = (int(std::lround(cc.t_end / cc.dt)) / cc.p_stride + 1) * 2;
  CHECK(int(res.series.rows.size()) == expected_rows);
  for (const auto& row : res.series.rows) {
    CHECK(row.P >= 0.0);
    CHECK(std::isfinite(row.W));
    CHECK(std::isfinite(row.dWdt_fd));
    CHECK(row.bound > 0.0);
    CHECK(row.trusted);
  }
  CHECK(res.verdicts.monotone_ok);
  CHECK(res.verdicts.growth_bounded_below);
  CHECK(res.verdicts.trusted_fraction == 1.0);

  // lyapunov_value: zero at t = 0, positive once the flow has moved
  auto lv = lyapunov_value(res.series, ctx);
  REQUIRE(lv.size() >= 2);
  CHECK(lv.front().second == 0.0);
  CHECK(lv.back().second > 0.0);

  // gSQG at alpha arbitrarily close to 2 reproduces the Euler numbers
  SolverState state2;
  state2.omega_hat = omega0;
  state2.dealias = true;
  dealias_mask(state2.omega_hat);
  CascadeConfig cc2 = cc;
  cc2.alpha = std::nextafter(2.0, 1.0);
  CascadeResult res2 = cascade_report(state2, cc2, ctx);
  for (std::size_t i = 0; i < res.series.rows.size(); ++i) {
    CHECK(res2.series.rows[i].W ==
          doctest::Approx(res.series.rows[i].W).epsilon(1e-10));
    CHECK(res2.series.rows[i].P ==
          doctest::Approx(res.series.rows[i].P).epsilon(1e-10));
  }
}

TEST_CASE("growth inequality against the frozen-shear closed form") {
  // DPhi = [[1, -t cos y], [0, 1]]: sup spectral norm sigma(t) at cos y = 1
  auto sigma = [](double t) {
    double q = 2.0 + t * t;
    return std::sqrt(0.5 * (q + std::sqrt(q * q - 4.0)));
  };
  std::vector<GrowthSample> samples;
  const double T = 2.0;
  const int n = 2000;
  for (int i = 0; i <= n; ++i) {
    GrowthSample s;
    s.t = T * i / n;
    s.jac_sup = sigma(s.t);
    s.adapted_dphi = s.t;  // linear surrogate for the displacement norm
    samples.push_back(s);
  }
  GrowthCheckResult g = growth_inequality_check(samples);

  // fine-quadrature oracle for the integral side
  const int fine = 200000;
  double acc = 0.0;
  int probe = n / 2;
  double t_probe = samples[probe].t;
  for (int i = 0; i < fine; ++i) {
    double a = t_probe * i / fine, b = t_probe * (i + 1) / fine;
    acc += 0.5 * (b - a) * (1.0 / sigma(a) + 1.0 / sigma(b));
  }
  CHECK(g.rhs[probe] == doctest::Approx(acc).epsilon(1e-6));
  CHECK(g.lhs[probe] == doctest::Approx(sigma(t_probe) * t_probe).epsilon(1e-12));
  CHECK(g.ratio_min > 0.0);

  // the first ratio sample defines the reported minimum window
  CHECK(g.ratio[0] == 0.0);
  CHECK(g.ratio[1] > 0.0);
}

TEST_CASE("pairing series csv round trip") {
  PairingSeries series;
  series.dt = 1e-3;
  PairingRow r;
  r.t = 0.5;
  r.eps = 0.125;
  r.W = 1.25e-3;
  r.P = 2.5e-3;
  r.dWdt_fd = 2.4e-3;
  r.bound = 1e-4;
  r.dr_ref = 0.2;
  r.trusted = true;
  series.rows.push_back(r);
  write_pairing_csv("test_pairing.csv", series);
  FILE* fp = std::fopen("test_pairing.csv", "rb");
  REQUIRE(fp != nullptr);
  char header[128];
  REQUIRE(std::fgets(header, sizeof header, fp) != nullptr);
  CHECK(std::string(header) == "t,eps,W,P,dWdt_fd,bound,dr_ref,trusted\n");
  double t, eps, W, P, dwdt, bound, dr;
  int trusted;
  REQUIRE(std::fscanf(fp, "%lf,%lf,%lf,%lf,%lf,%lf,%lf,%d", &t, &eps, &W, &P,
                      &dwdt, &bound, &dr, &trusted) == 8);
  CHECK(W == r.W);
  CHECK(P == r.P);
  CHECK(trusted == 1);
  std::fclose(fp);
  std::remove("test_pairing.csv");
}
