#include "specflow/cascade.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace specflow {

namespace {

constexpr double kTailGuard = 1e-14;

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  int n = 0;
};

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  LineFit f;
  f.n = int(x.size());
  if (f.n < 2) return f;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (int i = 0; i < f.n; ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  double den = f.n * sxx - sx * sx;
  f.slope = (f.n * sxy - sx * sy) / den;
  f.intercept = (sy - f.slope * sx) / f.n;
  return f;
}

void require_tail_octaves(const TailProfile& p, int lo, int hi) {
  int usable = 0;
  for (int e = lo; e <= std::min(hi, p.max_exp()); ++e)
    if (p.value_at_exp(e) > kTailGuard * p.total) ++usable;
  if (usable < 4)
    throw std::invalid_argument("rate check: insufficient dynamic range");
}

}  // namespace

ChiCutoff::ChiCutoff(double inner, double outer) : r0(inner), r1(outer) {
  if (!(r0 >= 1.0)) throw std::invalid_argument("chi cutoff: inner radius must be >= 1");
  if (!(r1 > r0)) throw std::invalid_argument("chi cutoff: outer radius must exceed inner");
}

double ChiCutoff::operator()(double r) const {
  double g = std::pow(r1 / r0, 0.25);
  double rise = smoothstep((r - r0) / (r0 * g - r0));
  double fall = 1.0 - smoothstep((r - r1 / g) / (r1 - r1 / g));
  return rise * fall;
}

SpectralField chi_filter(const SpectralField& f, const ChiCutoff& chi, int eps_exp) {
  return radial_filter(
      f, [&chi](double r) { return chi(r); }, eps_exp);
}

double semiclassical_pairing(const DyadicPartition& part, const SymbolRep& a,
                             int eps_exp, const SpectralField& u,
                             const SpectralField& v, const AdmissibleCutoff& cutoff) {
  return l2_inner(paradiff_apply(part, a, u, cutoff, eps_exp), v);
}

cplx semiclassical_pairing_complex(const DyadicPartition& part, const SymbolRep& a,
                                   int eps_exp, const SpectralField& u,
                                   const SpectralField& v,
                                   const AdmissibleCutoff& cutoff) {
  return l2_inner_complex(paradiff_apply(part, a, u, cutoff, eps_exp), v);
}

RateFit rate_check(const DyadicPartition& part, const SymbolRep& a,
                   const SpectralField& u, const SpectralField& v,
                   int eps_lo_exp, int eps_hi_exp, const AdmissibleCutoff& cutoff,
                   int kappa_exp) {
  TailProfile pu = tail_profile(u), pv = tail_profile(v);
  require_tail_octaves(pu, eps_lo_exp, eps_hi_exp + kappa_exp);
  require_tail_octaves(pv, eps_lo_exp, eps_hi_exp + kappa_exp);
  double M = symbol_seminorm(a, u.grid(), a.order, 0, 2);
  RateFit fit;
  std::vector<double> xs, ys;
  for (int e = eps_lo_exp; e <= eps_hi_exp; ++e) {
    double p = std::abs(semiclassical_pairing(part, a, e, u, v, cutoff));
    double du = pu.value_at_exp(std::min(e + kappa_exp, pu.max_exp()));
    double dv = pv.value_at_exp(std::min(e + kappa_exp, pv.max_exp()));
    if (du > kTailGuard * pu.total && dv > kTailGuard * pv.total && M > 0.0)
      fit.envelope = std::max(fit.envelope, p / (M * du * dv));
    if (p > 0.0) {
      xs.push_back(-double(e));  // log2 eps
      ys.push_back(std::log2(p));
    }
  }
  LineFit lf = fit_line(xs, ys);
  fit.exponent = lf.slope;
  fit.points = lf.n;
  return fit;
}

RateFit subprincipal_rate_check(const DyadicPartition& part,
                                const std::function<cplx(double, double)>& m,
                                double sym_order, const ChiCutoff& chi,
                                const SpectralField& u, const SpectralField& v,
                                int eps_lo_exp, int eps_hi_exp,
                                const AdmissibleCutoff& cutoff, int kappa_exp) {
  TailProfile pu = tail_profile(u), pv = tail_profile(v);
  require_tail_octaves(pu, eps_lo_exp, eps_hi_exp + kappa_exp);
  SymbolRep a = SymbolRep::from_multiplier(u.grid(), m, sym_order);
  double M = symbol_seminorm(a, u.grid(), sym_order, 0, 2);
  RateFit fit;
  std::vector<double> xs, ys;
  for (int e = eps_lo_exp; e <= eps_hi_exp; ++e) {
    SpectralField cu = chi_filter(u, chi, e);
    SpectralField cv = chi_filter(v, chi, e);
    double p = std::abs(l2_inner(paradiff_apply(part, a, cu, cutoff, 0), cv));
    double du = pu.value_at_exp(std::min(e + kappa_exp, pu.max_exp()));
    double dv = pv.value_at_exp(std::min(e + kappa_exp, pv.max_exp()));
    if (du > kTailGuard * pu.total && dv > kTailGuard * pv.total && M > 0.0)
      fit.envelope = std::max(fit.envelope, p / (M * du * dv));
    if (p > 0.0) {
      xs.push_back(-double(e));
      ys.push_back(std::log2(p));
    }
  }
  LineFit lf = fit_line(xs, ys);
  fit.exponent = lf.slope;
  fit.points = lf.n;
  return fit;
}

double residual_exponent(double s, double delta, double alpha) {
  return std::min({s + alpha - 3.0 - delta, 1.0, alpha - 1.0});
}

SpectralField lyapunov_field(const DyadicPartition& part, const FlowMapState& flow,
                             const AdmissibleCutoff& cutoff, double alpha) {
  const Grid2D& g = flow.d1.grid();
  SpectralField d1 = forward(flow.d1), d2 = forward(flow.d2);
  SpectralField A11 = forward(flow.inv_jac.a11), A12 = forward(flow.inv_jac.a12);
  SpectralField A21 = forward(flow.inv_jac.a21), A22 = forward(flow.inv_jac.a22);
  ProductAccumulator acc1(g), acc2(g);
  const int n0 = cutoff.n0;
  for (int q = n0; q <= part.kmax(); ++q) {
    bool has1 = part.block_l2(d1, q) != 0.0;
    bool has2 = part.block_l2(d2, q) != 0.0;
    if (!has1 && !has2) continue;
    int cap = q - n0;
    auto l11 = ProductAccumulator::pad_to_physical(part.lowpass(A11, cap));
    auto l12 = ProductAccumulator::pad_to_physical(part.lowpass(A12, cap));
    auto l21 = ProductAccumulator::pad_to_physical(part.lowpass(A21, cap));
    auto l22 = ProductAccumulator::pad_to_physical(part.lowpass(A22, cap));
    if (has1) {
      auto b1 = ProductAccumulator::pad_to_physical(part.block(d1, q));
      acc1.add_padded(l11, b1);
      acc2.add_padded(l21, b1);
    }
    if (has2) {
      auto b2 = ProductAccumulator::pad_to_physical(part.block(d2, q));
      acc1.add_padded(l12, b2);
      acc2.add_padded(l22, b2);
    }
  }
  SpectralField v1 = acc1.finish(), v2 = acc2.finish();
  SpectralField F = derivative(v2, 1, 0);
  F -= derivative(v1, 0, 1);
  if (alpha != 2.0) {
    F = apply_multiplier(F, [&](double kx, double ky) {
      double r2 = kx * kx + ky * ky;
      return r2 == 0.0 ? cplx{} : cplx(std::pow(r2, 0.5 * (alpha - 2.0)));
    });
  }
  return F;
}

LyapunovPairing lyapunov_pairing(const DyadicPartition& part,
                                 const FlowMapState& flow,
                                 const SpectralField& omega0, const ChiCutoff& chi,
                                 int eps_exp, const AdmissibleCutoff& cutoff,
                                 double alpha, int n_theta) {
  LyapunovPairing out;
  SpectralField w = chi_filter(omega0, chi, eps_exp);
  SpectralField F = lyapunov_field(part, flow, cutoff, alpha);
  out.W = l2_inner(chi_filter(F, chi, eps_exp), w);
  SymbolRep a = flow_symbol(flow.inv_jac, 0.5 * alpha, n_theta);
  out.truncation_mass = a.truncation_mass;
  double nrm = l2_norm(paradiff_apply(part, a, w, cutoff, 0));
  out.P = nrm * nrm;
  return out;
}

CascadeResult cascade_report(SolverState state, const CascadeConfig& cfg,
                             const AdaptedNormContext& ctx) {
  const Grid2D& g = state.omega_hat.grid();
  DyadicPartition part(g);
  if (cfg.p_stride % cfg.w_stride != 0)
    throw std::invalid_argument("cascade: P cadence must be a multiple of the W cadence");
  cfl_check(state, cfg.dt);

  const SpectralField omega0 = state.omega_hat;
  const int elo = cfg.eps_lo_exp, ehi = cfg.eps_hi_exp;
  const int ne = ehi - elo + 1;
  const double rex = residual_exponent(cfg.s, cfg.delta, cfg.alpha);

  std::vector<SpectralField> chi_w0(ne);
  std::vector<double> dr_ref(ne), bound(ne);
  std::vector<bool> shell_ok(ne);
  for (int i = 0; i < ne; ++i) {
    int e = elo + i;
    chi_w0[i] = chi_filter(omega0, cfg.chi, e);
    dr_ref[i] = e <= ctx.reference.max_exp() ? ctx.reference.value_at_exp(e) : 0.0;
    bound[i] = std::pow(std::ldexp(1.0, -e), rex) * dr_ref[i] * dr_ref[i];
    shell_ok[i] = std::ldexp(1.0, e) < g.n / 3.0;
  }
  // a shell stays trusted while its flow-advected image remains resolved:
  // (1/eps) * ||DPhi_t|| < n/3 (the jacobian sup is how far composition with
  // the flow carries a frequency); at t = 0 this is the static shell rule
  auto shell_trusted_at = [&](int i, double jac_sup) {
    return shell_ok[i] && std::ldexp(jac_sup, elo + i) < g.n / 3.0;
  };

  FlowMapState flow = FlowMapState::identity(g);
  const long nsteps = std::lround(cfg.t_end / cfg.dt);

  std::vector<std::vector<double>> Wser(ne);
  std::vector<double> Wtimes;
  std::vector<bool> time_ok;
  CascadeResult result;
  result.series.dt = cfg.dt;
  bool trust_running = true;
  double interp_residual = 0.0;

  struct PSample {
    long wi;
    std::vector<double> P;
    double trunc = 0.0;
  };
  std::vector<PSample> psamples;

  auto sample_W = [&](long wi) {
    SpectralField F = lyapunov_field(part, flow, cfg.cutoff, cfg.alpha);
    for (int i = 0; i < ne; ++i)
      Wser[i].push_back(l2_inner(chi_filter(F, cfg.chi, elo + i), chi_w0[i]));
    Wtimes.push_back(state.t);

    GrowthSample gs;
    gs.t = state.t;
    gs.jac_sup = flow.jac_sup();
    gs.det_drift = flow.max_det_drift();
    gs.dealias_frac = spectral_blocking_fraction(state.omega_hat);
    Matrix2Field m = flow.jac;
    for (auto& v : m.a11.data()) v -= 1.0;
    for (auto& v : m.a22.data()) v -= 1.0;
    double best = 0.0;
    for (const PhysicalField* f : {&m.a11, &m.a12, &m.a21, &m.a22})
      best = std::max(best, adapted_norm(forward(*f), ctx));
    gs.adapted_dphi = best;
    VectorField u = velocity_of(state.omega_hat, cfg.alpha);
    double e1 = l2_norm(u.x), e2 = l2_norm(u.y);
    gs.energy = e1 * e1 + e2 * e2;
    double z = l2_norm(state.omega_hat);
    gs.enstrophy = z * z;
    gs.omega_max = linf_norm(inverse(state.omega_hat));
    gs.adapted_omega = adapted_norm(state.omega_hat, ctx);
    if (gs.dealias_frac >= 1e-6 || gs.det_drift >= 1e-3) trust_running = false;
    gs.trusted = trust_running;
    result.growth.push_back(gs);
    time_ok.push_back(trust_running);
    (void)wi;
  };

  auto sample_P = [&](long wi) {
    if (cfg.snapshot_hook) cfg.snapshot_hook(state, flow);
    PSample ps;
    ps.wi = wi;
    SymbolRep a = flow_symbol(flow.inv_jac, 0.5 * cfg.alpha, cfg.n_theta);
    ps.trunc = a.truncation_mass;
    if (a.truncation_mass > cfg.trunc_mass_threshold)
      throw std::runtime_error("cascade: symbol truncation mass above threshold");
    for (int i = 0; i < ne; ++i) {
      double nrm = l2_norm(paradiff_apply(part, a, chi_w0[i], cfg.cutoff, 0));
      ps.P.push_back(nrm * nrm);
    }
    psamples.push_back(std::move(ps));
  };

  sample_W(0);
  sample_P(0);
  for (long step = 1; step <= nsteps; ++step) {
    SpectralField omega_mid;
    step_rk4(state, cfg.dt, &omega_mid);
    VectorField u_mid = velocity_of(omega_mid, cfg.alpha);
    if (step % (cfg.p_stride * 4) == 0) {
      Interpolator probe(u_mid.x, cfg.interp);
      interp_residual =
          std::max(interp_residual, probe.residual_probe(u_mid.x, 4, 0xF10Dull));
    }
    flow_step(flow, u_mid, cfg.dt, cfg.interp);
    if (step % cfg.w_stride == 0) {
      sample_W(step / cfg.w_stride);
      if (step % cfg.p_stride == 0) sample_P(step / cfg.w_stride);
    }
  }

  // finite-difference dW/dt on the dense W grid at the P sample indices
  const double hw = cfg.w_stride * cfg.dt;
  auto dwdt_at = [&](int i, long wi) {
    const auto& W = Wser[i];
    long last = long(W.size()) - 1;
    if (wi >= 2 && wi + 2 <= last)
      return (-W[wi + 2] + 8.0 * W[wi + 1] - 8.0 * W[wi - 1] + W[wi - 2]) /
             (12.0 * hw);
    if (wi + 4 <= last)  // one-sided, O(h^4)
      return (-25.0 * W[wi] + 48.0 * W[wi + 1] - 36.0 * W[wi + 2] +
              16.0 * W[wi + 3] - 3.0 * W[wi + 4]) /
             (12.0 * hw);
    return (25.0 * W[wi] - 48.0 * W[wi - 1] + 36.0 * W[wi - 2] -
            16.0 * W[wi - 3] + 3.0 * W[wi - 4]) /
           (12.0 * hw);
  };

  for (const auto& ps : psamples) {
    result.series.symbol_truncation_mass =
        std::max(result.series.symbol_truncation_mass, ps.trunc);
    for (int i = 0; i < ne; ++i) {
      PairingRow row;
      row.t = Wtimes[ps.wi];
      row.eps = std::ldexp(1.0, -(elo + i));
      row.W = Wser[i][ps.wi];
      row.P = ps.P[i];
      row.dWdt_fd = dwdt_at(i, ps.wi);
      row.bound = bound[i];
      row.dr_ref = dr_ref[i];
      row.trusted =
          time_ok[ps.wi] && shell_trusted_at(i, result.growth[ps.wi].jac_sup);
      result.series.rows.push_back(row);
    }
  }
  result.series.interp_residual = interp_residual;

  // ---- verdicts -------------------------------------------------------------
  CascadeVerdicts& v = result.verdicts;
  v.required_slope = rex - 0.2;
  std::vector<double> xs, ys;
  v.kappa.assign(ne, 0.0);
  for (int i = 0; i < ne; ++i) {
    double maxres = 0.0;
    for (const auto& ps : psamples) {
      if (ps.wi < 2 || ps.wi + 2 >= long(Wser[i].size())) continue;
      if (!(time_ok[ps.wi] &&
            shell_trusted_at(i, result.growth[ps.wi].jac_sup)))
        continue;
      maxres = std::max(maxres, std::abs(dwdt_at(i, ps.wi) - ps.P[i]));
    }
    if (bound[i] > 0.0) v.kappa[i] = maxres / bound[i];
    if (maxres > 0.0 && dr_ref[i] > 0.0) {
      xs.push_back(-double(elo + i));
      ys.push_back(std::log2(maxres / (dr_ref[i] * dr_ref[i])));
    }
  }
  LineFit lf = fit_line(xs, ys);
  v.residual_slope = lf.slope;
  // an identically-zero residual series (steady data) passes vacuously
  v.residual_slope_ok =
      (lf.n >= 3 && lf.slope >= v.required_slope) || xs.empty();
  for (int i = 0; i + 1 < ne; ++i) {
    if (v.kappa[i] <= 0.0 || v.kappa[i + 1] <= 0.0) continue;
    double r = std::max(v.kappa[i] / v.kappa[i + 1], v.kappa[i + 1] / v.kappa[i]);
    v.kappa_adjacent_ratio_max = std::max(v.kappa_adjacent_ratio_max, r);
  }

  v.monotone_violations = 0;
  for (int i = 0; i < ne; ++i) {
    if (!shell_ok[i]) continue;
    double wmax = 0.0;
    for (double w : Wser[i]) wmax = std::max(wmax, std::abs(w));
    double tol = std::max(v.kappa[i], 0.5) * bound[i] * hw + 1e-13 * wmax;
    for (std::size_t j = 1; j < Wser[i].size(); ++j) {
      if (!time_ok[j] || !shell_trusted_at(i, result.growth[j].jac_sup)) break;
      if (Wser[i][j] - Wser[i][j - 1] < -tol) ++v.monotone_violations;
    }
  }
  v.monotone_ok = v.monotone_violations == 0;

  std::vector<double> lt, lv;
  for (std::size_t j = 0; j < Wtimes.size(); ++j) {
    if (!time_ok[j]) break;
    double best = 0.0;
    bool any = false;
    for (int i = 0; i < ne; ++i) {
      if (!shell_trusted_at(i, result.growth[j].jac_sup) ||
          dr_ref[i] <= kTailGuard * ctx.reference.total)
        continue;
      best = std::max(best, Wser[i][j] / (dr_ref[i] * dr_ref[i]));
      any = true;
    }
    if (any) {
      lt.push_back(Wtimes[j]);
      lv.push_back(best);
    }
  }
  LineFit lyap = fit_line(lt, lv);
  v.lyapunov_slope = lyap.slope;
  double lyap_peak = 0.0;
  for (double val : lv) lyap_peak = std::max(lyap_peak, std::abs(val));
  v.lyapunov_positive = (lyap.n >= 3 && lyap.slope > 0.0) || lyap_peak == 0.0;

  GrowthCheckResult gc = growth_inequality_check(result.growth);
  v.growth_ratio_min = gc.ratio_min;
  v.growth_bounded_below = gc.ratio_min > 0.0;

  int trusted = 0;
  for (const auto& r : result.series.rows) trusted += r.trusted ? 1 : 0;
  v.trusted_fraction =
      result.series.rows.empty() ? 1.0 : double(trusted) / result.series.rows.size();
  return result;
}

std::vector<std::pair<double, double>> lyapunov_value(const PairingSeries& series,
                                                      const AdaptedNormContext& ctx) {
  std::vector<std::pair<double, double>> out;
  double guard = kTailGuard * ctx.reference.total;
  for (const auto& row : series.rows) {
    if (!row.trusted || row.dr_ref <= guard) continue;
    double val = row.W / (row.dr_ref * row.dr_ref);
    if (!out.empty() && out.back().first == row.t)
      out.back().second = std::max(out.back().second, val);
    else
      out.emplace_back(row.t, val);
  }
  return out;
}

GrowthCheckResult growth_inequality_check(const std::vector<GrowthSample>& growth) {
  GrowthCheckResult g;
  double acc = 0.0;
  for (std::size_t i = 0; i < growth.size(); ++i) {
    if (i > 0) {
      double h = growth[i].t - growth[i - 1].t;
      acc += 0.5 * h * (1.0 / growth[i].jac_sup + 1.0 / growth[i - 1].jac_sup);
    }
    g.t.push_back(growth[i].t);
    g.lhs.push_back(growth[i].jac_sup * growth[i].adapted_dphi);
    g.rhs.push_back(acc);
    g.ratio.push_back(acc > 0.0 ? g.lhs.back() / acc : 0.0);
  }
  g.ratio_min = 0.0;
  for (std::size_t i = 1; i < g.ratio.size(); ++i)
    g.ratio_min = i == 1 ? g.ratio[i] : std::min(g.ratio_min, g.ratio[i]);
  return g;
}

void write_pairing_csv(const std::string& path, const PairingSeries& series) {
  FILE* fp = std::fopen(path.c_str(), "wb");
  if (!fp) throw std::runtime_error("cannot open " + path + " for writing");
  std::fprintf(fp, "t,eps,W,P,dWdt_fd,bound,dr_ref,trusted\n");
  for (const auto& r : series.rows)
    std::fprintf(fp, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%d\n", r.t, r.eps,
                 r.W, r.P, r.dWdt_fd, r.bound, r.dr_ref, r.trusted ? 1 : 0);
  std::fclose(fp);
}

void write_verdicts(const std::string& path, const CascadeVerdicts& v,
                    const PairingSeries& series) {
  FILE* fp = std::fopen(path.c_str(), "wb");
  if (!fp) throw std::runtime_error("cannot open " + path + " for writing");
  std::fprintf(fp, "residual_slope = %.6g\n", v.residual_slope);
  std::fprintf(fp, "required_slope = %.6g\n", v.required_slope);
  std::fprintf(fp, "residual_slope_ok = %d\n", v.residual_slope_ok ? 1 : 0);
  for (std::size_t i = 0; i < v.kappa.size(); ++i)
    std::fprintf(fp, "kappa_%zu = %.6g\n", i, v.kappa[i]);
  std::fprintf(fp, "kappa_adjacent_ratio_max = %.6g\n", v.kappa_adjacent_ratio_max);
  std::fprintf(fp, "monotone_ok = %d\n", v.monotone_ok ? 1 : 0);
  std::fprintf(fp, "monotone_violations = %d\n", v.monotone_violations);
  std::fprintf(fp, "lyapunov_slope = %.6g\n", v.lyapunov_slope);
  std::fprintf(fp, "lyapunov_positive = %d\n", v.lyapunov_positive ? 1 : 0);
  std::fprintf(fp, "growth_ratio_min = %.6g\n", v.growth_ratio_min);
  std::fprintf(fp, "growth_bounded_below = %d\n", v.growth_bounded_below ? 1 : 0);
  std::fprintf(fp, "trusted_fraction = %.6g\n", v.trusted_fraction);
  std::fprintf(fp, "symbol_truncation_mass = %.6g\n", series.symbol_truncation_mass);
  std::fprintf(fp, "interp_residual = %.6g\n", series.interp_residual);
  std::fclose(fp);
}

}  // namespace specflow
