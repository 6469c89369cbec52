#include "specflow/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "specflow/rng.hpp"

namespace specflow {

namespace {

namespace fs = std::filesystem;

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos;
    double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (...) {
    throw std::invalid_argument("config: bad numeric value for " + key);
  }
}

long parse_long(const std::string& key, const std::string& v) {
  try {
    std::size_t pos;
    long x = std::stol(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (...) {
    throw std::invalid_argument("config: bad integer value for " + key);
  }
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw std::invalid_argument("config: bad boolean value for " + key);
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
  try {
    std::size_t pos;
    std::uint64_t x = std::stoull(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (...) {
    throw std::invalid_argument("config: bad unsigned value for " + key);
  }
}

double timer_seconds(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

void RunConfig::apply_kv(const std::string& key, const std::string& value) {
  if (key == "grid.n") grid_n = int(parse_long(key, value));
  else if (key == "grid.L") grid_L = parse_double(key, value);
  else if (key == "solver.dt") solver_dt = parse_double(key, value);
  else if (key == "solver.t_end") solver_t_end = parse_double(key, value);
  else if (key == "solver.alpha") solver_alpha = parse_double(key, value);
  else if (key == "solver.dealias") solver_dealias = parse_bool(key, value);
  else if (key == "data.kind") data_kind = value;
  else if (key == "data.s") data_s = parse_double(key, value);
  else if (key == "data.seed") data_seed = parse_u64(key, value);
  else if (key == "data.amplitude") data_amplitude = parse_double(key, value);
  else if (key == "para.B") para_B = parse_double(key, value);
  else if (key == "para.b") para_b = parse_double(key, value);
  else if (key == "para.N0") para_N0 = int(parse_long(key, value));
  else if (key == "para.n_theta") para_n_theta = int(parse_long(key, value));
  else if (key == "para.oversample") para_oversample = int(parse_long(key, value));
  else if (key == "diag.eps_min_exp") diag_eps_min_exp = int(parse_long(key, value));
  else if (key == "diag.eps_max_exp") diag_eps_max_exp = int(parse_long(key, value));
  else if (key == "diag.chi_inner") diag_chi_inner = parse_double(key, value);
  else if (key == "diag.chi_outer") diag_chi_outer = parse_double(key, value);
  else if (key == "diag.delta") diag_delta = parse_double(key, value);
  else if (key == "io.outdir") io_outdir = value;
  else if (key == "io.snapshot_every") io_snapshot_every = parse_double(key, value);
  else throw std::invalid_argument("config: unknown key " + key);
}

void RunConfig::validate() const {
  auto fail = [](const std::string& key, const std::string& what) {
    throw std::invalid_argument("config: " + key + " " + what);
  };
  if (grid_n < 16 || grid_n > 4096 || (grid_n & (grid_n - 1)) != 0)
    fail("grid.n", "must be a power of two in [16, 4096]");
  if (!(grid_L > 0.0)) fail("grid.L", "must be positive");
  if (!(solver_dt > 0.0)) fail("solver.dt", "must be positive");
  if (!(solver_t_end >= 0.0)) fail("solver.t_end", "must be >= 0");
  if (!(solver_alpha > 1.0 && solver_alpha <= 2.0))
    fail("solver.alpha", "must be in (1, 2]");
  if (data_kind != "powerlaw" && data_kind != "shear_plus_powerlaw" &&
      data_kind != "bandlimited" && data_kind != "file")
    fail("data.kind", "must be powerlaw, shear_plus_powerlaw, bandlimited or file");
  if (!(data_s > 1.0 && data_s <= 4.0)) fail("data.s", "must be in (1, 4]");
  if (!(data_amplitude >= 0.0)) fail("data.amplitude", "must be >= 0");
  if (!(para_B > 1.0)) fail("para.B", "must be > 1");
  if (!(para_b > 0.0)) fail("para.b", "must be > 0");
  if (para_N0 != 0 && (para_N0 < 2 || para_N0 > 8))
    fail("para.N0", "must be 0 (derived) or in [2, 8]");
  if (para_n_theta != 8 && para_n_theta != 16 && para_n_theta != 32 &&
      para_n_theta != 64)
    fail("para.n_theta", "must be one of 8, 16, 32, 64");
  if (para_oversample < 2 || para_oversample > 8)
    fail("para.oversample", "must be in [2, 8]");
  if (diag_eps_min_exp < 0 || diag_eps_min_exp > diag_eps_max_exp ||
      diag_eps_max_exp > 16)
    fail("diag.eps_min_exp", "must satisfy 0 <= min <= max <= 16");
  if (!(diag_chi_inner >= 1.0)) fail("diag.chi_inner", "must be >= 1");
  if (!(diag_chi_outer > diag_chi_inner)) fail("diag.chi_outer", "must exceed diag.chi_inner");
  if (!(diag_delta > 0.0 && diag_delta < 1.0)) fail("diag.delta", "must be in (0, 1)");
  if (io_outdir.empty()) fail("io.outdir", "must be non-empty");
  if (!(io_snapshot_every > 0.0)) fail("io.snapshot_every", "must be positive");
}

std::string RunConfig::to_text() const {
  std::ostringstream os;
  os << "grid.n = " << grid_n << "\n";
  os << "grid.L = " << grid_L << "\n";
  os << "solver.dt = " << solver_dt << "\n";
  os << "solver.t_end = " << solver_t_end << "\n";
  os << "solver.alpha = " << solver_alpha << "\n";
  os << "solver.dealias = " << (solver_dealias ? "true" : "false") << "\n";
  os << "data.kind = " << data_kind << "\n";
  os << "data.s = " << data_s << "\n";
  os << "data.seed = " << data_seed << "\n";
  os << "data.amplitude = " << data_amplitude << "\n";
  os << "para.B = " << para_B << "\n";
  os << "para.b = " << para_b << "\n";
  os << "para.N0 = " << para_N0 << "\n";
  os << "para.n_theta = " << para_n_theta << "\n";
  os << "para.oversample = " << para_oversample << "\n";
  os << "diag.eps_min_exp = " << diag_eps_min_exp << "\n";
  os << "diag.eps_max_exp = " << diag_eps_max_exp << "\n";
  os << "diag.chi_inner = " << diag_chi_inner << "\n";
  os << "diag.chi_outer = " << diag_chi_outer << "\n";
  os << "diag.delta = " << diag_delta << "\n";
  os << "io.outdir = " << io_outdir << "\n";
  os << "io.snapshot_every = " << io_snapshot_every << "\n";
  return os.str();
}

RunConfig RunConfig::from_file(const std::string& path) {
  RunConfig cfg;
  cfg.merge_file(path);
  return cfg;
}

void RunConfig::merge_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file " + path);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    std::size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config: missing '=' at " + path + ":" +
                                  std::to_string(lineno));
    apply_kv(trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
  }
}

RunConfig RunConfig::preset(const std::string& name) {
  RunConfig cfg;
  if (name == "cascade-default") {
    cfg.grid_n = 256;
    cfg.solver_dt = 1e-3;
    cfg.solver_t_end = 2.0;
    cfg.data_kind = "shear_plus_powerlaw";
    cfg.data_s = 2.5;
    cfg.data_seed = 7;
    cfg.data_amplitude = 0.05;
    cfg.para_B = 2.0;
    cfg.para_n_theta = 64;   // shear jacobians up to t = 2 need the deep tail
    cfg.para_oversample = 3; // keeps velocity interpolation noise below the
                             // smallest diagnostic shell's signal
    cfg.diag_eps_min_exp = 3;
    cfg.diag_eps_max_exp = 6;
    cfg.diag_chi_inner = 1.0;
    cfg.diag_chi_outer = 4.0 / 3.0;
    cfg.io_outdir = "out/cascade-default";
  } else if (name == "steady-shear") {
    cfg.grid_n = 128;
    cfg.solver_dt = 1e-3;
    cfg.solver_t_end = 1.0;
    cfg.data_kind = "shear_plus_powerlaw";
    cfg.data_amplitude = 0.0;
    cfg.data_seed = 7;
    cfg.para_B = 2.0;
    cfg.para_oversample = 2;
    cfg.diag_eps_min_exp = 3;
    cfg.diag_eps_max_exp = 5;
    cfg.diag_chi_inner = 1.0;
    cfg.diag_chi_outer = 4.0 / 3.0;
    cfg.io_outdir = "out/steady-shear";
  } else if (name == "rates-default") {
    cfg.grid_n = 256;
    cfg.solver_dealias = false;
    cfg.data_kind = "powerlaw";
    cfg.data_s = 1.5;
    cfg.data_seed = 7;
    cfg.data_amplitude = 1.0;
    cfg.para_B = 2.0;
    cfg.diag_eps_min_exp = 3;
    cfg.diag_eps_max_exp = 6;
    cfg.diag_chi_inner = 1.0;
    cfg.diag_chi_outer = 2.0;
    cfg.io_outdir = "out/rates-default";
  } else {
    throw std::invalid_argument("unknown preset " + name);
  }
  return cfg;
}

AdmissibleCutoff RunConfig::cutoff() const {
  AdmissibleCutoff c = AdmissibleCutoff::make(para_B, para_b);
  if (para_N0 != 0) c.n0 = para_N0;
  return c;
}

ChiCutoff RunConfig::chi() const { return ChiCutoff(diag_chi_inner, diag_chi_outer); }

InterpConfig RunConfig::interp() const {
  InterpConfig ic;
  ic.oversample = para_oversample;
  return ic;
}

// ---- initial data -----------------------------------------------------------

double fit_tail_exponent(const TailProfile& p, int e_lo, int e_hi) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (int e = e_lo; e <= std::min(e_hi, p.max_exp()); ++e) {
    double d = p.value_at_exp(e);
    if (d <= 1e-14 * p.total) continue;
    double x = -double(e);  // log2 eps
    double y = std::log2(d);
    sx += x; sy += y; sxx += x * x; sxy += x * y;
    ++n;
  }
  if (n < 2) throw std::invalid_argument("tail exponent fit: insufficient dynamic range");
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

GeneratedData generate_initial_data(const DataSpec& spec, const Grid2D& grid) {
  const int n = grid.n;
  const int kc = spec.band_limit > 0 ? spec.band_limit : n / 2 - 1;
  if (spec.s <= 1.0 || spec.s > 4.0)
    throw std::invalid_argument("generate_initial_data: s must be in (1, 4]");
  if (kc < 16)
    throw std::invalid_argument("generate_initial_data: band limit too small for grid");

  GeneratedData out;
  out.omega0 = SpectralField(grid);

  if (spec.kind == "file") {
    out.omega0 = forward(read_pcf1(spec.file_path));
  } else if (spec.kind == "bandlimited") {
    // annulus 8 <= |k| <= 16 with unit profile and seeded phases
    for (int k1 = -n / 2 + 1; k1 < n / 2; ++k1)
      for (int k2 = -n / 2 + 1; k2 < n / 2; ++k2) {
        if (k1 < 0 || (k1 == 0 && k2 <= 0)) continue;
        double r = std::hypot(double(k1), double(k2));
        if (r < 8.0 || r > 16.0) continue;
        double th = kTwoPi * uniform53_at(spec.seed, mode_counter(k1, k2));
        cplx c = spec.amplitude * std::polar(1.0 / r, th);
        out.omega0.coeff(k1, k2) = c;
        out.omega0.coeff(-k1, -k2) = std::conj(c);
      }
  } else {
    for (int k1 = -n / 2 + 1; k1 < n / 2; ++k1)
      for (int k2 = -n / 2 + 1; k2 < n / 2; ++k2) {
        if (k1 < 0 || (k1 == 0 && k2 <= 0)) continue;
        double r = std::hypot(double(k1), double(k2));
        if (r > kc) continue;  // hard band cut: the tail stays a clean power
                               // law through the top resolved shell
        double taper = smoothstep(0.5 * r);
        if (taper == 0.0) continue;
        double amp = spec.amplitude * std::pow(r, -1.0 - spec.s) * taper;
        double th = kTwoPi * uniform53_at(spec.seed, mode_counter(k1, k2));
        cplx c = std::polar(amp, th);
        out.omega0.coeff(k1, k2) = c;
        out.omega0.coeff(-k1, -k2) = std::conj(c);
      }
    if (spec.kind == "shear_plus_powerlaw") {
      out.omega0.coeff(0, 1) += 0.5;
      out.omega0.coeff(0, -1) += 0.5;
    }
  }
  out.omega0.coeff(0, 0) = cplx{};

  TailProfile profile = tail_profile(out.omega0);
  bool has_tail = spec.kind != "bandlimited" &&
                  !(spec.kind == "shear_plus_powerlaw" && spec.amplitude == 0.0) &&
                  spec.kind != "file";
  if (has_tail) {
    int e_hi = std::min(profile.max_exp(), int(std::floor(std::log2(double(kc)))) - 2);
    out.fitted_tail_exponent = fit_tail_exponent(profile, 1, e_hi);
    if (std::abs(out.fitted_tail_exponent - spec.s) > 0.1)
      throw std::runtime_error("generated data: realized tail exponent " +
                               std::to_string(out.fitted_tail_exponent) +
                               " outside 0.1 of requested s");
    out.ctx = slow_varying_table(profile);
    if (!out.ctx.algebraic)
      throw std::runtime_error("generated data: algebraic-decay check failed");
  } else {
    out.ctx.reference = profile;
  }
  return out;
}

// ---- experiment orchestration ----------------------------------------------

namespace {

void write_runlog(const std::string& path, const std::vector<GrowthSample>& rows) {
  FILE* fp = std::fopen(path.c_str(), "wb");
  if (!fp) throw std::runtime_error("cannot open " + path + " for writing");
  std::fprintf(fp,
               "t,energy,enstrophy,max_omega,det_drift,dealias_frac,"
               "adapted_norm_omega,adapted_norm_dphi,jac_sup,trusted\n");
  for (const auto& r : rows)
    std::fprintf(fp, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%d\n",
                 r.t, r.energy, r.enstrophy, r.omega_max, r.det_drift,
                 r.dealias_frac, r.adapted_omega, r.adapted_dphi, r.jac_sup,
                 r.trusted ? 1 : 0);
  std::fclose(fp);
}

CascadeConfig cascade_config_of(const RunConfig& cfg) {
  CascadeConfig cc;
  cc.t_end = cfg.solver_t_end;
  cc.dt = cfg.solver_dt;
  cc.alpha = cfg.solver_alpha;
  cc.s = cfg.data_s;
  cc.delta = cfg.diag_delta;
  cc.eps_lo_exp = cfg.diag_eps_min_exp;
  cc.eps_hi_exp = cfg.diag_eps_max_exp;
  cc.n_theta = cfg.para_n_theta;
  long snap = std::lround(cfg.io_snapshot_every / cfg.solver_dt);
  cc.p_stride = int(std::max(1l, snap));
  cc.w_stride = std::max(1, cc.p_stride / 4);
  cc.p_stride = cc.w_stride * std::max(1, cc.p_stride / cc.w_stride);
  cc.cutoff = cfg.cutoff();
  cc.chi = cfg.chi();
  cc.interp = cfg.interp();
  return cc;
}

DataSpec data_spec_of(const RunConfig& cfg) {
  DataSpec ds;
  ds.kind = cfg.data_kind;
  ds.s = cfg.data_s;
  ds.seed = cfg.data_seed;
  ds.amplitude = cfg.data_amplitude;
  ds.band_limit = cfg.solver_dealias ? cfg.grid_n / 3 : 0;
  ds.file_path = cfg.io_outdir + "/omega0.pcf1";
  return ds;
}

}  // namespace

ExperimentResult run_experiment(const RunConfig& cfg) {
  cfg.validate();
  fs::create_directories(cfg.io_outdir);
  Grid2D grid(cfg.grid_n, cfg.grid_L);
  GeneratedData data = generate_initial_data(data_spec_of(cfg), grid);
  write_pcf1(cfg.io_outdir + "/omega0.pcf1", inverse(data.omega0));
  write_tail_csv(cfg.io_outdir + "/tail_omega0.csv", data.ctx.reference);
  if (!data.ctx.C.empty())
    write_slow_varying_csv(cfg.io_outdir + "/slow_varying.csv", data.ctx);

  SolverState state;
  state.omega_hat = data.omega0;
  state.alpha = cfg.solver_alpha;
  state.dealias = cfg.solver_dealias;
  if (state.dealias) dealias_mask(state.omega_hat);

  CascadeConfig cc = cascade_config_of(cfg);
  int snap_idx = 0;
  std::string outdir = cfg.io_outdir;
  cc.snapshot_hook = [&snap_idx, outdir](const SolverState& s, const FlowMapState&) {
    char name[64];
    std::snprintf(name, sizeof name, "/omega_%04d.pcf1", snap_idx++);
    write_pcf1(outdir + name, inverse(s.omega_hat));
  };

  ExperimentResult res;
  res.outdir = cfg.io_outdir;
  res.cascade = cascade_report(std::move(state), cc, data.ctx);
  write_runlog(cfg.io_outdir + "/runlog.csv", res.cascade.growth);
  write_pairing_csv(cfg.io_outdir + "/pairing.csv", res.cascade.series);
  write_verdicts(cfg.io_outdir + "/verdicts.txt", res.cascade.verdicts,
                 res.cascade.series);
  {
    std::ofstream cf(cfg.io_outdir + "/config.txt");
    cf << cfg.to_text();
  }
  const CascadeVerdicts& v = res.cascade.verdicts;
  res.verdicts_ok = cfg.solver_alpha == 2.0
                        ? v.residual_slope_ok && v.monotone_ok &&
                              v.lyapunov_positive && v.growth_bounded_below
                        : v.growth_bounded_below;
  return res;
}

void run_evolve(const RunConfig& cfg) {
  cfg.validate();
  fs::create_directories(cfg.io_outdir);
  Grid2D grid(cfg.grid_n, cfg.grid_L);
  GeneratedData data = generate_initial_data(data_spec_of(cfg), grid);
  write_pcf1(cfg.io_outdir + "/omega0.pcf1", inverse(data.omega0));

  SolverState state;
  state.omega_hat = data.omega0;
  state.alpha = cfg.solver_alpha;
  state.dealias = cfg.solver_dealias;
  if (state.dealias) dealias_mask(state.omega_hat);
  FlowMapState flow = FlowMapState::identity(grid);

  std::vector<GrowthSample> log;
  int snap_idx = 0;
  bool trust = true;
  CoupledObserver obs;
  obs.stride = int(std::max(1l, std::lround(cfg.io_snapshot_every / cfg.solver_dt)));
  obs.fn = [&](const SolverState& s, const FlowMapState& f) {
    char name[64];
    std::snprintf(name, sizeof name, "/omega_%04d.pcf1", snap_idx++);
    write_pcf1(cfg.io_outdir + name, inverse(s.omega_hat));
    GrowthSample gs;
    gs.t = s.t;
    gs.jac_sup = f.jac_sup();
    gs.det_drift = f.max_det_drift();
    gs.dealias_frac = spectral_blocking_fraction(s.omega_hat);
    VectorField u = velocity_of(s.omega_hat, s.alpha);
    double e1 = l2_norm(u.x), e2 = l2_norm(u.y);
    gs.energy = e1 * e1 + e2 * e2;
    double z = l2_norm(s.omega_hat);
    gs.enstrophy = z * z;
    gs.omega_max = linf_norm(inverse(s.omega_hat));
    gs.adapted_omega = adapted_norm(s.omega_hat, data.ctx);
    Matrix2Field m = f.jac;
    for (auto& v : m.a11.data()) v -= 1.0;
    for (auto& v : m.a22.data()) v -= 1.0;
    double best = 0.0;
    for (const PhysicalField* pf : {&m.a11, &m.a12, &m.a21, &m.a22})
      best = std::max(best, adapted_norm(forward(*pf), data.ctx));
    gs.adapted_dphi = best;
    if (gs.dealias_frac >= 1e-6 || gs.det_drift >= 1e-3) trust = false;
    gs.trusted = trust;
    log.push_back(gs);
  };
  evolve_coupled(state, flow, cfg.solver_t_end, cfg.solver_dt, cfg.interp(), {obs});
  write_runlog(cfg.io_outdir + "/runlog.csv", log);
}

// ---- verification suites ----------------------------------------------------

namespace {

SpectralField random_field(const Grid2D& g, std::uint64_t seed, double decay,
                           int kmax_frac = 2) {
  SpectralField f(g);
  const int n = g.n;
  const int kc = n / kmax_frac - 1;
  CounterRng rng(seed);
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

struct SuiteReport {
  bool ok = true;
  void check(bool cond, const std::string& what, double value, bool verbose) {
    ok = ok && cond;
    if (verbose)
      std::printf("  [%s] %s (%.3g)\n", cond ? "pass" : "FAIL", what.c_str(), value);
  }
};

bool verify_appendix_a(const RunConfig& cfg, bool verbose) {
  auto t0 = std::chrono::steady_clock::now();
  Grid2D g(128, kTwoPi);
  DyadicPartition part(g);
  AdmissibleCutoff cutoff = cfg.cutoff();
  SuiteReport rep;

  rep.check(part.partition_defect(g.n / 2.0) <= 1e-12, "partition of unity",
            part.partition_defect(g.n / 2.0), verbose);

  SpectralField f = random_field(g, 11, 1.8);
  double env_lo = 1e300, env_hi = 0.0;
  for (int k = 2; k <= part.kmax() - 2; ++k) {
    SpectralField blk = part.block(f, k);
    if (l2_norm(blk) == 0.0) continue;
    double r = bernstein_ratio(blk, k, 1, 0, 2.0, 2.0);
    env_lo = std::min(env_lo, r);
    env_hi = std::max(env_hi, r);
  }
  rep.check(env_hi / env_lo <= 10.0, "bernstein envelope", env_hi / env_lo, verbose);

  double worst_recon = 0.0;
  for (int i = 0; i < 3; ++i) {
    SpectralField a = random_field(g, 100 + i, 1.6);
    SpectralField b = random_field(g, 200 + i, 1.4);
    SpectralField lhs = paraproduct(part, a, b, cutoff);
    lhs += paraproduct(part, b, a, cutoff);
    lhs += remainder(part, a, b, cutoff);
    SpectralField prod = multiply_exact(a, b);
    lhs -= prod;
    worst_recon = std::max(worst_recon, l2_norm(lhs) / l2_norm(prod));
  }
  rep.check(worst_recon <= 1e-12, "reconstruction identity", worst_recon, verbose);

  double worst_leak = 0.0;
  SpectralField a = random_field(g, 42, 1.5);
  for (int j = 3; j <= part.kmax() - 2; ++j) {
    SpectralField bj = part.block(random_field(g, 43, 1.2), j);
    if (l2_norm(bj) == 0.0) continue;
    SpectralField tf = paraproduct(part, a, bj, cutoff);
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
    if (total > 0.0) worst_leak = std::max(worst_leak, std::sqrt(leak / total));
  }
  rep.check(worst_leak <= 1e-13, "spectral localization", worst_leak, verbose);

  double dt = timer_seconds(t0);
  rep.check(dt < 60.0, "suite runtime (s)", dt, verbose);
  return rep.ok;
}

bool verify_rates(const RunConfig& base, bool verbose) {
  RunConfig cfg = RunConfig::preset("rates-default");
  cfg.io_outdir = base.io_outdir;
  Grid2D g(cfg.grid_n, cfg.grid_L);
  DyadicPartition part(g);
  AdmissibleCutoff cutoff = cfg.cutoff();
  SuiteReport rep;

  GeneratedData data = generate_initial_data(data_spec_of(cfg), g);
  rep.check(std::abs(data.fitted_tail_exponent - cfg.data_s) <= 0.1,
            "tail exponent", data.fitted_tail_exponent, verbose);

  // principal pairing: dilated cutoffs stay inside the sampled tail
  SymbolRep one = SymbolRep::constant_one(g);
  RateFit principal = rate_check(part, one, data.omega0, data.omega0, 0, 3,
                                 cutoff, cutoff.n0 - 2);
  rep.check(std::abs(principal.exponent - 2.0 * cfg.data_s) <= 0.2,
            "principal pairing exponent", principal.exponent, verbose);
  rep.check(principal.envelope > 0.0 && principal.envelope < 1e3,
            "principal envelope", principal.envelope, verbose);

  // shells above the paraproduct low cutoff
  ChiCutoff chi = cfg.chi();
  auto m_sub = [](double kx, double ky) {
    return cplx(1.0 / std::sqrt(1.0 + kx * kx + ky * ky));
  };
  RateFit sub = subprincipal_rate_check(part, m_sub, -1.0, chi, data.omega0,
                                        data.omega0, cfg.diag_eps_min_exp,
                                        cfg.diag_eps_max_exp, cutoff, 0);
  double gain = sub.exponent - 2.0 * cfg.data_s;
  rep.check(std::abs(gain - 1.0) <= 0.15, "subprincipal slope gain", gain, verbose);
  return rep.ok;
}

bool verify_cascade(const RunConfig& base, bool verbose) {
  RunConfig cfg = RunConfig::preset("cascade-default");
  if (!base.io_outdir.empty()) cfg.io_outdir = base.io_outdir;
  ExperimentResult res = run_experiment(cfg);
  SuiteReport rep;
  const CascadeVerdicts& v = res.cascade.verdicts;
  rep.check(v.residual_slope_ok, "residual slope", v.residual_slope, verbose);
  rep.check(v.monotone_ok, "W monotone within budget",
            double(v.monotone_violations), verbose);
  rep.check(v.lyapunov_positive, "renormalized growth slope", v.lyapunov_slope,
            verbose);
  rep.check(v.growth_bounded_below, "growth inequality ratio", v.growth_ratio_min,
            verbose);
  return rep.ok;
}

}  // namespace

bool verify_suite(const std::string& name, const RunConfig& cfg, bool verbose) {
  if (verbose) std::printf("suite %s:\n", name.c_str());
  if (name == "appendix-a") return verify_appendix_a(cfg, verbose);
  if (name == "rates") return verify_rates(cfg, verbose);
  if (name == "cascade") return verify_cascade(cfg, verbose);
  throw std::invalid_argument("unknown suite " + name);
}

}  // namespace specflow
