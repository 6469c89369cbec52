#pragma once

// Semi-classical pairings and their convergence rates, the Lyapunov pairing
// with its squared-norm production term, and the renormalized growth checks.

#include "specflow/euler.hpp"
#include "specflow/paracalc.hpp"

namespace specflow {

// Smooth radial bump supported in (r0, r1), identically zero on |xi| <= 1,
// rising to a plateau in the geometric middle of the support.
struct ChiCutoff {
  double r0 = 2.0;
  double r1 = 8.0;

  ChiCutoff() = default;
  ChiCutoff(double inner, double outer);
  double operator()(double r) const;
  static ChiCutoff standard() { return ChiCutoff(2.0, 8.0); }
};

SpectralField chi_filter(const SpectralField& f, const ChiCutoff& chi, int eps_exp);

// (T_{a(x, eps xi)} u, v)_{L2} with eps = 2^{-eps_exp}; the whole operator
// geometry (block start and coefficient caps) dilates with eps.
double semiclassical_pairing(const DyadicPartition& part, const SymbolRep& a,
                             int eps_exp, const SpectralField& u,
                             const SpectralField& v, const AdmissibleCutoff& cutoff);
cplx semiclassical_pairing_complex(const DyadicPartition& part, const SymbolRep& a,
                                   int eps_exp, const SpectralField& u,
                                   const SpectralField& v,
                                   const AdmissibleCutoff& cutoff);

struct RateFit {
  double envelope = 0.0;  // sup_eps |pairing| / (M * dr_u(k eps) dr_v(k eps))
  double exponent = 0.0;  // fitted decay power of |pairing| in eps
  int points = 0;
};

// pre: u, v carry at least 3 octaves of usable tail.
RateFit rate_check(const DyadicPartition& part, const SymbolRep& a,
                   const SpectralField& u, const SpectralField& v,
                   int eps_lo_exp, int eps_hi_exp, const AdmissibleCutoff& cutoff,
                   int kappa_exp);

// Subprincipal route: the undilated order-(-alpha) multiplier sandwiched
// between chi(eps D) cutoffs, (T_m chi_eps u, chi_eps v).
RateFit subprincipal_rate_check(const DyadicPartition& part,
                                const std::function<cplx(double, double)>& m,
                                double sym_order, const ChiCutoff& chi,
                                const SpectralField& u, const SpectralField& v,
                                int eps_lo_exp, int eps_hi_exp,
                                const AdmissibleCutoff& cutoff, int kappa_exp);

struct PairingRow {
  double t = 0.0;
  double eps = 0.0;
  double W = 0.0;
  double P = 0.0;
  double dWdt_fd = 0.0;
  double bound = 0.0;   // eps^{min exponent} * dr_ref(eps)^2 (unit constant)
  double dr_ref = 0.0;
  bool trusted = true;
};

struct PairingSeries {
  std::vector<PairingRow> rows;
  double symbol_truncation_mass = 0.0;
  double interp_residual = 0.0;
  double dt = 0.0;
};

// residual-budget exponent min(s + alpha - 3 - delta, 1, alpha - 1); Euler
// (alpha = 2) reduces to min(s - 1 - delta, 1)
double residual_exponent(double s, double delta, double alpha);

// curl T_{[DPhi]^{-1}} (Phi - Id), with |D|^{alpha-2} prefactor for gSQG
SpectralField lyapunov_field(const DyadicPartition& part, const FlowMapState& flow,
                             const AdmissibleCutoff& cutoff, double alpha);

// One (W, P) evaluation:
//   W = (chi_eps F, chi_eps omega0), F the lyapunov field,
//   P = || T_{(|xi|/|A xi|)^{alpha/2}} chi_eps omega0 ||^2.
struct LyapunovPairing {
  double W = 0.0;
  double P = 0.0;
  double truncation_mass = 0.0;
};

LyapunovPairing lyapunov_pairing(const DyadicPartition& part,
                                 const FlowMapState& flow,
                                 const SpectralField& omega0, const ChiCutoff& chi,
                                 int eps_exp, const AdmissibleCutoff& cutoff,
                                 double alpha, int n_theta);

struct CascadeConfig {
  double t_end = 2.0;
  double dt = 1e-3;
  double alpha = 2.0;
  double s = 2.5;       // tail exponent of the initial data
  double delta = 0.1;
  int eps_lo_exp = 3;   // eps = 2^{-lo} .. 2^{-hi}
  int eps_hi_exp = 6;
  int n_theta = 32;
  int w_stride = 25;    // solver steps between W samples
  int p_stride = 100;   // solver steps between P samples (multiple of w_stride)
  double trunc_mass_threshold = 1e-2;
  AdmissibleCutoff cutoff = AdmissibleCutoff::standard();
  ChiCutoff chi = ChiCutoff::standard();
  InterpConfig interp;
  // invoked at every P sample (snapshot cadence)
  std::function<void(const SolverState&, const FlowMapState&)> snapshot_hook;
};

struct GrowthSample {
  double t = 0.0;
  double jac_sup = 1.0;
  double adapted_dphi = 0.0;  // max-entry adapted norm of DPhi - Id
  double adapted_omega = 0.0;
  double det_drift = 0.0;
  double dealias_frac = 0.0;
  double energy = 0.0;
  double enstrophy = 0.0;
  double omega_max = 0.0;
  bool trusted = true;
};

struct CascadeVerdicts {
  std::vector<double> kappa;          // fitted budget constants per eps
  double kappa_adjacent_ratio_max = 0.0;
  double residual_slope = 0.0;        // log2(residual/dr^2) vs log2(eps)
  double required_slope = 0.0;
  bool residual_slope_ok = false;
  bool monotone_ok = false;
  int monotone_violations = 0;
  double lyapunov_slope = 0.0;        // linear fit of lyapunov_value over time
  bool lyapunov_positive = false;
  double growth_ratio_min = 0.0;      // LHS/RHS of the differential inequality
  bool growth_bounded_below = false;
  double trusted_fraction = 1.0;
};

struct CascadeResult {
  PairingSeries series;
  std::vector<GrowthSample> growth;
  CascadeVerdicts verdicts;
};

// End-to-end diagnostic run: advances vorticity and flow in lockstep, samples
// W densely and P at the diagnostic cadence, fits the residual budget and
// evaluates the verdicts.
CascadeResult cascade_report(SolverState state, const CascadeConfig& cfg,
                             const AdaptedNormContext& ctx);

// max over trusted sampled eps of W(t, eps) / dr_ref(eps)^2, per time
std::vector<std::pair<double, double>> lyapunov_value(const PairingSeries& series,
                                                      const AdaptedNormContext& ctx);

struct GrowthCheckResult {
  std::vector<double> t, lhs, rhs, ratio;
  double ratio_min = 0.0;
};

// LHS = ||DPhi||_inf * adapted_norm(DPhi - Id), RHS = int_0^t ds / ||DPhi_s||_inf
GrowthCheckResult growth_inequality_check(const std::vector<GrowthSample>& growth);

void write_pairing_csv(const std::string& path, const PairingSeries& series);
void write_verdicts(const std::string& path, const CascadeVerdicts& v,
                    const PairingSeries& series);

}  // namespace specflow
