#pragma once

// Pseudo-spectral time integration of 2D Euler / generalized SQG in vorticity
// form, plus the Lagrangian flow map with its jacobian data.

#include "specflow/dyadic.hpp"
#include "specflow/interp.hpp"
#include "specflow/paracalc.hpp"

namespace specflow {

struct SolverState {
  SpectralField omega_hat;
  double t = 0.0;
  double alpha = 2.0;   // 2 = Euler; (1, 2) = gSQG
  bool dealias = true;
  double last_dealias_frac = 0.0;  // pre-mask masked-mass fraction, last rhs
};

// velocity inversion dispatching on alpha; alpha = 2 uses biot_savart
VectorField velocity_of(const SpectralField& omega, double alpha);

// -dealias(u . grad omega); records the pre-mask masked-mass fraction
SpectralField rhs_vorticity(SolverState& state);

// throws when dt > 0.5 dx / ||u||_inf, message carries the admissible dt
void cfl_check(const SolverState& state, double dt);

// classical 4-stage Runge-Kutta step; optionally returns the midpoint-stage
// vorticity (input of stage 3), an O(dt^2) sample of omega(t + dt/2)
void step_rk4(SolverState& state, double dt, SpectralField* omega_mid = nullptr);

struct FlowMapState {
  PhysicalField d1, d2;  // displacement Phi_t - Id, periodic
  Matrix2Field jac;      // D Phi_t
  Matrix2Field inv_jac;
  PhysicalField det;
  double t = 0.0;

  static FlowMapState identity(const Grid2D& g);
  void refresh_jacobian();  // spectral differentiation; throws when det <= 0
  DiffeoMap as_diffeo() const;
  double max_det_drift() const;  // max |det - 1|
  double jac_sup() const;        // sup pointwise spectral norm
  double inv_jac_sup() const;
};

// RK4 update of the displacement under a frozen velocity field, evaluated at
// the displaced points through the shared interpolation stack.
void flow_step(FlowMapState& flow, const VectorField& velocity, double dt,
               const InterpConfig& cfg);

struct InvariantsRecord {
  double t = 0.0;
  double energy = 0.0;     // ||u||^2_{L2}
  double enstrophy = 0.0;  // ||omega||^2_{L2}
  double omega_max = 0.0;
  double det_drift = 0.0;
  double dealias_frac = 0.0;
  double sobolev = 0.0;            // H^s for the configured s
  double adapted_omega = 0.0;      // vs the initial-data context
  double adapted_dphi = 0.0;       // max over D Phi - Id entries
};

InvariantsRecord invariants_report(const SolverState& state,
                                   const FlowMapState* flow,
                                   const AdaptedNormContext* ctx,
                                   double sobolev_s = 1.0);

// Advances vorticity and flow map in lockstep; the flow sees the RK midpoint
// velocity of each step. The observer runs on the initial state and then
// every `observe_stride` steps.
struct CoupledObserver {
  int stride = 1;
  std::function<void(const SolverState&, const FlowMapState&)> fn;
};

void evolve_coupled(SolverState& state, FlowMapState& flow, double t_end,
                    double dt, const InterpConfig& cfg,
                    std::vector<CoupledObserver> observers);

}  // namespace specflow
