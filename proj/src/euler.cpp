#include "specflow/euler.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace specflow {

VectorField velocity_of(const SpectralField& omega, double alpha) {
  return alpha == 2.0 ? biot_savart(omega) : fractional_velocity(omega, alpha);
}

SpectralField rhs_vorticity(SolverState& state) {
  const Grid2D& g = state.omega_hat.grid();
  VectorField u = velocity_of(state.omega_hat, state.alpha);
  PhysicalField u1 = inverse(u.x), u2 = inverse(u.y);
  PhysicalField w1 = inverse(derivative(state.omega_hat, 1, 0));
  PhysicalField w2 = inverse(derivative(state.omega_hat, 0, 1));
  PhysicalField prod(g);
  for (std::size_t i = 0; i < g.size(); ++i)
    prod.data()[i] = u1.data()[i] * w1.data()[i] + u2.data()[i] * w2.data()[i];
  SpectralField rhs = forward(prod);
  rhs *= -1.0;
  rhs.at(0, 0) = cplx{};
  if (state.dealias) {
    state.last_dealias_frac = masked_mass_fraction(rhs);
    dealias_mask(rhs);
  }
  return rhs;
}

void cfl_check(const SolverState& state, double dt) {
  VectorField u = velocity_of(state.omega_hat, state.alpha);
  PhysicalField u1 = inverse(u.x), u2 = inverse(u.y);
  double umax = 0.0;
  for (std::size_t i = 0; i < u1.data().size(); ++i)
    umax = std::max(umax, std::hypot(u1.data()[i], u2.data()[i]));
  if (umax == 0.0) return;
  const Grid2D& g = state.omega_hat.grid();
  double dt_max = 0.5 * (g.L / g.n) / umax;
  if (dt > dt_max)
    throw std::invalid_argument("CFL violation: dt must be <= " +
                                std::to_string(dt_max));
}

void step_rk4(SolverState& state, double dt, SpectralField* omega_mid) {
  SolverState stage = state;
  SpectralField k1 = rhs_vorticity(stage);
  double frac = stage.last_dealias_frac;

  stage.omega_hat = k1;
  stage.omega_hat *= 0.5 * dt;
  stage.omega_hat += state.omega_hat;
  if (omega_mid) *omega_mid = stage.omega_hat;
  SpectralField k2 = rhs_vorticity(stage);
  frac = std::max(frac, stage.last_dealias_frac);

  stage.omega_hat = k2;
  stage.omega_hat *= 0.5 * dt;
  stage.omega_hat += state.omega_hat;
  SpectralField k3 = rhs_vorticity(stage);
  frac = std::max(frac, stage.last_dealias_frac);

  stage.omega_hat = k3;
  stage.omega_hat *= dt;
  stage.omega_hat += state.omega_hat;
  SpectralField k4 = rhs_vorticity(stage);
  frac = std::max(frac, stage.last_dealias_frac);

  k2 *= 2.0;
  k3 *= 2.0;
  k1 += k2;
  k1 += k3;
  k1 += k4;
  k1 *= dt / 6.0;
  state.omega_hat += k1;
  if (state.dealias) dealias_mask(state.omega_hat);
  state.omega_hat.at(0, 0) = cplx{};
  state.t += dt;
  state.last_dealias_frac = frac;
}

FlowMapState FlowMapState::identity(const Grid2D& g) {
  FlowMapState f;
  f.d1 = PhysicalField(g);
  f.d2 = PhysicalField(g);
  f.t = 0.0;
  f.refresh_jacobian();
  return f;
}

void FlowMapState::refresh_jacobian() {
  const Grid2D& g = d1.grid();
  SpectralField h1 = forward(d1), h2 = forward(d2);
  jac.a11 = inverse(derivative(h1, 1, 0));
  jac.a12 = inverse(derivative(h1, 0, 1));
  jac.a21 = inverse(derivative(h2, 1, 0));
  jac.a22 = inverse(derivative(h2, 0, 1));
  for (auto& v : jac.a11.data()) v += 1.0;
  for (auto& v : jac.a22.data()) v += 1.0;
  det = PhysicalField(g);
  inv_jac.a11 = PhysicalField(g);
  inv_jac.a12 = PhysicalField(g);
  inv_jac.a21 = PhysicalField(g);
  inv_jac.a22 = PhysicalField(g);
  for (std::size_t i = 0; i < g.size(); ++i) {
    double a = jac.a11.data()[i], b = jac.a12.data()[i];
    double c = jac.a21.data()[i], d = jac.a22.data()[i];
    double dt = a * d - b * c;
    if (!(dt > 0.0))
      throw std::runtime_error("flow map lost invertibility at resolution");
    det.data()[i] = dt;
    inv_jac.a11.data()[i] = d / dt;
    inv_jac.a12.data()[i] = -b / dt;
    inv_jac.a21.data()[i] = -c / dt;
    inv_jac.a22.data()[i] = a / dt;
  }
}

DiffeoMap FlowMapState::as_diffeo() const {
  return DiffeoMap::from_displacement(d1, d2);
}

double FlowMapState::max_det_drift() const {
  double m = 0.0;
  for (double v : det.data()) m = std::max(m, std::abs(v - 1.0));
  return m;
}

double FlowMapState::jac_sup() const { return matrix2_sup_norm(jac); }
double FlowMapState::inv_jac_sup() const { return matrix2_sup_norm(inv_jac); }

void flow_step(FlowMapState& flow, const VectorField& velocity, double dt,
               const InterpConfig& cfg) {
  const Grid2D& g = flow.d1.grid();
  Interpolator iu(velocity.x, cfg), iv(velocity.y, cfg);

  const std::size_t npx = g.size();
  auto eval_stage = [&](const std::vector<double>& a1, const std::vector<double>& a2,
                        std::vector<double>& o1, std::vector<double>& o2) {
    for (int i1 = 0; i1 < g.n; ++i1)
      for (int i2 = 0; i2 < g.n; ++i2) {
        std::size_t p = std::size_t(i1) * g.n + i2;
        double x = g.x(i1) + a1[p];
        double y = g.x(i2) + a2[p];
        o1[p] = iu.eval(x, y);
        o2[p] = iv.eval(x, y);
      }
  };

  const std::vector<double>&d01 = flow.d1.data(), &d02 = flow.d2.data();
  std::vector<double> k11(npx), k12(npx), k21(npx), k22(npx), k31(npx), k32(npx),
      k41(npx), k42(npx), t1(npx), t2(npx);

  eval_stage(d01, d02, k11, k12);
  for (std::size_t p = 0; p < npx; ++p) {
    t1[p] = d01[p] + 0.5 * dt * k11[p];
    t2[p] = d02[p] + 0.5 * dt * k12[p];
  }
  eval_stage(t1, t2, k21, k22);
  for (std::size_t p = 0; p < npx; ++p) {
    t1[p] = d01[p] + 0.5 * dt * k21[p];
    t2[p] = d02[p] + 0.5 * dt * k22[p];
  }
  eval_stage(t1, t2, k31, k32);
  for (std::size_t p = 0; p < npx; ++p) {
    t1[p] = d01[p] + dt * k31[p];
    t2[p] = d02[p] + dt * k32[p];
  }
  eval_stage(t1, t2, k41, k42);

  for (std::size_t p = 0; p < npx; ++p) {
    flow.d1.data()[p] += dt / 6.0 * (k11[p] + 2.0 * k21[p] + 2.0 * k31[p] + k41[p]);
    flow.d2.data()[p] += dt / 6.0 * (k12[p] + 2.0 * k22[p] + 2.0 * k32[p] + k42[p]);
  }
  flow.t += dt;
  flow.refresh_jacobian();
}

InvariantsRecord invariants_report(const SolverState& state,
                                   const FlowMapState* flow,
                                   const AdaptedNormContext* ctx,
                                   double sobolev_s) {
  InvariantsRecord r;
  r.t = state.t;
  VectorField u = velocity_of(state.omega_hat, state.alpha);
  double e = l2_norm(u.x), e2 = l2_norm(u.y);
  r.energy = e * e + e2 * e2;
  double z = l2_norm(state.omega_hat);
  r.enstrophy = z * z;
  r.omega_max = linf_norm(inverse(state.omega_hat));
  r.dealias_frac = spectral_blocking_fraction(state.omega_hat);
  r.sobolev = sobolev_norm(state.omega_hat, sobolev_s);
  if (flow) r.det_drift = flow->max_det_drift();
  if (ctx) {
    r.adapted_omega = adapted_norm(state.omega_hat, *ctx);
    if (flow) {
      Matrix2Field m = flow->jac;
      for (auto& v : m.a11.data()) v -= 1.0;
      for (auto& v : m.a22.data()) v -= 1.0;
      double best = 0.0;
      for (const PhysicalField* f : {&m.a11, &m.a12, &m.a21, &m.a22})
        best = std::max(best, adapted_norm(forward(*f), *ctx));
      r.adapted_dphi = best;
    }
  }
  return r;
}

void evolve_coupled(SolverState& state, FlowMapState& flow, double t_end,
                    double dt, const InterpConfig& cfg,
                    std::vector<CoupledObserver> observers) {
  cfl_check(state, dt);
  for (auto& obs : observers) obs.fn(state, flow);
  long nsteps = std::lround((t_end - state.t) / dt);
  for (long step = 1; step <= nsteps; ++step) {
    SpectralField omega_mid;
    step_rk4(state, dt, &omega_mid);
    VectorField u_mid = velocity_of(omega_mid, state.alpha);
    flow_step(flow, u_mid, dt, cfg);
    for (auto& obs : observers)
      if (step % obs.stride == 0) obs.fn(state, flow);
  }
}

}  // namespace specflow
