#pragma once

// Bony paraproducts and remainders, paradifferential operators assembled from
// elementary coefficient/multiplier terms, symbol seminorms, and the
// paracomposition operator for low-regularity changes of variables.

#include <functional>

#include "specflow/dyadic.hpp"
#include "specflow/interp.hpp"

namespace specflow {

// Dyadic surrogate of the admissible frequency cutoff: Delta_i pairs with the
// low pass P_{<= i - n0}. n0 = ceil(log2 B) + 2 keeps every summand of
// T_f Delta_j g inside the ((1-1/B) 2^{j-1}, (1+1/B) 2^{j+1}) annulus.
struct AdmissibleCutoff {
  double B = 4.0;
  double b = 1.0;
  int n0 = 4;

  static AdmissibleCutoff make(double B, double b);
  static AdmissibleCutoff standard() { return make(4.0, 1.0); }
};

// T_f g = sum_{q >= n0} P_{<= q-n0}(D) f * Delta_q g, products alias-free.
SpectralField paraproduct(const DyadicPartition& part, const SpectralField& f,
                          const SpectralField& g, const AdmissibleCutoff& cutoff);

// Diagonal band complementary to the two paraproducts, so that
// T_f g + T_g f + R(f, g) = fg exactly (alias-free product).
SpectralField remainder(const DyadicPartition& part, const SpectralField& f,
                        const SpectralField& g, const AdmissibleCutoff& cutoff);

// Elementary symbol term c(x) (x) m(xi); m defined on |xi| >= 1/2.
struct SymbolTerm {
  PhysicalField coeff;
  std::function<cplx(double, double)> multiplier;
};

struct SymbolRep {
  std::vector<SymbolTerm> terms;
  double order = 0.0;
  bool zero_homogeneous = false;
  double truncation_mass = 0.0;  // discarded angular-coefficient mass

  cplx eval(int ix1, int ix2, double kx, double ky) const;
  static SymbolRep constant_one(const Grid2D& g);
  static SymbolRep from_coefficient(const PhysicalField& c);         // a(x, xi) = c(x)
  static SymbolRep from_multiplier(const Grid2D& g,
                                   std::function<cplx(double, double)> m,
                                   double order);                    // a(x, xi) = m(xi)
};

// T_a u = sum_n sum_{i >= n0 + e} P_{<= i-n0-e}(D) c_n * m_n(2^{-e} D) Delta_i u.
// eps_exp = e dilates the whole operator geometry (semi-classical scaling);
// e = 0 is the plain paradifferential operator.
SpectralField paradiff_apply(const DyadicPartition& part, const SymbolRep& a,
                             const SpectralField& u, const AdmissibleCutoff& cutoff,
                             int eps_exp = 0);

// Discrete symbol seminorm M^m_rho(a; n): sampled sup over lattice xi
// (|xi| >= 1/2) of (1+|xi|)^{|alpha|-m} times the W^{rho,inf}(x) size of the
// centered xi-differences of a, rho in {0, 1}, n <= 4.
double symbol_seminorm(const SymbolRep& a, const Grid2D& g, double m, int rho,
                       int n);

struct Matrix2Field {
  PhysicalField a11, a12, a21, a22;
};

// Orientation-preserving diffeomorphism chi(x) = x + d(x) with jacobian data
// and the dyadic window N (2^N above both jacobian sups).
struct DiffeoMap {
  PhysicalField d1, d2;
  Matrix2Field jac;
  Matrix2Field inv_jac;
  PhysicalField det;
  int window = 1;

  static DiffeoMap from_displacement(const PhysicalField& d1,
                                     const PhysicalField& d2);
  double jac_sup() const;      // sup of the pointwise spectral norm
  double inv_jac_sup() const;
};

double matrix2_sup_norm(const Matrix2Field& A);  // sup_x ||A(x)||_2

// chi^* u = sum_k sum_{|l-k| <= N, l >= 0} P_l(D)((Delta_k u) o chi).
// Throws "insufficient oversampling" when the block interpolation residual
// exceeds cfg.tol on probe points.
SpectralField paracompose(const DyadicPartition& part, const DiffeoMap& chi,
                          const SpectralField& u, const InterpConfig& cfg);

struct CompositionParts {
  SpectralField composed;    // u o chi by direct interpolation
  SpectralField pullback;    // chi^* u
  SpectralField para_term;   // sum_j T_{(d_j u) o chi} d_j  (affine part drops)
  SpectralField residual;    // composed - pullback - para_term
};

CompositionParts paralinearize_composition(const DyadicPartition& part,
                                           const SpectralField& u,
                                           const DiffeoMap& chi,
                                           const AdmissibleCutoff& cutoff,
                                           const InterpConfig& cfg);

// a(x, xi) = (|xi| / |A(x) xi|)^beta as a 0-homogeneous symbol via angular
// harmonics sampled at n_theta angles; discarded-coefficient mass reported.
SymbolRep flow_symbol(const Matrix2Field& A, double beta, int n_theta);

// || [chi(eps D), T_u . grad] omega ||_{L2} / (||Du||_inf dr_omega(lambda eps)),
// lambda = 2^{-lambda_exp} on the dyadic grid.
double commutator_check(const DyadicPartition& part, const VectorField& u,
                        const SpectralField& omega, int eps_exp,
                        const AdmissibleCutoff& cutoff,
                        const std::function<double(double)>& chi_radial,
                        int lambda_exp, const TailProfile& omega_tail);

// chi(2^{-e} |xi|) multiplier
SpectralField radial_filter(const SpectralField& f,
                            const std::function<double(double)>& chi_radial,
                            int eps_exp);

}  // namespace specflow
