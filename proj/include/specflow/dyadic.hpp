#pragma once

// Littlewood-Paley decomposition on the wavenumber lattice, Bernstein checks,
// Sobolev/Besov norms, Fourier-tail profiles dr_f and the reference-adapted
// norm with its dyadic and ball-complement equivalents.

#include <optional>
#include <vector>

#include "specflow/fourier.hpp"

namespace specflow {

// C^inf smoothstep: 0 for t <= 0, 1 for t >= 1, built from exp(-1/t).
double smoothstep(double t);

// Radial base bump: 1 on |xi| < 1, 0 on |xi| > 2, smooth in between.
double base_bump(double r);

// Dyadic partition built from P_{<=k}(xi) = P0(2^{-k} xi),
// P_k = P_{<=k} - P_{<=k-1}. Block weight arrays are cached per grid.
class DyadicPartition {
 public:
  explicit DyadicPartition(const Grid2D& g);

  const Grid2D& grid() const { return grid_; }
  int kmax() const { return kmax_; }  // 2^kmax covers the whole lattice

  double block_weight(int k, double r) const;    // P_k at radius r
  double lowpass_weight(int k, double r) const;  // P_{<=k} at radius r

  SpectralField block(const SpectralField& f, int k) const;    // Delta_k f
  SpectralField lowpass(const SpectralField& f, int k) const;  // P_{<=k}(D) f
  SpectralField highpass(const SpectralField& f, int k) const; // (Id-P_{<=k})f

  double block_l2(const SpectralField& f, int k) const;
  double lowpass_l2(const SpectralField& f, int k) const;
  double highpass_l2(const SpectralField& f, int k) const;

  // max over lattice points below radius rmax of |1 - sum_k P_k|
  double partition_defect(double rmax) const;

 private:
  const std::vector<double>& weights(int k) const;
  Grid2D grid_;
  int kmax_;
  std::vector<double> radius_;                       // |xi| per lattice point
  mutable std::vector<std::vector<double>> cache_;   // block weights per k
};

SpectralField lp_block(const SpectralField& f, int k);

// ||d^a f||_{L^q} / (2^{k|a| + 2(1/p - 1/q)} ||f||_{L^p}) for a single block
// at index k; p, q restricted to {2, inf} with p <= q.
double bernstein_ratio(const SpectralField& f_block, int block_index, int a1,
                       int a2, double p, double q);

double sobolev_norm(const SpectralField& f, double s);
double besov_2inf_norm(const SpectralField& f, double s);

// Tail profile dr_f on the dyadic grid eps_j = 2^{1-j}, j = 0..J; the top
// sample captures every nonzero frequency, so dr(eps_0) = ||f - mean||.
struct TailProfile {
  std::vector<double> eps;  // decreasing
  std::vector<double> dr;   // same length; non-decreasing in eps
  double total = 0.0;       // ||f||_{L2}

  double value_at_exp(int e) const;  // dr(2^{-e}), e = -1..J-1
  int min_exp() const { return -1; }
  int max_exp() const { return int(eps.size()) - 2; }
};

TailProfile tail_profile(const SpectralField& f);

// Slow-varying table C(lambda) = inf_eps dr(lambda eps)/dr(eps) and the
// fitted algebraic-decay exponent.
struct AdaptedNormContext {
  TailProfile reference;
  std::vector<double> lambdas;  // {1/2, 1/4, 1/8}
  std::vector<double> C;
  double alpha_fit = 0.0;
  double fit_residual = 0.0;
  bool algebraic = false;
};

AdaptedNormContext slow_varying_table(const TailProfile& profile);

// sup over the sampled eps grid of dr_f / dr_ref, 0/0-guarded.
double adapted_norm(const SpectralField& f, const AdaptedNormContext& ctx);

// sup_k ||Delta_k f|| / dr_ref(2^{-k})
double dyadic_adapted_norm(const SpectralField& f, const AdaptedNormContext& ctx);

// ball-complement characterization: sup_k ||(Id - P_{<=k}) f|| / dr_ref(2^{-k})
double lowpass_adapted_norm(const SpectralField& f, const AdaptedNormContext& ctx);

// CSV export: columns eps,dr and lambda,C
void write_tail_csv(const std::string& path, const TailProfile& p);
void write_slow_varying_csv(const std::string& path, const AdaptedNormContext& ctx);

}  // namespace specflow
