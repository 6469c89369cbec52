#pragma once

// Oversampled spectral interpolation shared by paracomposition and the
// Lagrangian velocity evaluation: zero-padded inverse transform onto a finer
// grid followed by periodic tensor-product Lagrange interpolation.

#include <cstdint>

#include "specflow/fourier.hpp"

namespace specflow {

struct InterpConfig {
  int oversample = 4;   // fine grid = oversample * n
  int order = 6;        // Lagrange points per axis
  double tol = 1e-10;   // residual gate for band-limited probes
};

class Interpolator {
 public:
  Interpolator(const SpectralField& src, const InterpConfig& cfg);

  double eval(double x, double y) const;

  // interpolation error versus exact mode summation at pseudo-random points
  double residual_probe(const SpectralField& src, int npoints,
                        std::uint64_t seed) const;

 private:
  Grid2D coarse_;
  int m_ = 0;      // fine grid size
  int order_ = 6;
  std::vector<double> fine_;  // row-major fine-grid samples
};

// Direct evaluation sum_k c_k e^{i k.x}; oracle-grade, O(active modes).
double eval_modes(const SpectralField& f, double x, double y);

// Values of f at the displaced points x + d(x); displacement on the same grid.
PhysicalField compose_displaced(const SpectralField& f, const PhysicalField& d1,
                                const PhysicalField& d2, const InterpConfig& cfg);

}  // namespace specflow
