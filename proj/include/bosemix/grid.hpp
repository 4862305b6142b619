#ifndef BOSEMIX_GRID_HPP
#define BOSEMIX_GRID_HPP

#include <functional>

#include "bosemix/common.hpp"

namespace bosemix {

// Uniform periodic grid on a centered box [-L/2, L/2)^dim, dim in {1,3}.
// Points per axis must be a power of two (>= 8) so transforms stay fast and
// convolutions exact for band-limited data.
struct Grid {
  int dim = 1;
  int n = 8;        // points per axis
  double length = 1.0;

  static Grid make(int dim, int n, double length);

  double spacing() const { return length / n; }
  Eigen::Index size() const;
  double cell_volume() const;

  // coordinate of index i along one axis, in [-L/2, L/2)
  double coord(int i) const { return -0.5 * length + i * spacing(); }
  // minimum-image displacement of index i along one axis, in [-L/2, L/2)
  double delta(int i) const { return (i <= n / 2 ? i : i - n) * spacing(); }
  // angular wavenumber of index i along one axis
  double wavenumber(int i) const {
    int m = (i <= n / 2 ? i : i - n);
    return 2.0 * pi * m / length;
  }

  bool operator==(const Grid& o) const {
    return dim == o.dim && n == o.n && length == o.length;
  }
};

// Complex field sampled on a Grid. Quadrature weight is spacing^dim.
struct SpectralField {
  Grid grid;
  ComplexVector values;

  SpectralField() = default;
  SpectralField(const Grid& g, ComplexVector v) : grid(g), values(std::move(v)) {}
  static SpectralField zero(const Grid& g) {
    return {g, ComplexVector::Zero(g.size())};
  }
};

// Unnormalized forward DFT along every axis (in place on a copy).
ComplexVector fourier_forward(const Grid& g, const ComplexVector& values);
// Inverse DFT, scaled by 1/n per axis so that inverse(forward(x)) == x.
ComplexVector fourier_inverse(const Grid& g, const ComplexVector& coeffs);

// |k|^2 at flat spectral index.
RealVector laplacian_symbol(const Grid& g);

// -Laplacian via Fourier multiplier |k|^2; exact on band-limited fields.
SpectralField laplacian(const SpectralField& f);

// Periodic convolution (f*g)(x) = sum_y f(x-y) g(y) spacing^dim.
SpectralField convolve(const SpectralField& f, const SpectralField& g);

// Quadrature-weighted L2 inner product, conjugate-linear in f.
Complex inner(const SpectralField& f, const SpectralField& g);
double l2_norm(const SpectralField& f);
double h1_norm(const SpectralField& f);
// Rescales to unit L2 norm; throws on (numerically) zero fields.
SpectralField normalized(const SpectralField& f);

// Real quadratic form <f, -Lap f>; always real and >= 0.
double kinetic_energy(const SpectralField& f);

// Samples a scalar function of the position vector (x[0..dim-1]).
SpectralField sample_field(const Grid& g,
                           const std::function<Complex(const double*)>& fn);
RealVector sample_real(const Grid& g,
                       const std::function<double(const double*)>& fn);

// Distance from the box center, per flat index (coordinates live in
// [-L/2, L/2), so no wrap is involved). For traps and envelopes.
RealVector radius_map(const Grid& g);

// Minimum-image displacement length from index 0, per flat index. This is
// the radius at which convolution kernels must be sampled.
RealVector displacement_map(const Grid& g);

// Zero-padded Fourier interpolation onto a finer grid (same box, same dim).
SpectralField spectral_upsample(const SpectralField& f, const Grid& fine);

inline void require_same_grid(const Grid& a, const Grid& b, const char* where) {
  if (!(a == b)) throw InvalidInput(std::string(where) + ": fields on different grids");
}

}  // namespace bosemix

#endif
