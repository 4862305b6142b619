#include "bosemix/grid.hpp"

#include <unsupported/Eigen/FFT>

#include <cmath>
#include <map>

namespace bosemix {

namespace {

bool power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

Eigen::FFT<double>& fft_engine() {
  thread_local Eigen::FFT<double> engine;
  return engine;
}

// Transform every axis-aligned line of a dim-cube. Lines along the last axis
// are contiguous; the others are gathered through a scratch buffer.
void transform_all_axes(const Grid& g, ComplexVector& data, bool forward) {
  const int n = g.n;
  auto& engine = fft_engine();
  ComplexVector in(n), out(n);
  if (g.dim == 1) {
    in = data;
    if (forward)
      engine.fwd(out, in);
    else
      engine.inv(out, in);
    data = out;
    return;
  }
  // dim == 3, flat index (ix*n + iy)*n + iz
  const Eigen::Index plane = Eigen::Index(n) * n;
  for (int axis = 0; axis < 3; ++axis) {
    const Eigen::Index stride = (axis == 0) ? plane : (axis == 1) ? n : 1;
    for (int a = 0; a < n; ++a) {
      for (int b = 0; b < n; ++b) {
        const Eigen::Index start = (axis == 0)   ? Eigen::Index(a) * n + b
                                   : (axis == 1) ? Eigen::Index(a) * plane + b
                                                 : Eigen::Index(a) * plane + Eigen::Index(b) * n;
        for (int i = 0; i < n; ++i) in[i] = data[start + i * stride];
        if (forward)
          engine.fwd(out, in);
        else
          engine.inv(out, in);
        for (int i = 0; i < n; ++i) data[start + i * stride] = out[i];
      }
    }
  }
}

}  // namespace

Grid Grid::make(int dim, int n, double length) {
  if (dim != 1 && dim != 3) throw InvalidInput("Grid: dim must be 1 or 3");
  if (n < 8 || !power_of_two(n))
    throw InvalidInput("Grid: points_per_axis must be a power of two >= 8");
  if (!(length > 0)) throw InvalidInput("Grid: box_length must be positive");
  return Grid{dim, n, length};
}

Eigen::Index Grid::size() const {
  Eigen::Index s = 1;
  for (int d = 0; d < dim; ++d) s *= n;
  return s;
}

double Grid::cell_volume() const {
  double w = 1.0;
  for (int d = 0; d < dim; ++d) w *= spacing();
  return w;
}

ComplexVector fourier_forward(const Grid& g, const ComplexVector& values) {
  ComplexVector out = values;
  transform_all_axes(g, out, true);
  return out;
}

ComplexVector fourier_inverse(const Grid& g, const ComplexVector& coeffs) {
  ComplexVector out = coeffs;
  transform_all_axes(g, out, false);
  return out;
}

RealVector laplacian_symbol(const Grid& g) {
  const int n = g.n;
  RealVector k2_axis(n);
  for (int i = 0; i < n; ++i) {
    double k = g.wavenumber(i);
    k2_axis[i] = k * k;
  }
  if (g.dim == 1) return k2_axis;
  RealVector sym(g.size());
  Eigen::Index idx = 0;
  for (int ix = 0; ix < n; ++ix)
    for (int iy = 0; iy < n; ++iy)
      for (int iz = 0; iz < n; ++iz)
        sym[idx++] = k2_axis[ix] + k2_axis[iy] + k2_axis[iz];
  return sym;
}

SpectralField laplacian(const SpectralField& f) {
  ComplexVector coeffs = fourier_forward(f.grid, f.values);
  RealVector sym = laplacian_symbol(f.grid);
  coeffs.array() *= sym.array();
  return {f.grid, fourier_inverse(f.grid, coeffs)};
}

SpectralField convolve(const SpectralField& f, const SpectralField& g) {
  require_same_grid(f.grid, g.grid, "convolve");
  ComplexVector fh = fourier_forward(f.grid, f.values);
  ComplexVector gh = fourier_forward(g.grid, g.values);
  fh.array() *= gh.array();
  ComplexVector conv = fourier_inverse(f.grid, fh);
  conv *= f.grid.cell_volume();
  return {f.grid, conv};
}

Complex inner(const SpectralField& f, const SpectralField& g) {
  require_same_grid(f.grid, g.grid, "inner");
  return f.values.dot(g.values) * f.grid.cell_volume();
}

double l2_norm(const SpectralField& f) {
  return f.values.norm() * std::sqrt(f.grid.cell_volume());
}

double h1_norm(const SpectralField& f) {
  ComplexVector coeffs = fourier_forward(f.grid, f.values);
  RealVector sym = laplacian_symbol(f.grid);
  double total = 0.0;
  for (Eigen::Index i = 0; i < coeffs.size(); ++i)
    total += (1.0 + sym[i]) * std::norm(coeffs[i]);
  // Parseval: sum_x |f|^2 = n^-dim sum_k |fhat|^2
  total *= f.grid.cell_volume() / double(f.grid.size());
  return std::sqrt(total);
}

SpectralField normalized(const SpectralField& f) {
  double nrm = l2_norm(f);
  if (nrm < 1e-300) throw InvalidInput("normalized: zero field");
  return {f.grid, f.values / nrm};
}

double kinetic_energy(const SpectralField& f) {
  ComplexVector coeffs = fourier_forward(f.grid, f.values);
  RealVector sym = laplacian_symbol(f.grid);
  double total = 0.0;
  for (Eigen::Index i = 0; i < coeffs.size(); ++i)
    total += sym[i] * std::norm(coeffs[i]);
  total *= f.grid.cell_volume() / double(f.grid.size());
  return total;
}

SpectralField sample_field(const Grid& g,
                           const std::function<Complex(const double*)>& fn) {
  SpectralField f = SpectralField::zero(g);
  double x[3] = {0, 0, 0};
  if (g.dim == 1) {
    for (int i = 0; i < g.n; ++i) {
      x[0] = g.coord(i);
      f.values[i] = fn(x);
    }
  } else {
    Eigen::Index idx = 0;
    for (int ix = 0; ix < g.n; ++ix)
      for (int iy = 0; iy < g.n; ++iy)
        for (int iz = 0; iz < g.n; ++iz) {
          x[0] = g.coord(ix);
          x[1] = g.coord(iy);
          x[2] = g.coord(iz);
          f.values[idx++] = fn(x);
        }
  }
  return f;
}

RealVector sample_real(const Grid& g,
                       const std::function<double(const double*)>& fn) {
  RealVector v(g.size());
  double x[3] = {0, 0, 0};
  if (g.dim == 1) {
    for (int i = 0; i < g.n; ++i) {
      x[0] = g.coord(i);
      v[i] = fn(x);
    }
  } else {
    Eigen::Index idx = 0;
    for (int ix = 0; ix < g.n; ++ix)
      for (int iy = 0; iy < g.n; ++iy)
        for (int iz = 0; iz < g.n; ++iz) {
          x[0] = g.coord(ix);
          x[1] = g.coord(iy);
          x[2] = g.coord(iz);
          v[idx++] = fn(x);
        }
  }
  return v;
}

namespace {

template <typename AxisFn>
RealVector axis_radius(const Grid& g, AxisFn axis) {
  RealVector r(g.size());
  if (g.dim == 1) {
    for (int i = 0; i < g.n; ++i) r[i] = std::abs(axis(i));
  } else {
    Eigen::Index idx = 0;
    for (int ix = 0; ix < g.n; ++ix)
      for (int iy = 0; iy < g.n; ++iy)
        for (int iz = 0; iz < g.n; ++iz) {
          double dx = axis(ix), dy = axis(iy), dz = axis(iz);
          r[idx++] = std::sqrt(dx * dx + dy * dy + dz * dz);
        }
  }
  return r;
}

}  // namespace

SpectralField spectral_upsample(const SpectralField& f, const Grid& fine) {
  const Grid& gc = f.grid;
  if (fine.dim != gc.dim || fine.length != gc.length || fine.n < gc.n)
    throw InvalidInput("spectral_upsample: incompatible grids");
  if (fine.n == gc.n) return f;
  ComplexVector coarse_hat = fourier_forward(gc, f.values);
  ComplexVector fine_hat = ComplexVector::Zero(fine.size());
  auto map_axis = [&](int ic) {
    int m = (ic <= gc.n / 2) ? ic : ic - gc.n;
    return m >= 0 ? m : m + fine.n;
  };
  if (gc.dim == 1) {
    for (int i = 0; i < gc.n; ++i) fine_hat[map_axis(i)] = coarse_hat[i];
  } else {
    Eigen::Index idx = 0;
    for (int ix = 0; ix < gc.n; ++ix)
      for (int iy = 0; iy < gc.n; ++iy)
        for (int iz = 0; iz < gc.n; ++iz, ++idx) {
          Eigen::Index j =
              (Eigen::Index(map_axis(ix)) * fine.n + map_axis(iy)) * fine.n +
              map_axis(iz);
          fine_hat[j] = coarse_hat[idx];
        }
  }
  double scale = std::pow(double(fine.n) / gc.n, gc.dim);
  return {fine, fourier_inverse(fine, fine_hat) * scale};
}

RealVector radius_map(const Grid& g) {
  return axis_radius(g, [&](int i) { return g.coord(i); });
}

RealVector displacement_map(const Grid& g) {
  return axis_radius(g, [&](int i) { return g.delta(i); });
}

}  // namespace bosemix
