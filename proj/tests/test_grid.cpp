#include <doctest.h>

#include <cmath>
#include <random>

#include "bosemix/grid.hpp"

using namespace bosemix;

namespace {

SpectralField random_field(const Grid& g, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  SpectralField f = SpectralField::zero(g);
  for (Eigen::Index i = 0; i < f.values.size(); ++i)
    f.values[i] = Complex(gauss(rng), gauss(rng));
  return f;
}

// Band-limited trig sum with modes |m| <= mmax, along with its exact values
// on any requested 1D grid point.
struct TrigSum {
  double L;
  int mmax;
  std::vector<Complex> coeff;  // index m+mmax

  Complex eval(double x) const {
    Complex s = 0;
    for (int m = -mmax; m <= mmax; ++m)
      s += coeff[m + mmax] * std::exp(Complex(0, 2.0 * pi * m / L * x));
    return s;
  }
};

TrigSum random_trig(double L, int mmax, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  TrigSum t{L, mmax, {}};
  for (int m = -mmax; m <= mmax; ++m)
    t.coeff.push_back(Complex(gauss(rng), gauss(rng)));
  return t;
}

// Direct O(n^2) periodic convolution on a 1D grid.
ComplexVector brute_convolve(const Grid& g, const ComplexVector& f,
                             const ComplexVector& h) {
  const int n = g.n;
  ComplexVector out = ComplexVector::Zero(n);
  for (int x = 0; x < n; ++x)
    for (int y = 0; y < n; ++y) out[x] += f[((x - y) % n + n) % n] * h[y];
  return out * g.cell_volume();
}

}  // namespace

TEST_CASE("grid validation") {
  CHECK_THROWS_AS(Grid::make(2, 16, 1.0), InvalidInput);
  CHECK_THROWS_AS(Grid::make(1, 12, 1.0), InvalidInput);
  CHECK_THROWS_AS(Grid::make(1, 4, 1.0), InvalidInput);
  CHECK_THROWS_AS(Grid::make(3, 16, -1.0), InvalidInput);
  Grid g = Grid::make(3, 16, 2.0);
  CHECK(g.size() == 16 * 16 * 16);
  CHECK(g.spacing() == doctest::Approx(0.125));
}

TEST_CASE("laplacian: constant is in the kernel") {
  Grid g = Grid::make(1, 32, 5.0);
  SpectralField f{g, ComplexVector::Constant(g.size(), Complex(2.5, -1.0))};
  SpectralField lf = laplacian(f);
  CHECK(lf.values.cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("laplacian: plane wave is an eigenfunction") {
  Grid g = Grid::make(1, 64, 3.0);
  double k = 2.0 * pi / g.length;
  SpectralField f = sample_field(g, [&](const double* x) {
    return std::exp(Complex(0, k * x[0]));
  });
  SpectralField lf = laplacian(f);
  for (Eigen::Index i = 0; i < g.size(); ++i)
    CHECK(std::abs(lf.values[i] - k * k * f.values[i]) < 1e-10);
}

TEST_CASE("laplacian: 3D plane wave") {
  Grid g = Grid::make(3, 8, 2.0);
  double k = 2.0 * pi / g.length;
  SpectralField f = sample_field(g, [&](const double* x) {
    return std::exp(Complex(0, k * (x[0] + 2 * x[1] - x[2])));
  });
  SpectralField lf = laplacian(f);
  double expect = k * k * (1 + 4 + 1);
  for (Eigen::Index i = 0; i < g.size(); ++i)
    CHECK(std::abs(lf.values[i] - expect * f.values[i]) < 1e-9);
}

TEST_CASE("laplacian matches high-order finite differences on a refined grid") {
  Grid g = Grid::make(1, 32, 7.0);
  TrigSum t = random_trig(g.length, 3, 99);
  SpectralField f = sample_field(g, [&](const double* x) { return t.eval(x[0]); });
  SpectralField lf = laplacian(f);

  // 4th-order central stencil on an 8x refined grid, evaluated at coarse nodes
  const int refine = 8;
  const double h = g.spacing() / refine;
  double max_rel = 0.0;
  for (int i = 0; i < g.n; ++i) {
    double x = g.coord(i);
    Complex fd = (-t.eval(x - 2 * h) + 16.0 * t.eval(x - h) - 30.0 * t.eval(x) +
                  16.0 * t.eval(x + h) - t.eval(x + 2 * h)) /
                 (12.0 * h * h);
    Complex spec = lf.values[i];            // -Lap f
    double rel = std::abs(spec - (-fd)) / (1.0 + std::abs(spec));
    max_rel = std::max(max_rel, rel);
  }
  CHECK(max_rel < 1e-6);
}

TEST_CASE("<f, -Lap f> is real nonnegative") {
  Grid g = Grid::make(1, 64, 2.0);
  for (unsigned seed = 0; seed < 5; ++seed) {
    SpectralField f = random_field(g, seed);
    SpectralField lf = laplacian(f);
    Complex q = inner(f, lf);
    CHECK(std::abs(q.imag()) < 1e-10 * std::abs(q.real()));
    CHECK(q.real() >= 0.0);
    CHECK(q.real() == doctest::Approx(kinetic_energy(f)).epsilon(1e-10));
  }
}

TEST_CASE("convolution: delta identity") {
  Grid g = Grid::make(1, 16, 4.0);
  SpectralField delta = SpectralField::zero(g);
  delta.values[0] = 1.0 / g.cell_volume();
  SpectralField f = random_field(g, 7);
  SpectralField c = convolve(delta, f);
  CHECK((c.values - f.values).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("convolution with ones gives the integral") {
  Grid g = Grid::make(1, 16, 4.0);
  SpectralField ones{g, ComplexVector::Ones(g.size())};
  SpectralField f = random_field(g, 8);
  Complex integral = f.values.sum() * g.cell_volume();
  SpectralField c = convolve(ones, f);
  for (Eigen::Index i = 0; i < g.size(); ++i)
    CHECK(std::abs(c.values[i] - integral) < 1e-10);
}

TEST_CASE("convolution against direct summation") {
  Grid g = Grid::make(1, 16, 3.0);
  SpectralField f = random_field(g, 21), h = random_field(g, 22);
  ComplexVector direct = brute_convolve(g, f.values, h.values);
  SpectralField fast = convolve(f, h);
  CHECK((fast.values - direct).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("convolution commutes") {
  Grid g = Grid::make(1, 32, 2.0);
  for (unsigned seed = 0; seed < 50; ++seed) {
    SpectralField f = random_field(g, 100 + seed), h = random_field(g, 200 + seed);
    SpectralField a = convolve(f, h), b = convolve(h, f);
    CHECK((a.values - b.values).cwiseAbs().maxCoeff() < 1e-12 * a.values.cwiseAbs().maxCoeff());
  }
}

TEST_CASE("grid mismatch is rejected") {
  Grid g1 = Grid::make(1, 16, 3.0), g2 = Grid::make(1, 32, 3.0);
  SpectralField f = random_field(g1, 1), h = random_field(g2, 2);
  CHECK_THROWS_AS(convolve(f, h), InvalidInput);
  CHECK_THROWS_AS(inner(f, h), InvalidInput);
}

TEST_CASE("inner product and norms") {
  Grid g = Grid::make(1, 64, 5.0);
  SpectralField f = random_field(g, 5);
  CHECK(inner(f, f).real() == doctest::Approx(l2_norm(f) * l2_norm(f)).epsilon(1e-12));

  // Parseval against direct coefficient summation
  ComplexVector coeffs = fourier_forward(g, f.values);
  double byk = std::sqrt(coeffs.squaredNorm() * g.cell_volume() / double(g.size()));
  CHECK(l2_norm(f) == doctest::Approx(byk).epsilon(1e-12));

  // normalize: scale invariance and unit norm
  SpectralField f2{g, 2.0 * f.values};
  CHECK((normalized(f2).values - normalized(f).values).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(std::abs(l2_norm(normalized(f)) - 1.0) < 1e-12);

  SpectralField z = SpectralField::zero(g);
  CHECK_THROWS_AS(normalized(z), InvalidInput);
}

TEST_CASE("h1 norm dominates l2 and matches spectral sum") {
  Grid g = Grid::make(1, 32, 4.0);
  SpectralField f = random_field(g, 13);
  double h1 = h1_norm(f), l2 = l2_norm(f);
  CHECK(h1 >= l2);
  CHECK(h1 * h1 == doctest::Approx(l2 * l2 + kinetic_energy(f)).epsilon(1e-12));
}

TEST_CASE("Fourier round-trip") {
  for (auto dim : {1, 3}) {
    Grid g = Grid::make(dim, dim == 1 ? 128 : 8, 2.5);
    SpectralField f = random_field(g, 42);
    ComplexVector rt = fourier_inverse(g, fourier_forward(g, f.values));
    CHECK((rt - f.values).cwiseAbs().maxCoeff() < 1e-12);
  }
}
