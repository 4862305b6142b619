#include "bosemix/scattering.hpp"

#include <cmath>
#include <vector>

namespace bosemix {

namespace {

// Integrates w'' = q(r) w with q = V/2 - lambda, w(0)=0, w'(0)=1, by RK4 over
// the potential's table with `substeps` stages per table interval. The
// equation is linear, so (w, w') is renormalized whenever it grows past
// 1e200 (steep barriers reach e^{sqrt(V/2) r} quickly); `logs` holds the
// per-node log of the removed factor. Ratios taken at a single node are
// unaffected; cross-node values need exp(logs[i] - logs[j]) reweighting.
struct RadialSolution {
  std::vector<double> r, w, dw, logs;
};

RadialSolution integrate_radial(const RadialPotential& V, double lambda,
                                int substeps) {
  const double h = V.dr() / substeps;
  const Eigen::Index steps = Eigen::Index(V.resolution() - 1) * substeps;
  RadialSolution sol;
  sol.r.reserve(steps + 1);
  sol.w.reserve(steps + 1);
  sol.dw.reserve(steps + 1);
  sol.logs.reserve(steps + 1);
  double w = 0.0, dw = 1.0, r = 0.0, log_scale = 0.0;
  sol.r.push_back(r);
  sol.w.push_back(w);
  sol.dw.push_back(dw);
  sol.logs.push_back(log_scale);
  auto q = [&](double rr) { return 0.5 * V(rr) - lambda; };
  for (Eigen::Index s = 0; s < steps; ++s) {
    double k1w = dw, k1d = q(r) * w;
    double k2w = dw + 0.5 * h * k1d, k2d = q(r + 0.5 * h) * (w + 0.5 * h * k1w);
    double k3w = dw + 0.5 * h * k2d, k3d = q(r + 0.5 * h) * (w + 0.5 * h * k2w);
    double k4w = dw + h * k3d, k4d = q(r + h) * (w + h * k3w);
    w += h / 6.0 * (k1w + 2 * k2w + 2 * k3w + k4w);
    dw += h / 6.0 * (k1d + 2 * k2d + 2 * k3d + k4d);
    double mag = std::max(std::abs(w), std::abs(dw));
    if (mag > 1e200) {
      w /= mag;
      dw /= mag;
      log_scale += std::log(mag);
    }
    r = (s + 1) * h;
    sol.r.push_back(r);
    sol.w.push_back(w);
    sol.dw.push_back(dw);
    sol.logs.push_back(log_scale);
  }
  return sol;
}

// Least-squares line through w sampled on [R0, 2R0]; returns (slope, intercept).
// Beyond the support w is exactly linear, the fit just averages out roundoff.
std::pair<double, double> fit_exterior_line(double R0, double wR, double dwR) {
  const int npts = 65;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (int j = 0; j < npts; ++j) {
    double r = R0 + j * (R0 / (npts - 1));
    double wr = wR + dwR * (r - R0);
    sx += r; sy += wr; sxx += r * r; sxy += r * wr;
  }
  double n = npts;
  double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  double intercept = (sy - slope * sx) / n;
  return {slope, intercept};
}

double extract_a(const RadialPotential& V, int substeps) {
  RadialSolution sol = integrate_radial(V, 0.0, substeps);
  auto [slope, intercept] = fit_exterior_line(V.support_radius(), sol.w.back(),
                                              sol.dw.back());
  return -intercept / slope;
}

}  // namespace

ScatteringResult scattering_length(const RadialPotential& V,
                                   const ScatteringOptions& opts) {
  ScatteringResult res;
  const double R0 = V.support_radius();
  if (V.is_zero()) {
    res.a = 0.0;
    res.r_nodes = RealVector::LinSpaced(129, 0.0, 2 * R0);
    res.profile = RealVector::Ones(129);
    return res;
  }

  int substeps = opts.substeps;
  double a_coarse = extract_a(V, substeps);
  double a_fine = extract_a(V, 2 * substeps);
  double step_err = std::abs(a_fine - a_coarse) / 15.0;
  const double scale = std::max(std::abs(a_fine), 1e-3 * R0);
  int doublings = 0;
  while (step_err > opts.tol * scale) {
    if (++doublings > 6)
      throw NumericalFailure(
          "scattering_length: ODE step did not converge (a ~= " +
          std::to_string(a_fine) + ", step error " + std::to_string(step_err) +
          "); refine the potential table");
    substeps *= 2;
    a_coarse = a_fine;
    a_fine = extract_a(V, 2 * substeps);
    step_err = std::abs(a_fine - a_coarse) / 15.0;
  }
  res.a = (16.0 * a_fine - a_coarse) / 15.0;
  res.residual = step_err;

  // profile and the defining energy integral on the finest run
  RadialSolution sol = integrate_radial(V, 0.0, 2 * substeps);
  auto [slope, intercept] = fit_exterior_line(R0, sol.w.back(), sol.dw.back());
  (void)intercept;
  const size_t m = sol.r.size();
  const int next = 64;
  res.r_nodes.resize(Eigen::Index(m + next));
  res.profile.resize(Eigen::Index(m + next));
  const double log_end = sol.logs.back();
  res.r_nodes[0] = 0.0;
  res.profile[0] = sol.dw[0] * std::exp(sol.logs[0] - log_end) / slope;
  for (size_t i = 1; i < m; ++i) {
    res.r_nodes[Eigen::Index(i)] = sol.r[i];
    res.profile[Eigen::Index(i)] =
        sol.w[i] * std::exp(sol.logs[i] - log_end) / (slope * sol.r[i]);
  }
  for (int j = 1; j <= next; ++j) {
    double r = R0 + j * (R0 / next);
    res.r_nodes[Eigen::Index(m - 1 + j)] = r;
    res.profile[Eigen::Index(m - 1 + j)] = 1.0 - res.a / r;
  }

  // E/4pi = int (f'^2 + V f^2 / 2) r^2 dr + a^2/R0 should reproduce a
  double h = sol.r[1] - sol.r[0];
  double acc = 0.0;
  for (size_t i = 1; i < m; ++i) {
    double r = sol.r[i];
    double rescale = std::exp(sol.logs[i] - log_end);
    double f = sol.w[i] * rescale / (slope * r);
    double df = (sol.dw[i] * r - sol.w[i]) * rescale / (slope * r * r);
    double integrand = (df * df + 0.5 * V(r) * f * f) * r * r;
    acc += (i == m - 1 ? 0.5 : 1.0) * integrand;
  }
  double energy = acc * h + res.a * res.a / R0;
  res.energy_residual = std::abs(energy - res.a);
  return res;
}

double born_approximation(const RadialPotential& V) {
  return V.integral_3d() / (8.0 * pi);
}

NeumannResult neumann_ground(const RadialPotential& V, double N, double ell) {
  if (!(N > 0) || !(ell > 0))
    throw InvalidInput("neumann_ground: N and ell must be positive");
  const double r1 = V.support_radius() / N;
  if (!(r1 < ell))
    throw InvalidInput(
        "neumann_ground: support violation, R0/N = " + std::to_string(r1) +
        " must be < ell = " + std::to_string(ell));

  NeumannResult res;
  if (V.is_zero()) {
    res.r_nodes = RealVector::LinSpaced(513, ell / 512, ell);
    res.profile = RealVector::Ones(513);
    res.lambda = 0.0;
    return res;
  }

  const RadialPotential Vs = V.scaled(N);
  const int substeps = 4;

  // value and slope of w at ell, continued analytically through the
  // potential-free region [r1, ell]
  auto at_ell = [&](double lambda, const RadialSolution& sol) {
    double w1 = sol.w.back(), d1 = sol.dw.back();
    double L = ell - r1;
    if (lambda <= 0) return std::pair<double, double>{w1 + d1 * L, d1};
    double s = std::sqrt(lambda);
    double c = std::cos(s * L), sn = std::sin(s * L);
    return std::pair<double, double>{w1 * c + d1 * sn / s, -w1 * s * sn + d1 * c};
  };
  // Neumann condition for f = w/r at ell: ell w'(ell) = w(ell)
  auto shoot = [&](double lambda) {
    RadialSolution sol = integrate_radial(Vs, lambda, substeps);
    auto [wl, dl] = at_ell(lambda, sol);
    return ell * dl - wl;
  };

  double a = scattering_length(V).a;
  double hi = 10.0 * 3.0 * a / (N * ell * ell * ell);
  double g0 = shoot(0.0);
  if (!(g0 > 0))
    throw NumericalFailure("neumann_ground: unexpected sign at lambda = 0");

  // march to the first sign change, then bisect
  const int coarse = 64;
  double lo = 0.0, glo = g0, hi_found = -1.0;
  for (int rounds = 0; rounds < 20 && hi_found < 0; ++rounds) {
    for (int j = 1; j <= coarse; ++j) {
      double lam = lo + (hi - lo) * j / coarse;
      double g = shoot(lam);
      if (g <= 0) {
        hi_found = lam;
        break;
      }
      lo = lam;
      glo = g;
    }
    if (hi_found < 0) {
      lo = hi;
      hi *= 2;
    }
  }
  (void)glo;
  if (hi_found < 0)
    throw NumericalFailure("neumann_ground: no eigenvalue found below bracket");
  double hi_b = hi_found;
  for (int it = 0; it < 200 && (hi_b - lo) > 1e-13 * hi_b; ++it) {
    double mid = 0.5 * (lo + hi_b);
    if (shoot(mid) > 0)
      lo = mid;
    else
      hi_b = mid;
  }
  res.lambda = 0.5 * (lo + hi_b);

  RadialSolution sol = integrate_radial(Vs, res.lambda, substeps);
  auto [wl, dl] = at_ell(res.lambda, sol);
  (void)dl;
  double norm = ell / wl;  // f(ell) = 1
  const size_t m = sol.r.size();
  const int next = 512;
  res.r_nodes.resize(Eigen::Index(m - 1 + next));
  res.profile.resize(Eigen::Index(m - 1 + next));
  for (size_t i = 1; i < m; ++i) {
    res.r_nodes[Eigen::Index(i - 1)] = sol.r[i];
    res.profile[Eigen::Index(i - 1)] =
        norm * sol.w[i] * std::exp(sol.logs[i] - sol.logs.back()) / sol.r[i];
  }
  double s = std::sqrt(res.lambda);
  double w1 = sol.w.back(), d1 = sol.dw.back();
  for (int j = 1; j <= next; ++j) {
    double r = r1 + j * (ell - r1) / next;
    double w = w1 * std::cos(s * (r - r1)) + d1 * std::sin(s * (r - r1)) / s;
    res.r_nodes[Eigen::Index(m - 2 + j)] = r;
    res.profile[Eigen::Index(m - 2 + j)] = norm * w / r;
  }
  return res;
}

}  // namespace bosemix
