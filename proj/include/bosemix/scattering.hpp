#ifndef BOSEMIX_SCATTERING_HPP
#define BOSEMIX_SCATTERING_HPP

#include "bosemix/radial.hpp"

namespace bosemix {

// s-wave scattering data of a radial potential. The profile f solves the
// zero-energy equation -Lap f + (1/2) V f = 0 with f -> 1 at infinity;
// 4*pi*a equals the energy integral of that profile.
struct ScatteringResult {
  double a = 0.0;
  RealVector r_nodes;   // radial nodes over [0, 2*R0]
  RealVector profile;   // f on those nodes
  double residual = 0.0;        // Richardson step-halving estimate on a
  double energy_residual = 0.0; // |energy integral / 4pi - a|
};

struct ScatteringOptions {
  int substeps = 2;      // RK4 steps per potential table interval
  double tol = 1e-9;     // required step-convergence of a
};

ScatteringResult scattering_length(const RadialPotential& V,
                                   const ScatteringOptions& opts = {});

// First Born approximation (8*pi)^{-1} * int_{R^3} V.
double born_approximation(const RadialPotential& V);

// Ground pair of the Neumann problem -Lap f + (1/2) N^2 V(N.) f = lambda f
// on the ball of radius ell, normalized with f(ell) = 1 and extended by 1.
struct NeumannResult {
  RealVector r_nodes;  // over (0, ell]
  RealVector profile;  // f on those nodes
  double lambda = 0.0;
};

NeumannResult neumann_ground(const RadialPotential& V, double N, double ell);

}  // namespace bosemix

#endif
