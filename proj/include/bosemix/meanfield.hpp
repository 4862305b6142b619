#ifndef BOSEMIX_MEANFIELD_HPP
#define BOSEMIX_MEANFIELD_HPP

#include <cstdint>
#include <optional>
#include <vector>

#include "bosemix/grid.hpp"
#include "bosemix/radial.hpp"

namespace bosemix {

enum class Regime { GP, MF };

// Two-component model: traps, interactions, population ratios. Interactions
// are radial potentials sampled onto the grid with the periodic minimum
// image; absent potentials mean V = 0.
struct ModelSpec {
  Grid grid;
  RealVector trap1, trap2;
  std::optional<RadialPotential> v1, v2, v12;
  double c1 = 0.5, c2 = 0.5;
  Regime regime = Regime::MF;
  // GP couplings; either supplied directly or derived from v1/v2/v12
  double a1 = 0.0, a2 = 0.0, a12 = 0.0;
  bool a_from_potentials = false;
  double confinement_margin = 1.0;
  bool check_assumptions = true;  // trap confinement + MF Fourier positivity

  void validate() const;
};

struct OrbitalPair {
  SpectralField u, v;
};

struct MinimizationReport {
  OrbitalPair orbitals;
  double energy = 0.0;
  double residual = 0.0;
  Eigen::Index iterations = 0;
  std::vector<double> energy_trace;
  std::vector<double> residual_trace;
  double mu1 = 0.0, mu2 = 0.0;
  double boundary_amplitude = 0.0;  // max |orbital| on the outer shell / peak
  bool converged = false;
};

struct MinimizeOptions {
  double tol = 1e-8;
  Eigen::Index max_iter = 100000;
  double precondition_scale = 1.0;  // sigma in the (1 + sigma k^2)^-1 kernel
  bool coarse_start = true;         // warm-start from a half-resolution solve
};

struct MiscibilityReport {
  bool ok = true;
  // flat spectral indices where the MF assumption fails
  std::vector<Eigen::Index> violations;
};

// Caches the interaction kernels in Fourier space; all mean-field operations
// run against one of these.
class MeanFieldProblem {
 public:
  explicit MeanFieldProblem(ModelSpec spec);

  const ModelSpec& spec() const { return spec_; }
  const Grid& grid() const { return spec_.grid; }

  // Energy functional at normalized orbitals (GP or Hartree per regime).
  double energy(const OrbitalPair& orb) const;
  // Same expression without the normalization precondition (the quantity the
  // gradient differentiates).
  double functional_value(const OrbitalPair& orb) const;
  // d E / d conj(orbital); directional derivative is 2 Re<delta, grad>.
  OrbitalPair energy_gradient(const OrbitalPair& orb) const;
  std::pair<double, double> chemical_potentials(const OrbitalPair& orb) const;
  // || h1 u || + || h2 v || with the chemical potentials of `orb` inserted
  double residual(const OrbitalPair& orb) const;

  // W_alpha such that h_alpha f = -Lap f + W_alpha .* f at these orbitals
  RealVector effective_potential1(const OrbitalPair& orb) const;
  RealVector effective_potential2(const OrbitalPair& orb) const;

  // interaction kernel DFTs on the grid lattice (zero vectors when absent)
  const RealVector& v1_spectrum() const { return v1_hat_; }
  const RealVector& v2_spectrum() const { return v2_hat_; }
  const RealVector& v12_spectrum() const { return v12_hat_; }

  MiscibilityReport miscibility() const;

  // Midpoint convexity defect of D[f,g] = E[sqrt f, sqrt g] on densities.
  double convexity_gap(const RealVector& f, const RealVector& g,
                       const RealVector& r, const RealVector& s,
                       bool interaction_only = false) const;

 private:
  friend MinimizationReport minimize(const MeanFieldProblem&, std::uint64_t,
                                     const MinimizeOptions&);
  double density_energy(const RealVector& rho_u, const RealVector& rho_v,
                        double kin_u, double kin_v, bool interaction_only) const;
  RealVector convolve_spectrum(const RealVector& kernel_hat,
                               const RealVector& density) const;

  ModelSpec spec_;
  RealVector v1_hat_, v2_hat_, v12_hat_;
};

MinimizationReport minimize(const MeanFieldProblem& problem, std::uint64_t seed,
                            const MinimizeOptions& opts = {});

// Thrown when the iteration cap is exceeded; carries the best run so far.
struct MinimizeFailure : NumericalFailure {
  MinimizeFailure(const std::string& what, MinimizationReport best_so_far)
      : NumericalFailure(what), best(std::move(best_so_far)) {}
  MinimizationReport best;
};

bool miscibility_gp(double a1, double a2, double a12);

// ratio of max |values| on the outer 10% shell to the global peak
double boundary_amplitude_ratio(const SpectralField& f);

// confining-trap proxy: min over the outer shell exceeds the central minimum
// by at least `margin`
bool trap_confining(const Grid& g, const RealVector& trap, double margin);

RealVector harmonic_trap(const Grid& g, double amplitude);
RealVector sample_radial_kernel(const Grid& g, const RadialPotential& V);

}  // namespace bosemix

#endif
