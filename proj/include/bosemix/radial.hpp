#ifndef BOSEMIX_RADIAL_HPP
#define BOSEMIX_RADIAL_HPP

#include <functional>
#include <string>

#include "bosemix/common.hpp"

namespace bosemix {

// Nonnegative spherically symmetric potential, tabulated on a uniform radial
// grid over [0, R0] and identically zero beyond. Values between nodes are
// linearly interpolated.
class RadialPotential {
 public:
  RadialPotential() = default;
  static RadialPotential from_samples(RealVector samples, double support_radius);
  static RadialPotential from_function(const std::function<double(double)>& fn,
                                       double support_radius, int resolution = 2049);
  // two-column CSV: r, V(r); r must be uniformly spaced starting at 0
  static RadialPotential load_csv(const std::string& path);

  double operator()(double r) const;
  double support_radius() const { return support_radius_; }
  int resolution() const { return int(samples_.size()); }
  double dr() const { return support_radius_ / double(samples_.size() - 1); }
  const RealVector& samples() const { return samples_; }
  bool is_zero() const { return max_ == 0.0; }
  double max_value() const { return max_; }

  // integral over R^3: 4*pi*int_0^R0 V(r) r^2 dr
  double integral_3d() const;

  // N^2 V(N r): same table, support shrunk to R0/N
  RadialPotential scaled(double factor) const;
  RadialPotential operator*(double lambda) const;

 private:
  RealVector samples_;
  double support_radius_ = 1.0;
  double max_ = 0.0;
};

}  // namespace bosemix

#endif
