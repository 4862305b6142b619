#include "bosemix/radial.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace bosemix {

RadialPotential RadialPotential::from_samples(RealVector samples,
                                              double support_radius) {
  if (samples.size() < 2) throw InvalidInput("RadialPotential: need >= 2 samples");
  if (!(support_radius > 0))
    throw InvalidInput("RadialPotential: support_radius must be positive");
  double max = 0.0;
  for (Eigen::Index i = 0; i < samples.size(); ++i) {
    if (samples[i] < -1e-12 * std::max(1.0, samples.cwiseAbs().maxCoeff()))
      throw InvalidInput("RadialPotential: samples must be nonnegative");
    if (samples[i] < 0) samples[i] = 0;
    max = std::max(max, samples[i]);
  }
  if (samples[samples.size() - 1] > 1e-9 * std::max(1.0, max))
    throw InvalidInput("RadialPotential: V(R0) must vanish (enlarge support_radius)");
  samples[samples.size() - 1] = 0;
  RadialPotential p;
  p.samples_ = std::move(samples);
  p.support_radius_ = support_radius;
  p.max_ = max;
  return p;
}

RadialPotential RadialPotential::from_function(
    const std::function<double(double)>& fn, double support_radius, int resolution) {
  RealVector s(resolution);
  double dr = support_radius / double(resolution - 1);
  for (int i = 0; i < resolution; ++i) s[i] = fn(i * dr);
  s[resolution - 1] = 0;
  return from_samples(std::move(s), support_radius);
}

RadialPotential RadialPotential::load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("RadialPotential: cannot open " + path);
  std::vector<double> rs, vs;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    std::string a, b;
    if (!std::getline(ss, a, ',') || !std::getline(ss, b))
      throw InvalidInput("RadialPotential: malformed CSV line: " + line);
    rs.push_back(std::stod(a));
    vs.push_back(std::stod(b));
  }
  if (rs.size() < 2) throw InvalidInput("RadialPotential: CSV has too few rows");
  if (std::abs(rs.front()) > 1e-12)
    throw InvalidInput("RadialPotential: CSV must start at r = 0");
  double dr = rs[1] - rs[0];
  for (size_t i = 1; i < rs.size(); ++i)
    if (std::abs(rs[i] - rs[i - 1] - dr) > 1e-9 * dr)
      throw InvalidInput("RadialPotential: CSV radii must be uniformly spaced");
  RealVector s = Eigen::Map<RealVector>(vs.data(), Eigen::Index(vs.size()));
  return from_samples(std::move(s), rs.back());
}

double RadialPotential::operator()(double r) const {
  if (r < 0) r = -r;
  if (r >= support_radius_) return 0.0;
  double t = r / dr();
  Eigen::Index i = Eigen::Index(t);
  if (i >= samples_.size() - 1) return 0.0;
  double frac = t - double(i);
  return samples_[i] * (1.0 - frac) + samples_[i + 1] * frac;
}

double RadialPotential::integral_3d() const {
  // trapezoid of V(r) r^2 on the table nodes
  double h = dr(), total = 0.0;
  for (Eigen::Index i = 0; i < samples_.size(); ++i) {
    double r = i * h;
    double w = (i == 0 || i == samples_.size() - 1) ? 0.5 : 1.0;
    total += w * samples_[i] * r * r;
  }
  return 4.0 * pi * total * h;
}

RadialPotential RadialPotential::scaled(double factor) const {
  if (!(factor > 0)) throw InvalidInput("RadialPotential::scaled: factor must be > 0");
  RadialPotential p = *this;
  p.samples_ *= factor * factor;
  p.support_radius_ /= factor;
  p.max_ *= factor * factor;
  return p;
}

RadialPotential RadialPotential::operator*(double lambda) const {
  if (lambda < 0) throw InvalidInput("RadialPotential: negative scaling");
  RadialPotential p = *this;
  p.samples_ *= lambda;
  p.max_ *= lambda;
  return p;
}

}  // namespace bosemix
