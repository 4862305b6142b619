#ifndef BOSEMIX_COMMON_HPP
#define BOSEMIX_COMMON_HPP

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace bosemix {

using Real = double;
using Complex = std::complex<double>;
using RealVector = Eigen::VectorXd;
using ComplexVector = Eigen::VectorXcd;
using RealMatrix = Eigen::MatrixXd;
using ComplexMatrix = Eigen::MatrixXcd;

inline constexpr double pi = 3.14159265358979323846;

// Thrown on invalid or inconsistent inputs (bad config, precondition failure).
struct InvalidInput : std::runtime_error {
  explicit InvalidInput(const std::string& what) : std::runtime_error(what) {}
};

// Thrown when an iterative numerical procedure fails to meet its target.
struct NumericalFailure : std::runtime_error {
  explicit NumericalFailure(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace bosemix

#endif
