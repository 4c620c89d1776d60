#include "hmsmc/models/toy.hpp"

#include <cmath>

namespace hmsmc {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

double toy_function(double x1, double x2) {
  const double s1 = std::sin(x1 * x1 / kPi);
  const double s2 = std::sin(2.0 * x2 * x2 / kPi);
  return -std::sin(x1) * s1 * s1 - std::sin(x2) * s2 * s2;
}

ParameterSpace ToyModel::space() const {
  Eigen::VectorXd lo = Eigen::VectorXd::Zero(2);
  Eigen::VectorXd hi = Eigen::VectorXd::Constant(2, kPi);
  return ParameterSpace::box({"x1", "x2"}, lo, hi);
}

double ToyModel::simulate(const Eigen::VectorXd& theta_working, RngStream&) const {
  return toy_function(theta_working[0], theta_working[1]);
}

}  // namespace hmsmc
