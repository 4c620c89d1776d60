#include "hmsmc/transform.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace hmsmc {

LogisticMap::LogisticMap(const ParameterSpace& space) {
  if (!space.all_box())
    throw std::invalid_argument("LogisticMap: requires a fully box-bounded space");
  lower_.resize(space.dim());
  upper_.resize(space.dim());
  for (int k = 0; k < space.dim(); ++k) {
    lower_[k] = space.working_lower(k);
    upper_[k] = space.working_upper(k);
  }
}

Eigen::VectorXd LogisticMap::to_normal(const Eigen::VectorXd& theta) const {
  Eigen::VectorXd z(dim());
  for (int k = 0; k < dim(); ++k) {
    const double u = (theta[k] - lower_[k]) / (upper_[k] - lower_[k]);
    const double uc = std::clamp(u, 1e-14, 1.0 - 1e-14);
    z[k] = std::log(uc / (1.0 - uc));
  }
  return z;
}

Eigen::VectorXd LogisticMap::from_normal(const Eigen::VectorXd& z) const {
  Eigen::VectorXd theta(dim());
  for (int k = 0; k < dim(); ++k) {
    const double s = 1.0 / (1.0 + std::exp(-z[k]));
    theta[k] = lower_[k] + (upper_[k] - lower_[k]) * s;
  }
  return theta;
}

double LogisticMap::log_jacobian(const Eigen::VectorXd& theta, const Eigen::VectorXd&) const {
  double lj = 0.0;
  for (int k = 0; k < dim(); ++k) {
    const double a = theta[k] - lower_[k];
    const double b = upper_[k] - theta[k];
    if (!(a > 0.0) || !(b > 0.0)) return -std::numeric_limits<double>::infinity();
    lj += std::log(upper_[k] - lower_[k]) - std::log(a) - std::log(b);
  }
  return lj;
}

}  // namespace hmsmc
