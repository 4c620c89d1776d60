#pragma once

#include "hmsmc/models/model.hpp"

namespace hmsmc {

// y = -sin(x1) sin(x1^2/pi)^2 - sin(x2) sin(2 x2^2/pi)^2 on (0,pi)^2.
double toy_function(double x1, double x2);

class ToyModel final : public SimulatorModel {
 public:
  Kind kind() const override { return Kind::deterministic; }
  ParameterSpace space() const override;
  double simulate(const Eigen::VectorXd& theta_working, RngStream& stream) const override;
};

}  // namespace hmsmc
