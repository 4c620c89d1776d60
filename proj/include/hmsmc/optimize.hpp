#pragma once

#include <Eigen/Dense>
#include <functional>

namespace hmsmc {

struct NelderMeadResult {
  Eigen::VectorXd x;
  double value = 0.0;
  int evaluations = 0;
};

// Derivative-free minimization; deterministic given the start point.
NelderMeadResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f,
                             const Eigen::VectorXd& start, double initial_step = 0.5,
                             int max_evals = 2000, double tol = 1e-9);

}  // namespace hmsmc
