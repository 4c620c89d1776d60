#pragma once

#include <Eigen/Dense>

#include "hmsmc/param_space.hpp"

namespace hmsmc {

// Bijective per-dimension map between parameter coordinates and (roughly)
// standard-normal coordinates, with the log Jacobian needed by the MH ratio.
class MarginalMap {
 public:
  virtual ~MarginalMap() = default;
  virtual int dim() const = 0;
  virtual Eigen::VectorXd to_normal(const Eigen::VectorXd& theta) const = 0;
  virtual Eigen::VectorXd from_normal(const Eigen::VectorXd& z) const = 0;
  // sum_k log dz_k/dtheta_k evaluated at theta (z = to_normal(theta) supplied
  // by the caller to avoid recomputation); -inf where the map degenerates.
  virtual double log_jacobian(const Eigen::VectorXd& theta, const Eigen::VectorXd& z) const = 0;
};

// Fixed scaled-logit map for box-bounded spaces: z = logit((theta-lo)/(hi-lo)).
class LogisticMap final : public MarginalMap {
 public:
  explicit LogisticMap(const ParameterSpace& space);

  int dim() const override { return static_cast<int>(lower_.size()); }
  Eigen::VectorXd to_normal(const Eigen::VectorXd& theta) const override;
  Eigen::VectorXd from_normal(const Eigen::VectorXd& z) const override;
  double log_jacobian(const Eigen::VectorXd& theta, const Eigen::VectorXd& z) const override;

 private:
  Eigen::VectorXd lower_, upper_;
};

}  // namespace hmsmc
