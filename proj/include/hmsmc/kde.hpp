#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <vector>

#include "hmsmc/param_space.hpp"
#include "hmsmc/rng.hpp"
#include "hmsmc/transform.hpp"

namespace hmsmc {

// One-dimensional Epanechnikov kernel density estimate with optional
// reflection at box boundaries.  Density, cdf and quantile are exact kernel
// sums (no grid approximation); evaluation uses a sorted-point window.
class MarginalKde {
 public:
  struct Bounds {
    double lo, hi;
  };

  MarginalKde(std::vector<double> points, double bandwidth, std::optional<Bounds> bounds);

  // Silverman's rule adapted to the Epanechnikov kernel:
  // h = 2.345 * min(sd, iqr/1.34) * m^(-1/5).
  static MarginalKde fit(std::vector<double> points, std::optional<Bounds> bounds);

  double density(double x) const;
  double cdf(double x) const;
  // Inverse cdf to 1e-9 absolute tolerance in cdf units.
  double quantile(double u) const;
  // Draw from the fitted density (support point + kernel noise, reflected).
  double sample(RngStream& stream) const;

  double bandwidth() const { return h_; }
  bool bounded() const { return bounds_.has_value(); }
  double support_lo() const { return support_lo_; }
  double support_hi() const { return support_hi_; }
  std::size_t point_count() const { return points_.size(); }

 private:
  double base_density(double x) const;
  double base_cdf(double x) const;

  std::vector<double> points_;  // sorted
  double h_;
  std::optional<Bounds> bounds_;
  double support_lo_, support_hi_;
};

// Per-dimension kde maps to approximately-standard-normal coordinates
// (Algorithm: z_k = Phi^-1(F_k(theta_k)), inverted by kde quantiles).
class MarginalTransform final : public MarginalMap {
 public:
  explicit MarginalTransform(std::vector<MarginalKde> kdes);

  int dim() const override { return static_cast<int>(kdes_.size()); }
  const MarginalKde& kde(int k) const { return kdes_[k]; }

  Eigen::VectorXd to_normal(const Eigen::VectorXd& theta) const override;
  Eigen::VectorXd from_normal(const Eigen::VectorXd& z) const override;
  double log_jacobian(const Eigen::VectorXd& theta, const Eigen::VectorXd& z) const override;

 private:
  std::vector<MarginalKde> kdes_;
};

// Fit one kde per dimension on a seeded random subset of the particles
// (bounded dimensions get reflected kdes on the working-scale box).
MarginalTransform fit_marginals(const Eigen::MatrixXd& particles, const ParameterSpace& space,
                                int subset_size, std::uint64_t seed);

}  // namespace hmsmc
