#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "hmsmc/rng.hpp"

namespace hmsmc {

enum class PriorKind { uniform_box, half_cauchy };

// Box-bounded or half-Cauchy parameter domain with prior density, space
// filling designs and the canonical per-dimension working-scale transforms.
//
// Half-Cauchy dimensions (support (0,inf), density 4/pi * 1/(1+4c^2), i.e.
// scale 1/2) are represented on the log scale in "working" coordinates; box
// dimensions are unchanged.  All sampler machinery operates on working
// coordinates.
class ParameterSpace {
 public:
  struct Dimension {
    std::string name;
    PriorKind prior = PriorKind::uniform_box;
    double lower = 0.0;
    double upper = 1.0;  // ignored for half_cauchy (support is (0,inf))
  };

  explicit ParameterSpace(std::vector<Dimension> dims);

  static ParameterSpace box(const std::vector<std::string>& names,
                            const Eigen::VectorXd& lower,
                            const Eigen::VectorXd& upper);
  static ParameterSpace half_cauchy(const std::vector<std::string>& names);

  int dim() const { return static_cast<int>(dims_.size()); }
  const Dimension& dimension(int k) const { return dims_[k]; }
  bool all_box() const;

  // log prior density in the original parameterization; -inf outside support.
  double log_prior_density(const Eigen::VectorXd& theta) const;

  // log prior density in working coordinates (includes the log-scale Jacobian
  // for half-Cauchy dimensions).
  double log_prior_working(const Eigen::VectorXd& theta_working) const;

  Eigen::VectorXd to_working(const Eigen::VectorXd& theta) const;
  Eigen::VectorXd from_working(const Eigen::VectorXd& theta_working) const;

  // Working-scale box bounds; half-Cauchy dimensions report unbounded.
  bool working_bounded(int k) const;
  double working_lower(int k) const;
  double working_upper(int k) const;

  // i.i.d. prior draws, original scale, n x p.
  Eigen::MatrixXd sample_prior(int n, RngStream& stream) const;

  bool in_support(const Eigen::VectorXd& theta) const;

 private:
  std::vector<Dimension> dims_;
};

struct DesignSpec {
  enum class Scheme { sobol_qmc, pseudo_random };
  int count = 0;
  Scheme scheme = Scheme::sobol_qmc;
  std::uint64_t seed = 0;
};

// Space filling design over the prior, original scale, N x p.  Sobol points
// are mapped through per-dimension inverse prior cdfs; deterministic given
// the spec.
Eigen::MatrixXd initial_design(const ParameterSpace& space, const DesignSpec& spec);

}  // namespace hmsmc
