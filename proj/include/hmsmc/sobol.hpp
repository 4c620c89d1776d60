#pragma once

#include <Eigen/Dense>
#include <cstdint>

namespace hmsmc {

// Gray-code Sobol sequence with Joe-Kuo D(6) direction numbers.  The initial
// all-zeros point of the raw sequence is skipped: point index 1 of the
// generator is the first row returned.
class SobolSequence {
 public:
  static constexpr int max_dim = 13;

  explicit SobolSequence(int dim);

  // Next point in [0,1)^dim.
  Eigen::VectorXd next();

  // First n points (after the skipped zero point) as an n x dim matrix.
  static Eigen::MatrixXd generate(int n, int dim);

 private:
  int dim_;
  std::uint64_t index_ = 0;
  std::uint32_t x_[max_dim] = {};
  std::uint32_t v_[max_dim][32];
};

}  // namespace hmsmc
