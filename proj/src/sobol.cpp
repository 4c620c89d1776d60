#include "hmsmc/sobol.hpp"

#include <bit>
#include <stdexcept>

namespace hmsmc {

namespace {

// Joe-Kuo D(6) primitive polynomials and initial direction numbers for
// dimensions 2..16 (dimension 1 is the van der Corput sequence).
struct JoeKuoRow {
  int s;
  std::uint32_t a;
  std::uint32_t m[7];
};

constexpr JoeKuoRow kJoeKuo[] = {
    {1, 0, {1}},
    {2, 1, {1, 3}},
    {3, 1, {1, 3, 1}},
    {3, 2, {1, 1, 1}},
    {4, 1, {1, 1, 3, 3}},
    {4, 4, {1, 3, 5, 13}},
    {5, 2, {1, 1, 5, 5, 17}},
    {5, 4, {1, 1, 5, 5, 5}},
    {5, 7, {1, 1, 7, 11, 19}},
    {6, 11, {1, 1, 5, 1, 1, 1}},
    {6, 13, {1, 1, 1, 3, 11, 1}},
    {6, 14, {1, 3, 5, 5, 31, 5}},
};

constexpr int kBits = 32;

}  // namespace

SobolSequence::SobolSequence(int dim) : dim_(dim) {
  if (dim < 1 || dim > max_dim)
    throw std::invalid_argument("SobolSequence: dimension out of range 1..13");

  for (int i = 0; i < kBits; ++i) v_[0][i] = 1u << (31 - i);

  for (int d = 1; d < dim_; ++d) {
    const JoeKuoRow& row = kJoeKuo[d - 1];
    const int s = row.s;
    for (int i = 0; i < s && i < kBits; ++i) v_[d][i] = row.m[i] << (31 - i);
    for (int i = s; i < kBits; ++i) {
      std::uint32_t vi = v_[d][i - s] ^ (v_[d][i - s] >> s);
      for (int k = 1; k < s; ++k)
        vi ^= ((row.a >> (s - 1 - k)) & 1u) * v_[d][i - k];
      v_[d][i] = vi;
    }
  }
}

Eigen::VectorXd SobolSequence::next() {
  // Position of the lowest zero bit of index_ (1-based), the Gray-code rule.
  const int c = std::countr_one(index_);
  ++index_;
  Eigen::VectorXd point(dim_);
  for (int d = 0; d < dim_; ++d) {
    x_[d] ^= v_[d][c];
    point[d] = static_cast<double>(x_[d]) * 0x1.0p-32;
  }
  return point;
}

Eigen::MatrixXd SobolSequence::generate(int n, int dim) {
  SobolSequence seq(dim);
  Eigen::MatrixXd out(n, dim);
  for (int i = 0; i < n; ++i) out.row(i) = seq.next().transpose();
  return out;
}

}  // namespace hmsmc
