#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>
#include <vector>

#include "hmsmc/sobol.hpp"

using namespace hmsmc;

TEST_CASE("first points match hand-computed direction-number vectors") {
  // Gray-code sequence with the zero point skipped; dimensions 1-2 worked out
  // by hand from the direction numbers (dim 2: s=1, a=0, m=(1)).
  const double expected[8][2] = {{0.5, 0.5},     {0.75, 0.25},    {0.25, 0.75},
                                 {0.375, 0.375}, {0.875, 0.875},  {0.625, 0.125},
                                 {0.125, 0.625}, {0.1875, 0.3125}};
  const auto pts = SobolSequence::generate(8, 2);
  for (int i = 0; i < 8; ++i) {
    CHECK(pts(i, 0) == doctest::Approx(expected[i][0]).epsilon(1e-12));
    CHECK(pts(i, 1) == doctest::Approx(expected[i][1]).epsilon(1e-12));
  }
}

TEST_CASE("repeated generation is bit-exact") {
  const auto a = SobolSequence::generate(512, 5);
  const auto b = SobolSequence::generate(512, 5);
  CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("every dimension is a base-2 (0,1)-sequence") {
  // For valid direction numbers, points 1..2^m-1 plus the skipped zero point
  // occupy each dyadic interval [j/2^m, (j+1)/2^m) exactly once.
  const int m = 7;
  const int n = (1 << m) - 1;  // generator indices 1..2^m-1
  const auto pts = SobolSequence::generate(n, SobolSequence::max_dim);
  for (int d = 0; d < SobolSequence::max_dim; ++d) {
    std::set<int> cells;
    cells.insert(0);  // the skipped all-zeros point occupies cell 0
    for (int i = 0; i < n; ++i)
      cells.insert(static_cast<int>(pts(i, d) * (1 << m)));
    CHECK(static_cast<int>(cells.size()) == (1 << m));
  }
}

TEST_CASE("2^20-point generation has full row count and stays in the unit cube") {
  const int n = 1 << 20;
  const auto pts = SobolSequence::generate(n, 2);
  CHECK(pts.rows() == n);
  CHECK(pts.minCoeff() >= 0.0);
  CHECK(pts.maxCoeff() < 1.0);
}
