#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "common/test_stats.hpp"
#include "hmsmc/rng.hpp"

using namespace hmsmc;

TEST_CASE("identical keys give identical streams") {
  RngStream a(42, streams::test, 3, 7);
  RngStream b(42, streams::test, 3, 7);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("different keys give different streams") {
  RngStream a(42, streams::test, 3, 7);
  RngStream b(42, streams::test, 3, 8);
  int same = 0;
  for (int i = 0; i < 64; ++i)
    if (a.next_u64() == b.next_u64()) ++same;
  CHECK(same == 0);
}

TEST_CASE("uniform draws pass a KS test") {
  RngStream s(1, streams::test);
  std::vector<double> u(20000);
  for (auto& x : u) x = s.uniform();
  CHECK(test_stats::ks_test_uniform01(u) > 0.01);
}

TEST_CASE("normal draws have the right moments and pass KS") {
  RngStream s(2, streams::test);
  std::vector<double> z(20000);
  for (auto& x : z) x = s.normal();
  CHECK(std::abs(test_stats::mean_of(z)) < 3.0 / std::sqrt(20000.0));
  CHECK(test_stats::sd_of(z) == doctest::Approx(1.0).epsilon(0.03));
  CHECK(test_stats::ks_test(z, test_stats::std_normal_cdf) > 0.01);
}

TEST_CASE("gamma draws match mean and variance") {
  RngStream s(3, streams::test);
  const double shape = 0.8, scale = 8.0;
  std::vector<double> g(40000);
  for (auto& x : g) x = s.gamma(shape, scale);
  CHECK(test_stats::mean_of(g) == doctest::Approx(shape * scale).epsilon(0.03));
  CHECK(test_stats::sd_of(g) == doctest::Approx(std::sqrt(shape) * scale).epsilon(0.05));
}
