#include "hmsmc/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace hmsmc {

namespace {
constexpr double kSqrt2 = 1.4142135623730950488;
constexpr double kLog2Pi = 1.8378770664093454836;
constexpr double kSqrt2Pi = 2.5066282746310005024;
}  // namespace

double norm_cdf(double z) { return 0.5 * std::erfc(-z / kSqrt2); }

double norm_logpdf(double z) { return -0.5 * (z * z + kLog2Pi); }

double norm_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw std::domain_error("norm_quantile: p outside (0,1)");

  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double plow = 0.02425;

  double x;
  if (p < plow) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - plow) {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log(1.0 - p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }

  // One Halley step against erfc-based cdf.
  const double e = norm_cdf(x) - p;
  const double u = e * kSqrt2Pi * std::exp(0.5 * x * x);
  x -= u / (1.0 + 0.5 * x * u);
  return x;
}

double quantile_order_stat(const std::vector<double>& values, double alpha) {
  if (values.empty()) throw std::invalid_argument("quantile_order_stat: empty input");
  const auto n = values.size();
  auto rank = static_cast<std::size_t>(std::ceil(alpha * static_cast<double>(n)));
  rank = std::clamp<std::size_t>(rank, 1, n);
  std::vector<double> work(values);
  std::nth_element(work.begin(), work.begin() + (rank - 1), work.end());
  return work[rank - 1];
}

double empirical_quantile(std::vector<double> values, double q) {
  if (values.empty()) throw std::invalid_argument("empirical_quantile: empty input");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = static_cast<std::size_t>(std::ceil(pos));
  const double frac = pos - static_cast<double>(lo);
  return values[lo] * (1.0 - frac) + values[hi] * frac;
}

double sample_sd(const Vec& x) {
  const auto n = x.size();
  if (n < 2) return 0.0;
  const double mean = x.mean();
  return std::sqrt((x.array() - mean).square().sum() / static_cast<double>(n - 1));
}

Mat sample_covariance(const Mat& rows) {
  const auto n = rows.rows();
  if (n < 2) throw std::invalid_argument("sample_covariance: need at least 2 rows");
  const Eigen::RowVectorXd mean = rows.colwise().mean();
  const Mat centered = rows.rowwise() - mean;
  // population normalization: duplicating every row leaves the result unchanged
  return (centered.transpose() * centered) / static_cast<double>(n);
}

}  // namespace hmsmc
