#include "hmsmc/kde.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "hmsmc/stats.hpp"

namespace hmsmc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kCdfClamp = 1e-12;
// Inversion tolerance in cdf units.  Tighter than the 1e-9 contract because a
// cdf-scale error of e maps to a z-scale error of e/phi(z), which at z = 4
// already exceeds 1e-6 when e = 1e-9.
constexpr double kQuantileTol = 1e-12;

// Epanechnikov kernel on [-1,1] and its cdf.
double kernel(double u) { return std::abs(u) >= 1.0 ? 0.0 : 0.75 * (1.0 - u * u); }
double kernel_cdf(double u) {
  if (u <= -1.0) return 0.0;
  if (u >= 1.0) return 1.0;
  return 0.5 + 0.75 * u - 0.25 * u * u * u;
}

}  // namespace

MarginalKde::MarginalKde(std::vector<double> points, double bandwidth,
                         std::optional<Bounds> bounds)
    : points_(std::move(points)), h_(bandwidth), bounds_(bounds) {
  if (points_.empty()) throw std::invalid_argument("MarginalKde: no support points");
  if (!(h_ > 0.0)) throw std::invalid_argument("MarginalKde: bandwidth must be positive");
  std::sort(points_.begin(), points_.end());
  if (bounds_) {
    if (!(bounds_->lo < bounds_->hi)) throw std::invalid_argument("MarginalKde: empty bounds");
    if (h_ > bounds_->hi - bounds_->lo)
      throw std::invalid_argument("MarginalKde: bandwidth exceeds bounded support width");
    if (points_.front() < bounds_->lo || points_.back() > bounds_->hi)
      throw std::invalid_argument("MarginalKde: support points outside bounds");
    support_lo_ = bounds_->lo;
    support_hi_ = bounds_->hi;
  } else {
    support_lo_ = points_.front() - h_;
    support_hi_ = points_.back() + h_;
  }
}

MarginalKde MarginalKde::fit(std::vector<double> points, std::optional<Bounds> bounds) {
  const auto m = points.size();
  if (m < 2) throw std::invalid_argument("MarginalKde::fit: need at least 2 points");

  std::vector<double> sorted(points);
  std::sort(sorted.begin(), sorted.end());
  if (sorted.front() == sorted.back())
    throw std::invalid_argument("MarginalKde::fit: degenerate marginal (fewer than 2 distinct values)");

  double mean = 0.0;
  for (const double x : sorted) mean += x;
  mean /= static_cast<double>(m);
  double var = 0.0;
  for (const double x : sorted) var += (x - mean) * (x - mean);
  var /= static_cast<double>(m - 1);
  const double sd = std::sqrt(var);

  const double q1 = sorted[static_cast<std::size_t>(0.25 * static_cast<double>(m - 1))];
  const double q3 = sorted[static_cast<std::size_t>(0.75 * static_cast<double>(m - 1))];
  const double iqr = q3 - q1;
  const double a = iqr > 0.0 ? std::min(sd, iqr / 1.34) : sd;

  const double h = 2.345 * a * std::pow(static_cast<double>(m), -0.2);
  return MarginalKde(std::move(points), h, bounds);
}

double MarginalKde::base_density(double x) const {
  // window of points within (x-h, x+h)
  const auto lo = std::lower_bound(points_.begin(), points_.end(), x - h_);
  const auto hi = std::upper_bound(points_.begin(), points_.end(), x + h_);
  double s = 0.0;
  for (auto it = lo; it != hi; ++it) s += kernel((x - *it) / h_);
  return s / (static_cast<double>(points_.size()) * h_);
}

double MarginalKde::base_cdf(double x) const {
  const auto lo = std::lower_bound(points_.begin(), points_.end(), x - h_);
  const auto hi = std::upper_bound(points_.begin(), points_.end(), x + h_);
  double s = static_cast<double>(lo - points_.begin());  // fully below the window
  for (auto it = lo; it != hi; ++it) s += kernel_cdf((x - *it) / h_);
  return s / static_cast<double>(points_.size());
}

double MarginalKde::density(double x) const {
  if (!bounds_) return base_density(x);
  if (x < bounds_->lo || x > bounds_->hi) return 0.0;
  return base_density(x) + base_density(2.0 * bounds_->lo - x) +
         base_density(2.0 * bounds_->hi - x);
}

double MarginalKde::cdf(double x) const {
  if (!bounds_) return base_cdf(x);
  if (x <= bounds_->lo) return 0.0;
  if (x >= bounds_->hi) return 1.0;
  return base_cdf(x) - base_cdf(2.0 * bounds_->lo - x) + base_cdf(2.0 * bounds_->hi - bounds_->lo) -
         base_cdf(2.0 * bounds_->hi - x);
}

double MarginalKde::quantile(double u) const {
  u = std::clamp(u, 0.0, 1.0);
  double a = support_lo_, b = support_hi_;
  if (u <= 0.0) return a;
  if (u >= 1.0) return b;

  double x = 0.5 * (a + b);
  for (int iter = 0; iter < 200; ++iter) {
    const double f = cdf(x) - u;
    if (std::abs(f) <= kQuantileTol) return x;
    if (f > 0.0)
      b = x;
    else
      a = x;
    // Newton step when it stays inside the bracket, bisection otherwise.
    const double d = density(x);
    double next = d > 1e-300 ? x - f / d : 0.5 * (a + b);
    if (!(next > a && next < b)) next = 0.5 * (a + b);
    if (b - a < 1e-15 * (std::abs(a) + std::abs(b) + 1.0)) return next;
    x = next;
  }
  throw std::runtime_error("MarginalKde::quantile: root finding did not converge");
}

double MarginalKde::sample(RngStream& stream) const {
  const std::size_t idx = static_cast<std::size_t>(stream.below(points_.size()));
  // median of three uniforms on [-1,1] is Epanechnikov distributed
  double u1 = stream.uniform(-1.0, 1.0), u2 = stream.uniform(-1.0, 1.0),
         u3 = stream.uniform(-1.0, 1.0);
  const double eps = std::max(std::min(u1, u2), std::min(std::max(u1, u2), u3));
  double x = points_[idx] + h_ * eps;
  if (bounds_) {
    if (x < bounds_->lo) x = 2.0 * bounds_->lo - x;
    if (x > bounds_->hi) x = 2.0 * bounds_->hi - x;
  }
  return x;
}

MarginalTransform::MarginalTransform(std::vector<MarginalKde> kdes) : kdes_(std::move(kdes)) {
  if (kdes_.empty()) throw std::invalid_argument("MarginalTransform: no dimensions");
}

Eigen::VectorXd MarginalTransform::to_normal(const Eigen::VectorXd& theta) const {
  if (theta.size() != dim()) throw std::invalid_argument("to_normal: dimension mismatch");
  Eigen::VectorXd z(dim());
  for (int k = 0; k < dim(); ++k) {
    const double u = std::clamp(kdes_[k].cdf(theta[k]), kCdfClamp, 1.0 - kCdfClamp);
    z[k] = norm_quantile(u);
  }
  return z;
}

Eigen::VectorXd MarginalTransform::from_normal(const Eigen::VectorXd& z) const {
  if (z.size() != dim()) throw std::invalid_argument("from_normal: dimension mismatch");
  Eigen::VectorXd theta(dim());
  for (int k = 0; k < dim(); ++k) {
    try {
      theta[k] = kdes_[k].quantile(norm_cdf(z[k]));
    } catch (const std::runtime_error&) {
      throw std::runtime_error("from_normal: quantile inversion failed in dimension " +
                               std::to_string(k));
    }
  }
  return theta;
}

double MarginalTransform::log_jacobian(const Eigen::VectorXd& theta,
                                       const Eigen::VectorXd& z) const {
  double lj = 0.0;
  for (int k = 0; k < dim(); ++k) {
    const double f = kdes_[k].density(theta[k]);
    if (!(f > 0.0)) return -kInf;
    lj += std::log(f) - norm_logpdf(z[k]);
  }
  return lj;
}

MarginalTransform fit_marginals(const Eigen::MatrixXd& particles, const ParameterSpace& space,
                                int subset_size, std::uint64_t seed) {
  const auto m_all = particles.rows();
  const int p = space.dim();
  if (particles.cols() != p) throw std::invalid_argument("fit_marginals: dimension mismatch");
  const auto subset = std::min<Eigen::Index>(subset_size, m_all);
  if (subset < 50) throw std::invalid_argument("fit_marginals: need a subset of at least 50 particles");

  // seeded partial Fisher-Yates for the subset indices
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(m_all));
  for (Eigen::Index i = 0; i < m_all; ++i) idx[static_cast<std::size_t>(i)] = i;
  RngStream stream(seed, streams::kde_subset);
  for (Eigen::Index i = 0; i < subset; ++i) {
    const auto j = i + static_cast<Eigen::Index>(stream.below(static_cast<std::uint64_t>(m_all - i)));
    std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
  }

  std::vector<MarginalKde> kdes;
  kdes.reserve(static_cast<std::size_t>(p));
  for (int k = 0; k < p; ++k) {
    std::vector<double> pts(static_cast<std::size_t>(subset));
    for (Eigen::Index i = 0; i < subset; ++i)
      pts[static_cast<std::size_t>(i)] = particles(idx[static_cast<std::size_t>(i)], k);
    std::optional<MarginalKde::Bounds> bounds;
    if (space.working_bounded(k))
      bounds = MarginalKde::Bounds{space.working_lower(k), space.working_upper(k)};
    try {
      kdes.push_back(MarginalKde::fit(std::move(pts), bounds));
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument("fit_marginals: dimension " + std::to_string(k) + " (" +
                                  space.dimension(k).name + "): " + e.what());
    }
  }
  return MarginalTransform(std::move(kdes));
}

}  // namespace hmsmc
