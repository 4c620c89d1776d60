#include "hmsmc/param_space.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "hmsmc/sobol.hpp"

namespace hmsmc {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kLog4OverPi = 0.24156447527049044469;  // log(4/pi)

// Half-Cauchy(scale 1/2): F(c) = (2/pi) atan(2c), F^-1(u) = tan(pi u / 2) / 2.
double half_cauchy_quantile(double u) { return 0.5 * std::tan(1.5707963267948966 * u); }
}  // namespace

ParameterSpace::ParameterSpace(std::vector<Dimension> dims) : dims_(std::move(dims)) {
  if (dims_.empty()) throw std::invalid_argument("ParameterSpace: no dimensions");
  for (const auto& d : dims_) {
    if (d.prior == PriorKind::uniform_box) {
      if (!(d.lower < d.upper))
        throw std::invalid_argument("ParameterSpace: lower must be < upper for '" + d.name + "'");
      if (!std::isfinite(d.lower) || !std::isfinite(d.upper))
        throw std::invalid_argument("ParameterSpace: box bounds must be finite for '" + d.name + "'");
    } else {
      if (d.lower != 0.0)
        throw std::invalid_argument("ParameterSpace: half-Cauchy requires lower = 0 for '" + d.name + "'");
    }
  }
}

ParameterSpace ParameterSpace::box(const std::vector<std::string>& names,
                                   const Eigen::VectorXd& lower,
                                   const Eigen::VectorXd& upper) {
  if (static_cast<int>(names.size()) != lower.size() || lower.size() != upper.size())
    throw std::invalid_argument("ParameterSpace::box: size mismatch");
  std::vector<Dimension> dims(names.size());
  for (std::size_t k = 0; k < names.size(); ++k)
    dims[k] = {names[k], PriorKind::uniform_box, lower[static_cast<int>(k)],
               upper[static_cast<int>(k)]};
  return ParameterSpace(std::move(dims));
}

ParameterSpace ParameterSpace::half_cauchy(const std::vector<std::string>& names) {
  std::vector<Dimension> dims(names.size());
  for (std::size_t k = 0; k < names.size(); ++k)
    dims[k] = {names[k], PriorKind::half_cauchy, 0.0, kInf};
  return ParameterSpace(std::move(dims));
}

bool ParameterSpace::all_box() const {
  for (const auto& d : dims_)
    if (d.prior != PriorKind::uniform_box) return false;
  return true;
}

double ParameterSpace::log_prior_density(const Eigen::VectorXd& theta) const {
  if (theta.size() != dim())
    throw std::invalid_argument("log_prior_density: dimension mismatch");
  double lp = 0.0;
  for (int k = 0; k < dim(); ++k) {
    const auto& d = dims_[k];
    const double x = theta[k];
    if (d.prior == PriorKind::uniform_box) {
      if (x < d.lower || x > d.upper) return -kInf;
      lp -= std::log(d.upper - d.lower);
    } else {
      if (!(x > 0.0)) return -kInf;
      lp += kLog4OverPi - std::log1p(4.0 * x * x);
    }
  }
  return lp;
}

double ParameterSpace::log_prior_working(const Eigen::VectorXd& theta_working) const {
  if (theta_working.size() != dim())
    throw std::invalid_argument("log_prior_working: dimension mismatch");
  double lp = 0.0;
  for (int k = 0; k < dim(); ++k) {
    const auto& d = dims_[k];
    const double t = theta_working[k];
    if (d.prior == PriorKind::uniform_box) {
      if (t < d.lower || t > d.upper) return -kInf;
      lp -= std::log(d.upper - d.lower);
    } else {
      // c = exp(t); p_t(t) = p_c(exp(t)) * exp(t)
      lp += kLog4OverPi + t - std::log1p(4.0 * std::exp(2.0 * t));
    }
  }
  return lp;
}

Eigen::VectorXd ParameterSpace::to_working(const Eigen::VectorXd& theta) const {
  Eigen::VectorXd out = theta;
  for (int k = 0; k < dim(); ++k)
    if (dims_[k].prior == PriorKind::half_cauchy) out[k] = std::log(theta[k]);
  return out;
}

Eigen::VectorXd ParameterSpace::from_working(const Eigen::VectorXd& theta_working) const {
  Eigen::VectorXd out = theta_working;
  for (int k = 0; k < dim(); ++k)
    if (dims_[k].prior == PriorKind::half_cauchy) out[k] = std::exp(theta_working[k]);
  return out;
}

bool ParameterSpace::working_bounded(int k) const {
  return dims_[k].prior == PriorKind::uniform_box;
}
double ParameterSpace::working_lower(int k) const {
  return working_bounded(k) ? dims_[k].lower : -kInf;
}
double ParameterSpace::working_upper(int k) const {
  return working_bounded(k) ? dims_[k].upper : kInf;
}

Eigen::MatrixXd ParameterSpace::sample_prior(int n, RngStream& stream) const {
  if (n < 1) throw std::invalid_argument("sample_prior: n must be >= 1");
  Eigen::MatrixXd out(n, dim());
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < dim(); ++k) {
      const auto& d = dims_[k];
      if (d.prior == PriorKind::uniform_box)
        out(i, k) = stream.uniform(d.lower, d.upper);
      else
        out(i, k) = half_cauchy_quantile(stream.uniform_pos() * (1.0 - 1e-16));
    }
  }
  return out;
}

bool ParameterSpace::in_support(const Eigen::VectorXd& theta) const {
  return std::isfinite(log_prior_density(theta));
}

Eigen::MatrixXd initial_design(const ParameterSpace& space, const DesignSpec& spec) {
  if (spec.count < 1) throw std::invalid_argument("initial_design: count must be >= 1");
  const int p = space.dim();
  Eigen::MatrixXd unit(spec.count, p);
  if (spec.scheme == DesignSpec::Scheme::sobol_qmc) {
    unit = SobolSequence::generate(spec.count, p);
  } else {
    RngStream stream(spec.seed, streams::design);
    for (int i = 0; i < spec.count; ++i)
      for (int k = 0; k < p; ++k) unit(i, k) = stream.uniform();
  }
  Eigen::MatrixXd out(spec.count, p);
  for (int k = 0; k < p; ++k) {
    const auto& d = space.dimension(k);
    for (int i = 0; i < spec.count; ++i) {
      const double u = unit(i, k);
      if (d.prior == PriorKind::uniform_box)
        out(i, k) = d.lower + (d.upper - d.lower) * u;
      else
        out(i, k) = half_cauchy_quantile(std::max(u, 1e-16));
    }
  }
  return out;
}

}  // namespace hmsmc
