#pragma once

#include <Eigen/Dense>
#include <vector>

namespace hmsmc {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Standard normal cdf / log-pdf / quantile.
double norm_cdf(double z);
double norm_logpdf(double z);

// Inverse of norm_cdf, accurate to ~1e-15 via Acklam's rational approximation
// plus one Halley refinement.  p must lie in (0,1).
double norm_quantile(double p);

// Order statistic of rank ceil(alpha*n) (ascending, 1-based rank).
double quantile_order_stat(const std::vector<double>& values, double alpha);

// Plain empirical quantile (linear interpolation), for reporting.
double empirical_quantile(std::vector<double> values, double q);

double sample_sd(const Vec& x);

// Sample covariance (denominator n-1) of row-wise observations.
Mat sample_covariance(const Mat& rows);

}  // namespace hmsmc
