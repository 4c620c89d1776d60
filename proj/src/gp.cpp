#include "hmsmc/gp.hpp"

#include <cmath>
#include <limits>
#include <vector>

#include "hmsmc/optimize.hpp"
#include "hmsmc/rng.hpp"

namespace hmsmc {

namespace {

constexpr double kBaseJitter = 1e-8;
constexpr double kLog2Pi = 1.8378770664093454836;

// Pairwise squared distances via explicit differences; the expanded
// |a|^2+|b|^2-2ab form cancels catastrophically for nearby points and the
// predictive variance inherits the error.
Eigen::MatrixXd kernel_matrix(const Eigen::MatrixXd& x, const GpHyperparams& hp) {
  const auto n = x.rows();
  const Eigen::MatrixXd scaled = x.array().rowwise() / hp.lengthscales.transpose().array();
  Eigen::MatrixXd k(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    k(i, i) = hp.signal_variance;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double d2 = (scaled.row(i) - scaled.row(j)).squaredNorm();
      k(i, j) = k(j, i) = hp.signal_variance * std::exp(-0.5 * d2);
    }
  }
  return k;
}

bool try_cholesky(const Eigen::MatrixXd& k, double diag_add, Eigen::MatrixXd& lower) {
  Eigen::MatrixXd work = k;
  work.diagonal().array() += diag_add;
  Eigen::LLT<Eigen::MatrixXd> llt(work);
  if (llt.info() != Eigen::Success) return false;
  lower = llt.matrixL();
  return true;
}

}  // namespace

GpTrainingSet::GpTrainingSet(const Eigen::MatrixXd& inputs, const Eigen::VectorXd& outputs) {
  if (inputs.rows() != outputs.size())
    throw std::invalid_argument("GpTrainingSet: inputs/outputs size mismatch");
  if (!outputs.allFinite() || !inputs.allFinite())
    throw std::invalid_argument("GpTrainingSet: non-finite training data");

  // drop exact duplicate (input, output) pairs
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < inputs.rows(); ++i) {
    bool dup = false;
    for (const auto j : keep) {
      if (inputs.row(i) == inputs.row(j)) {
        had_duplicates_ = true;
        if (outputs[i] == outputs[j]) {
          dup = true;
          break;
        }
      }
    }
    if (!dup) keep.push_back(i);
  }
  if (keep.size() < 2) throw std::invalid_argument("GpTrainingSet: need at least 2 distinct pairs");

  raw_inputs_.resize(static_cast<Eigen::Index>(keep.size()), inputs.cols());
  raw_outputs_.resize(static_cast<Eigen::Index>(keep.size()));
  for (std::size_t i = 0; i < keep.size(); ++i) {
    raw_inputs_.row(static_cast<Eigen::Index>(i)) = inputs.row(keep[i]);
    raw_outputs_[static_cast<Eigen::Index>(i)] = outputs[keep[i]];
  }

  const auto n = raw_inputs_.rows();
  input_center_ = raw_inputs_.colwise().mean();
  input_scale_.resize(raw_inputs_.cols());
  for (Eigen::Index k = 0; k < raw_inputs_.cols(); ++k) {
    const double var =
        (raw_inputs_.col(k).array() - input_center_[k]).square().sum() / double(n - 1);
    input_scale_[k] = std::sqrt(var);
    if (input_scale_[k] < 1e-12) input_scale_[k] = 1.0;
  }
  std_inputs_ = (raw_inputs_.rowwise() - input_center_.transpose()).array().rowwise() /
                input_scale_.transpose().array();

  output_mean_ = raw_outputs_.mean();
  const double out_var =
      (raw_outputs_.array() - output_mean_).square().sum() / double(n - 1);
  output_sd_ = std::sqrt(out_var);
  if (output_sd_ < 1e-12) output_sd_ = 1.0;
  std_outputs_ = (raw_outputs_.array() - output_mean_) / output_sd_;
}

Eigen::VectorXd GpTrainingSet::standardize_input(const Eigen::VectorXd& theta) const {
  return (theta - input_center_).cwiseQuotient(input_scale_);
}

GpEmulator::GpEmulator(GpTrainingSet training, GpHyperparams hp, bool predict_noisy)
    : training_(std::move(training)), hp_(std::move(hp)), predict_noisy_(predict_noisy) {
  if (hp_.lengthscales.size() != training_.input_dim())
    throw std::invalid_argument("GpEmulator: lengthscale dimension mismatch");
  if (!(hp_.signal_variance > 0.0) || (hp_.lengthscales.array() <= 0.0).any())
    throw std::invalid_argument("GpEmulator: hyperparameters must be positive");
  factorize();
}

void GpEmulator::factorize() {
  const Eigen::MatrixXd k = kernel_matrix(training_.std_inputs(), hp_);
  const double max_jitter = 1e-4 * hp_.signal_variance;
  double jitter = 0.0;
  bool ok = try_cholesky(k, hp_.noise_variance + kBaseJitter, chol_lower_);
  if (!ok) {
    jitter = 1e-10 * hp_.signal_variance;
    while (!ok && jitter <= max_jitter) {
      ok = try_cholesky(k, hp_.noise_variance + kBaseJitter + jitter, chol_lower_);
      if (!ok) jitter *= 10.0;
    }
  }
  if (!ok) {
    throw std::runtime_error(
        "GpEmulator: Cholesky failed after jitter escalation to " + std::to_string(max_jitter) +
        "; kernel matrix is numerically singular (duplicate or near-duplicate inputs with "
        "noise_variance " + std::to_string(hp_.noise_variance) + ")");
  }

  const auto& y = training_.std_outputs();
  alpha_ = chol_lower_.triangularView<Eigen::Lower>().solve(y);
  alpha_ = chol_lower_.transpose().triangularView<Eigen::Upper>().solve(alpha_);

  const double n = static_cast<double>(training_.size());
  lml_ = -0.5 * y.dot(alpha_) - chol_lower_.diagonal().array().log().sum() - 0.5 * n * kLog2Pi;

  diag_.log_marginal_likelihood = lml_;
  diag_.jitter_used = jitter;
  diag_.duplicate_inputs = training_.had_duplicates();
}

double GpEmulator::log_marginal_likelihood(const GpTrainingSet& training,
                                           const GpHyperparams& hp) {
  const Eigen::MatrixXd k = kernel_matrix(training.std_inputs(), hp);
  Eigen::MatrixXd lower;
  if (!try_cholesky(k, hp.noise_variance + kBaseJitter, lower))
    return -std::numeric_limits<double>::infinity();
  const auto& y = training.std_outputs();
  Eigen::VectorXd tmp = lower.triangularView<Eigen::Lower>().solve(y);
  const double n = static_cast<double>(training.size());
  return -0.5 * tmp.squaredNorm() - lower.diagonal().array().log().sum() - 0.5 * n * kLog2Pi;
}

GpPrediction GpEmulator::predict(const Eigen::VectorXd& theta) const {
  const auto batch = predict_batch(theta.transpose());
  return {batch.means[0], batch.sds[0]};
}

// Strictly per-query evaluation: every query runs the identical dot/solve
// sequence, so results are bit-reproducible for any batch size or chunking
// (blocked GEMV reorders summation enough to move ill-conditioned means).
GpBatchPrediction GpEmulator::predict_batch(const Eigen::MatrixXd& thetas) const {
  const Eigen::Index m = thetas.rows();
  GpBatchPrediction out;
  out.means.resize(m);
  out.sds.resize(m);

  const Eigen::MatrixXd xs =
      training_.std_inputs().array().rowwise() / hp_.lengthscales.transpose().array();
  Eigen::VectorXd ks(xs.rows()), v(xs.rows()), q(xs.cols());
  for (Eigen::Index j = 0; j < m; ++j) {
    q = (thetas.row(j).transpose() - training_.input_center())
            .cwiseQuotient(training_.input_scale())
            .cwiseQuotient(hp_.lengthscales);
    for (Eigen::Index i = 0; i < xs.rows(); ++i) {
      const double d2 = (xs.row(i).transpose() - q).squaredNorm();
      ks[i] = hp_.signal_variance * std::exp(-0.5 * d2);
    }
    out.means[j] = alpha_.dot(ks) * training_.output_sd() + training_.output_mean();
    v = chol_lower_.triangularView<Eigen::Lower>().solve(ks);
    double var = hp_.signal_variance - v.squaredNorm();
    if (predict_noisy_) var += hp_.noise_variance;
    out.sds[j] = std::sqrt(std::max(0.0, var)) * training_.output_sd();
  }
  return out;
}

GpEmulator fit_gp(const GpTrainingSet& training, const GpFitConfig& config,
                  const GpHyperparams* warm_start) {
  const int p = training.input_dim();
  const int n_hyper = p + 1 + (config.learn_noise ? 1 : 0);

  Eigen::VectorXd ranges(p);
  for (int k = 0; k < p; ++k) {
    const auto col = training.std_inputs().col(k);
    const double r = col.maxCoeff() - col.minCoeff();
    ranges[k] = r > 1e-12 ? r : 1.0;
  }

  auto unpack = [&](const Eigen::VectorXd& log_h) {
    GpHyperparams hp;
    hp.lengthscales = log_h.head(p).array().exp();
    hp.signal_variance = std::exp(log_h[p]);
    hp.noise_variance = config.learn_noise ? std::exp(log_h[p + 1]) : 0.0;
    return hp;
  };
  auto objective = [&](const Eigen::VectorXd& log_h) {
    return -GpEmulator::log_marginal_likelihood(training, unpack(log_h));
  };

  RngStream stream(config.seed, streams::gp_restart);
  Eigen::VectorXd best_log_h;
  double best_val = std::numeric_limits<double>::infinity();
  int runs = 0;

  auto run_start = [&](const Eigen::VectorXd& start) {
    const auto res = nelder_mead(objective, start, 0.6, config.max_evals_per_restart);
    ++runs;
    if (res.value < best_val) {
      best_val = res.value;
      best_log_h = res.x;
    }
  };

  // heuristic start: unit lengthscales on the standardized scale
  Eigen::VectorXd start(n_hyper);
  for (int k = 0; k < p; ++k) start[k] = std::log(ranges[k] * 0.5);
  start[p] = 0.0;
  if (config.learn_noise) start[p + 1] = std::log(1e-2);
  run_start(start);

  if (warm_start && warm_start->lengthscales.size() == p) {
    Eigen::VectorXd ws(n_hyper);
    ws.head(p) = warm_start->lengthscales.array().log();
    ws[p] = std::log(warm_start->signal_variance);
    if (config.learn_noise)
      ws[p + 1] = std::log(std::max(warm_start->noise_variance, 1e-8));
    run_start(ws);
  }

  for (int r = 0; r < config.restarts; ++r) {
    Eigen::VectorXd s(n_hyper);
    for (int k = 0; k < p; ++k)
      s[k] = stream.uniform(std::log(0.05 * ranges[k]), std::log(5.0 * ranges[k]));
    s[p] = stream.uniform(std::log(0.1), std::log(10.0));
    if (config.learn_noise) s[p + 1] = stream.uniform(std::log(1e-6), std::log(1.0));
    run_start(s);
  }

  if (!std::isfinite(best_val))
    throw std::runtime_error("fit_gp: no hyperparameter draw produced a factorizable kernel");

  GpEmulator em(training, unpack(best_log_h), config.predict_noisy);
  em.diag_.restarts_run = runs;
  return em;
}

}  // namespace hmsmc
