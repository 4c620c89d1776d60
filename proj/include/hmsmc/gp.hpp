#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <stdexcept>

namespace hmsmc {

struct GpPrediction {
  double mean = 0.0;
  double sd = 0.0;
};

struct GpBatchPrediction {
  Eigen::VectorXd means;
  Eigen::VectorXd sds;
};

struct GpHyperparams {
  double signal_variance = 1.0;
  Eigen::VectorXd lengthscales;  // one per input dimension
  double noise_variance = 0.0;
};

struct GpFitConfig {
  std::uint64_t seed = 0;
  int restarts = 5;
  bool learn_noise = false;   // stochastic outputs; deterministic models fix jitter
  bool predict_noisy = false;  // include noise_variance in predictive sd
  int max_evals_per_restart = 400;
};

struct GpFitDiagnostics {
  double log_marginal_likelihood = 0.0;
  double jitter_used = 0.0;
  bool duplicate_inputs = false;
  int restarts_run = 0;
};

// Training pairs standardized per input dimension and for the output; exact
// duplicate (input, output) pairs are dropped at construction.
class GpTrainingSet {
 public:
  GpTrainingSet(const Eigen::MatrixXd& inputs, const Eigen::VectorXd& outputs);

  int size() const { return static_cast<int>(std_inputs_.rows()); }
  int input_dim() const { return static_cast<int>(std_inputs_.cols()); }

  const Eigen::MatrixXd& std_inputs() const { return std_inputs_; }
  const Eigen::VectorXd& std_outputs() const { return std_outputs_; }
  const Eigen::MatrixXd& raw_inputs() const { return raw_inputs_; }
  const Eigen::VectorXd& raw_outputs() const { return raw_outputs_; }

  double output_mean() const { return output_mean_; }
  double output_sd() const { return output_sd_; }
  const Eigen::VectorXd& input_center() const { return input_center_; }
  const Eigen::VectorXd& input_scale() const { return input_scale_; }
  bool had_duplicates() const { return had_duplicates_; }

  Eigen::VectorXd standardize_input(const Eigen::VectorXd& theta) const;

 private:
  Eigen::MatrixXd raw_inputs_, std_inputs_;
  Eigen::VectorXd raw_outputs_, std_outputs_;
  Eigen::VectorXd input_center_, input_scale_;
  double output_mean_ = 0.0, output_sd_ = 1.0;
  bool had_duplicates_ = false;
};

// Squared-exponential ARD Gaussian process on standardized coordinates.
// Immutable once constructed; predict is safe to call concurrently.
class GpEmulator {
 public:
  // Factorize at fixed hyperparameters (jitter escalation on Cholesky failure).
  GpEmulator(GpTrainingSet training, GpHyperparams hp, bool predict_noisy = false);

  GpPrediction predict(const Eigen::VectorXd& theta) const;
  GpBatchPrediction predict_batch(const Eigen::MatrixXd& thetas) const;

  double log_marginal_likelihood() const { return lml_; }
  const GpHyperparams& hyperparams() const { return hp_; }
  const GpTrainingSet& training() const { return training_; }
  const GpFitDiagnostics& diagnostics() const { return diag_; }
  bool predict_noisy() const { return predict_noisy_; }

  // Log marginal likelihood of a candidate hyperparameter set on a training
  // set, without keeping the factorization; -inf if it cannot be factorized.
  static double log_marginal_likelihood(const GpTrainingSet& training,
                                        const GpHyperparams& hp);

 private:
  friend GpEmulator fit_gp(const GpTrainingSet& training, const GpFitConfig& config,
                           const GpHyperparams* warm_start);
  void factorize();

  GpTrainingSet training_;
  GpHyperparams hp_;
  bool predict_noisy_ = false;
  Eigen::MatrixXd chol_lower_;
  Eigen::VectorXd alpha_;
  double lml_ = 0.0;
  GpFitDiagnostics diag_;
};

// Maximize the log marginal likelihood with multi-restart Nelder-Mead from
// seeded log-uniform draws.  Deterministic given config.seed.  A warm start
// adds one search from the given hyperparameters; successive refits on
// similar data then stay in the same likelihood basin.
GpEmulator fit_gp(const GpTrainingSet& training, const GpFitConfig& config,
                  const GpHyperparams* warm_start = nullptr);

}  // namespace hmsmc
