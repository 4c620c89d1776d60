#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "hmsmc/implausibility.hpp"
#include "hmsmc/mcmc.hpp"
#include "hmsmc/models/model.hpp"
#include "hmsmc/smc.hpp"

namespace hmsmc {

// Ground-truth history matching over a dense QMC point set: per wave, train a
// GP on a uniform subset of the survivors, score every survivor, keep the
// alpha-quantile.  Survivor sets nest by construction.
struct BruteForceResult {
  WaveChain chain;
  std::vector<Eigen::MatrixXd> survivors_per_wave;  // working scale, wave 1..W
  std::vector<double> cutoffs;
  long long simulation_count = 0;
  std::string stop_reason;
};

BruteForceResult brute_force_history_match(SimulatorModel& model, const ParameterSpace& space,
                                           int n_qmc, int training_size, double alpha, int waves,
                                           const ImplausibilityMeasure& measure,
                                           std::uint64_t seed, unsigned threads = 1,
                                           const GpFitConfig& gp = {});

// Exact uniform-on-the-region sampler: propose from the prior until accepted.
struct RejectionResult {
  Eigen::MatrixXd samples;  // working scale
  double acceptance_rate = 0.0;
  long long proposals = 0;
  bool aborted = false;
};

RejectionResult rejection_sampler(const WaveChain& chain, const ParameterSpace& space,
                                  int n_target, std::uint64_t seed,
                                  long long max_proposals = 10000000);

// The ad-hoc comparison samplers: MVN fitted on transformed survivors, drawn
// until n_target proposals satisfy the whole chain.  Valid but deliberately
// not uniform.
enum class AdhocTransform { logit, kde_marginal };

struct AdhocResult {
  Eigen::MatrixXd samples;
  double acceptance_rate = 0.0;
  bool aborted = false;
};

AdhocResult adhoc_sampler(const WaveChain& chain, const Eigen::MatrixXd& particles,
                          const ParameterSpace& space, AdhocTransform transform, int n_target,
                          std::uint64_t seed, long long max_proposals = 10000000);

// Drives adhoc_sampler wave by wave from prior samples, as the comparison
// figures do, returning the final-wave samples.
AdhocResult adhoc_sampler_sequence(const WaveChain& chain, const ParameterSpace& space,
                                   AdhocTransform transform, int n_target, std::uint64_t seed);

// SMC optimisation: no emulator, the per-wave constraint is the alpha
// quantile of freshly simulated distances and every MCMC proposal costs one
// simulation.
struct SmcOptResult {
  ParticlePopulation population;
  std::vector<WaveSummary> summaries;
  std::vector<double> cutoffs;
  long long simulation_count = 0;
};

SmcOptResult smc_optimisation(SimulatorModel& model, const ParameterSpace& space,
                              const SmcConfig& config, std::uint64_t seed);

// Likelihood-annealed Bayesian SMC with adaptive temperatures (bisection on
// ESS) and a plain MVN random walk move; log-likelihoods may be exact or
// pseudo-marginal estimates (re-estimated per proposal).
class LogLikelihood {
 public:
  virtual ~LogLikelihood() = default;
  // -inf encodes an impossible / early-terminated estimate
  virtual double operator()(const Eigen::VectorXd& theta_working, std::uint64_t seed,
                            std::uint64_t tag) const = 0;
};

struct BayesSmcResult {
  Eigen::MatrixXd particles;  // working scale
  std::vector<double> temperatures;  // gamma_1 .. gamma_T = 1
  std::vector<double> acceptance_rates;
  long long likelihood_evaluations = 0;
};

BayesSmcResult bayes_smc_anneal(const LogLikelihood& loglik, const ParameterSpace& space, int m,
                                double target_ess_ratio, std::uint64_t seed,
                                double move_target_c = 0.01, int repeat_max = 100,
                                unsigned threads = 1);

// Grid-occupancy total-variation distance between two 2-d sample sets on a
// shared box grid; the quantitative stand-in for the figure comparisons.
double grid_tv_distance(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double lo_x,
                        double hi_x, double lo_y, double hi_y, int cells_per_side = 50);

}  // namespace hmsmc
