#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <vector>

#include "hmsmc/implausibility.hpp"
#include "hmsmc/kde.hpp"
#include "hmsmc/param_space.hpp"
#include "hmsmc/transform.hpp"

namespace hmsmc {

enum class TransformKind { kde_marginal, logistic };

// Random-walk proposal in transformed coordinates: marginal map plus the
// covariance of the mapped particle set.
struct ProposalState {
  std::shared_ptr<const MarginalMap> map;
  Eigen::MatrixXd cov;
  Eigen::MatrixXd chol;  // lower factor of scale^2 * cov
  double scale = 1.0;
};

struct SweepDiagnostics {
  int proposals = 0;
  int accepts = 0;
  int early_prior_rejects = 0;            // q-ratio / prior stage
  std::vector<int> per_wave_rejects;      // first violated wave, 1-based => slot w-1
  double p_acc = 0.0;

  void accumulate(const SweepDiagnostics& other);
};

// Fit the marginal map on a particle subset and the covariance of the mapped
// particles (all of them).  particles are working-scale, M x p.
ProposalState build_proposal(const Eigen::MatrixXd& particles, const ParameterSpace& space,
                             int subset_size, std::uint64_t seed,
                             TransformKind kind = TransformKind::kde_marginal,
                             double scale = 1.0);

// One Metropolis-Hastings sweep over all particles targeting the chain's
// restriction of the prior.  Early rejection on prior/proposal densities, then
// sequential wave checks with first-violation exit.  Particles and the stream
// keys are indexed together; the sweep may run particles concurrently.
SweepDiagnostics mh_sweep(Eigen::MatrixXd& particles, const std::vector<std::uint64_t>& stream_keys,
                          const WaveChain& chain, const ProposalState& prop,
                          const ParameterSpace& space, std::uint64_t sweep_key,
                          unsigned threads = 1, bool verify_inputs = true);

}  // namespace hmsmc
