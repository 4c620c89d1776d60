#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "hmsmc/models/model.hpp"

namespace hmsmc {

// Autoregulatory gene network: species (DNA, RNA, P, P2) with eight reactions
// and conservation DNA + DNA.P2 = k.
struct GeneState {
  int dna = 5, rna = 8, p = 8, p2 = 8;
};

struct GeneNetworkParams {
  std::array<double, 8> rates{};  // c_1..c_8, positive
  int k = 10;                     // gene copy conservation constant
};

struct GeneSsaResult {
  GeneState state;
  bool early_termination = false;  // species cap or event budget hit
  long long events = 0;
};

// Exact Gillespie simulation from `init` for `duration` time units; aborts
// when any species reaches `species_cap` or `event_budget` events fire.
GeneSsaResult gene_ssa_advance(const GeneNetworkParams& params, const GeneState& init,
                               double duration, RngStream& stream, int species_cap = 100,
                               long long event_budget = 1000000);

// Noiseless equispaced observations of all four species from the true rates.
Eigen::MatrixXd gene_generate_data(const GeneNetworkParams& params, const GeneState& init,
                                   int n_obs, double dt, std::uint64_t seed);

// Bootstrap particle filter log-likelihood under iid Gaussian observation
// error sd sigma on each species; nullopt on early termination / zero weight.
std::optional<double> gene_loglik_pf(const GeneNetworkParams& params, const GeneState& init,
                                     const Eigen::MatrixXd& data, double dt, double sigma,
                                     int n_particles, std::uint64_t seed, std::uint64_t tag,
                                     int species_cap = 100, long long event_budget = 1000000);

// Emulator training output: log(-loglik).  loglik must be negative.
double gene_training_output(double loglik);

// Gene network behind the engine: theta = log rates (working scale), raw
// output is the PF log-likelihood with sentinel substitution for early
// terminations / zero likelihoods.  The sentinel is frozen as the minimum
// properly-estimated log-likelihood of the first (prior, wave-0) batch.
class GeneModel final : public SimulatorModel {
 public:
  GeneModel(Eigen::MatrixXd data, double dt, double sigma, int pf_particles,
            GeneState init = {}, int k = 10);

  Kind kind() const override { return Kind::stochastic; }
  ParameterSpace space() const override;  // half-Cauchy(1/2) per rate
  double simulate(const Eigen::VectorXd& theta_working, RngStream& stream) const override;
  double transform_output(double raw) const override { return gene_training_output(raw); }
  Eigen::VectorXd simulate_batch(const Eigen::MatrixXd& thetas_working, std::uint64_t seed,
                                 std::uint64_t wave, unsigned threads) override;

  // nullopt when the PF terminated early (pre-sentinel view, for tests)
  std::optional<double> loglik(const Eigen::VectorXd& theta_working, std::uint64_t seed,
                               std::uint64_t tag) const;

  std::optional<double> sentinel() const { return sentinel_; }
  long long sentinel_assignments() const { return sentinel_assignments_; }

 private:
  Eigen::MatrixXd data_;
  double dt_;
  double sigma_;
  int pf_particles_;
  GeneState init_;
  int k_;
  std::optional<double> sentinel_;
  long long sentinel_assignments_ = 0;
};

}  // namespace hmsmc
