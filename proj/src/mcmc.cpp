#include "hmsmc/mcmc.hpp"

#include <cmath>
#include <stdexcept>

#include "hmsmc/parallel.hpp"
#include "hmsmc/rng.hpp"
#include "hmsmc/stats.hpp"

namespace hmsmc {

void SweepDiagnostics::accumulate(const SweepDiagnostics& other) {
  proposals += other.proposals;
  accepts += other.accepts;
  early_prior_rejects += other.early_prior_rejects;
  if (per_wave_rejects.size() < other.per_wave_rejects.size())
    per_wave_rejects.resize(other.per_wave_rejects.size(), 0);
  for (std::size_t i = 0; i < other.per_wave_rejects.size(); ++i)
    per_wave_rejects[i] += other.per_wave_rejects[i];
  p_acc = proposals > 0 ? static_cast<double>(accepts) / proposals : 0.0;
}

ProposalState build_proposal(const Eigen::MatrixXd& particles, const ParameterSpace& space,
                             int subset_size, std::uint64_t seed, TransformKind kind,
                             double scale) {
  const auto m = particles.rows();
  const auto p = particles.cols();
  if (m < p + 1) throw std::invalid_argument("build_proposal: need at least p+1 particles");

  ProposalState state;
  state.scale = scale;
  if (kind == TransformKind::kde_marginal) {
    state.map = std::make_shared<MarginalTransform>(
        fit_marginals(particles, space, subset_size, seed));
  } else {
    state.map = std::make_shared<LogisticMap>(space);
  }

  Eigen::MatrixXd z(m, p);
  for (Eigen::Index i = 0; i < m; ++i)
    z.row(i) = state.map->to_normal(particles.row(i)).transpose();

  state.cov = sample_covariance(z);
  state.cov = 0.5 * (state.cov + state.cov.transpose()).eval();

  Eigen::MatrixXd scaled = (scale * scale) * state.cov;
  Eigen::LLT<Eigen::MatrixXd> llt(scaled);
  if (llt.info() != Eigen::Success) {
    scaled.diagonal().array() += 1e-10;
    llt.compute(scaled);
    if (llt.info() != Eigen::Success)
      throw std::runtime_error("build_proposal: covariance is rank deficient after ridge");
  }
  state.chol = llt.matrixL();
  return state;
}

SweepDiagnostics mh_sweep(Eigen::MatrixXd& particles, const std::vector<std::uint64_t>& stream_keys,
                          const WaveChain& chain, const ProposalState& prop,
                          const ParameterSpace& space, std::uint64_t sweep_key, unsigned threads,
                          bool verify_inputs) {
  const auto m = particles.rows();
  const auto p = particles.cols();
  if (stream_keys.size() != static_cast<std::size_t>(m))
    throw std::invalid_argument("mh_sweep: stream key count mismatch");

  if (verify_inputs) {
    const auto ok = chain.accepts_batch(particles);
    for (Eigen::Index i = 0; i < m; ++i)
      if (!ok[static_cast<std::size_t>(i)])
        throw std::logic_error("mh_sweep: input particle " + std::to_string(i) +
                               " violates the wave chain");
  }

  // outcome per particle: -1 accept, -2 early reject, j >= 1 rejecting wave
  std::vector<int> outcome(static_cast<std::size_t>(m), 0);

  parallel_for(static_cast<std::size_t>(m), threads, [&](std::size_t i) {
    RngStream stream(stream_keys[i], streams::mcmc_move, sweep_key);
    const Eigen::VectorXd theta = particles.row(static_cast<Eigen::Index>(i));
    const Eigen::VectorXd z = prop.map->to_normal(theta);

    Eigen::VectorXd eta(p);
    for (Eigen::Index k = 0; k < p; ++k) eta[k] = stream.normal();
    const double u = stream.uniform_pos();

    const Eigen::VectorXd z_star = z + prop.chol * eta;
    const Eigen::VectorXd theta_star = prop.map->from_normal(z_star);

    const double log_jac = prop.map->log_jacobian(theta, z);
    const double log_jac_star = prop.map->log_jacobian(theta_star, z_star);
    const double lp = space.log_prior_working(theta);
    const double lp_star = space.log_prior_working(theta_star);

    // r = pi(theta*) q(theta|theta*) / pi(theta) q(theta*|theta); the
    // symmetric normal factor cancels, leaving the marginal-map Jacobians.
    const double log_r = (lp_star + log_jac) - (lp + log_jac_star);

    if (!(std::log(u) <= log_r)) {
      outcome[i] = -2;
      return;
    }
    for (const auto& w : chain.waves()) {
      if (w.scorer->score(theta_star) > w.cutoff) {
        outcome[i] = w.index;
        return;
      }
    }
    outcome[i] = -1;
    particles.row(static_cast<Eigen::Index>(i)) = theta_star.transpose();
  });

  SweepDiagnostics diag;
  diag.proposals = static_cast<int>(m);
  diag.per_wave_rejects.assign(static_cast<std::size_t>(chain.size()), 0);
  for (const int oc : outcome) {
    if (oc == -1)
      ++diag.accepts;
    else if (oc == -2)
      ++diag.early_prior_rejects;
    else
      ++diag.per_wave_rejects[static_cast<std::size_t>(oc - 1)];
  }
  diag.p_acc = m > 0 ? static_cast<double>(diag.accepts) / static_cast<double>(m) : 0.0;
  return diag;
}

}  // namespace hmsmc
