#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include "hmsmc/rng.hpp"

namespace hmsmc {

// Bootstrap particle filter over a generic state type.
//
//   propagate(state, step, stream) -> bool; false signals early termination
//     (species cap / event budget) which aborts the whole estimate.
//   log_obs_density(state, step) -> double log weight.
//
// Weights are handled in log space with a per-step shift, so only exact -inf
// across all particles gives "zero total weight".  Returns nullopt on early
// termination or zero weight; otherwise the log-likelihood estimate.
template <typename State, typename Propagate, typename LogObsDensity>
std::optional<double> bootstrap_pf_loglik(const State& init, int n_steps, int n_particles,
                                          Propagate&& propagate, LogObsDensity&& log_obs_density,
                                          std::uint64_t seed, std::uint64_t stream_tag) {
  if (n_particles < 2) throw std::invalid_argument("bootstrap_pf_loglik: need at least 2 particles");

  std::vector<State> particles(static_cast<std::size_t>(n_particles), init);
  std::vector<State> resampled(particles.size());
  std::vector<double> log_w(particles.size());
  std::vector<double> cumulative(particles.size());

  double loglik = 0.0;
  for (int step = 0; step < n_steps; ++step) {
    double max_lw = -std::numeric_limits<double>::infinity();
    for (int j = 0; j < n_particles; ++j) {
      RngStream stream(seed, streams::pf_propagate,
                       stream_tag * 1000003ull + static_cast<std::uint64_t>(step),
                       static_cast<std::uint64_t>(j));
      if (!propagate(particles[static_cast<std::size_t>(j)], step, stream))
        return std::nullopt;  // early termination
      log_w[static_cast<std::size_t>(j)] =
          log_obs_density(particles[static_cast<std::size_t>(j)], step);
      max_lw = std::max(max_lw, log_w[static_cast<std::size_t>(j)]);
    }
    if (!std::isfinite(max_lw)) return std::nullopt;  // zero total weight

    double sum_w = 0.0;
    for (int j = 0; j < n_particles; ++j) {
      const double w = std::exp(log_w[static_cast<std::size_t>(j)] - max_lw);
      sum_w += w;
      cumulative[static_cast<std::size_t>(j)] = sum_w;
    }
    loglik += max_lw + std::log(sum_w / n_particles);

    // multinomial resample every step
    RngStream rstream(seed, streams::pf_resample,
                      stream_tag * 1000003ull + static_cast<std::uint64_t>(step));
    for (int j = 0; j < n_particles; ++j) {
      const double u = rstream.uniform() * sum_w;
      const auto it = std::lower_bound(cumulative.begin(), cumulative.end(), u);
      const auto pick = static_cast<std::size_t>(it - cumulative.begin());
      resampled[static_cast<std::size_t>(j)] =
          particles[std::min(pick, particles.size() - 1)];
    }
    particles.swap(resampled);
  }
  return loglik;
}

}  // namespace hmsmc
