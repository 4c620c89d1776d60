#include "hmsmc/models/gene.hpp"

#include <cmath>
#include <stdexcept>

#include "hmsmc/parallel.hpp"
#include "hmsmc/particle_filter.hpp"

namespace hmsmc {

namespace {

// hazards for the eight reactions given the current state
inline void hazards(const GeneNetworkParams& prm, const GeneState& s, double* h) {
  const double dna = s.dna, rna = s.rna, p = s.p, p2 = s.p2;
  h[0] = prm.rates[0] * dna * p2;                   // DNA + P2 -> DNA.P2
  h[1] = prm.rates[1] * (prm.k - s.dna);            // DNA.P2 -> DNA + P2
  h[2] = prm.rates[2] * dna;                        // DNA -> DNA + RNA
  h[3] = prm.rates[3] * rna;                        // RNA -> RNA + P
  h[4] = prm.rates[4] * p * (p - 1.0) / 2.0;        // 2P -> P2
  h[5] = prm.rates[5] * p2;                         // P2 -> 2P
  h[6] = prm.rates[6] * rna;                        // RNA -> 0
  h[7] = prm.rates[7] * p;                          // P -> 0
}

inline void apply_reaction(GeneState& s, int r) {
  switch (r) {
    case 0: --s.dna; --s.p2; break;
    case 1: ++s.dna; ++s.p2; break;
    case 2: ++s.rna; break;
    case 3: ++s.p; break;
    case 4: s.p -= 2; ++s.p2; break;
    case 5: s.p += 2; --s.p2; break;
    case 6: --s.rna; break;
    case 7: --s.p; break;
  }
}

inline int max_species(const GeneState& s) {
  return std::max(std::max(s.dna, s.rna), std::max(s.p, s.p2));
}

}  // namespace

GeneSsaResult gene_ssa_advance(const GeneNetworkParams& params, const GeneState& init,
                               double duration, RngStream& stream, int species_cap,
                               long long event_budget) {
  if (init.dna < 0 || init.dna > params.k || init.rna < 0 || init.p < 0 || init.p2 < 0)
    throw std::invalid_argument("gene_ssa_advance: invalid initial state");

  GeneSsaResult res;
  res.state = init;
  double t = 0.0;
  double h[8];
  while (true) {
    hazards(params, res.state, h);
    double h0 = 0.0;
    for (const double hi : h) h0 += hi;
    if (h0 <= 0.0) break;  // no reaction can fire; state is frozen

    t += stream.exponential(h0);
    if (t > duration) break;

    double u = stream.uniform() * h0;
    int r = 0;
    while (r < 7 && u > h[r]) {
      u -= h[r];
      ++r;
    }
    apply_reaction(res.state, r);
    ++res.events;

    if (max_species(res.state) >= species_cap || res.events >= event_budget) {
      res.early_termination = true;
      break;
    }
  }
  return res;
}

Eigen::MatrixXd gene_generate_data(const GeneNetworkParams& params, const GeneState& init,
                                   int n_obs, double dt, std::uint64_t seed) {
  Eigen::MatrixXd data(n_obs, 4);
  GeneState state = init;
  RngStream stream(seed, streams::data_gen, 0x67656e65ull);
  for (int i = 0; i < n_obs; ++i) {
    const auto res = gene_ssa_advance(params, state, dt, stream, 1 << 30, 1ll << 40);
    state = res.state;
    data(i, 0) = state.dna;
    data(i, 1) = state.rna;
    data(i, 2) = state.p;
    data(i, 3) = state.p2;
  }
  return data;
}

std::optional<double> gene_loglik_pf(const GeneNetworkParams& params, const GeneState& init,
                                     const Eigen::MatrixXd& data, double dt, double sigma,
                                     int n_particles, std::uint64_t seed, std::uint64_t tag,
                                     int species_cap, long long event_budget) {
  if (data.cols() != 4) throw std::invalid_argument("gene_loglik_pf: data must have 4 columns");
  if (!(sigma > 0.0)) throw std::invalid_argument("gene_loglik_pf: sigma must be positive");

  const double log_norm = -std::log(sigma) - 0.918938533204672742;  // -log(sigma) - log(2pi)/2
  const double inv_2s2 = 0.5 / (sigma * sigma);

  auto propagate = [&](GeneState& s, int /*step*/, RngStream& stream) {
    const auto res = gene_ssa_advance(params, s, dt, stream, species_cap, event_budget);
    if (res.early_termination) return false;
    s = res.state;
    return true;
  };
  auto log_obs = [&](const GeneState& s, int step) {
    const double d0 = data(step, 0) - s.dna;
    const double d1 = data(step, 1) - s.rna;
    const double d2 = data(step, 2) - s.p;
    const double d3 = data(step, 3) - s.p2;
    return 4.0 * log_norm - inv_2s2 * (d0 * d0 + d1 * d1 + d2 * d2 + d3 * d3);
  };
  return bootstrap_pf_loglik(init, static_cast<int>(data.rows()), n_particles, propagate, log_obs,
                             seed, tag);
}

double gene_training_output(double loglik) {
  if (!(loglik < 0.0))
    throw std::domain_error(
        "gene_training_output: log-likelihood must be negative (non-negative value signals a "
        "filter bug)");
  return std::log(-loglik);
}

GeneModel::GeneModel(Eigen::MatrixXd data, double dt, double sigma, int pf_particles,
                     GeneState init, int k)
    : data_(std::move(data)), dt_(dt), sigma_(sigma), pf_particles_(pf_particles), init_(init),
      k_(k) {
  if (data_.cols() != 4) throw std::invalid_argument("GeneModel: data must have 4 columns");
}

ParameterSpace GeneModel::space() const {
  return ParameterSpace::half_cauchy({"c1", "c2", "c3", "c4", "c5", "c6", "c7", "c8"});
}

std::optional<double> GeneModel::loglik(const Eigen::VectorXd& theta_working, std::uint64_t seed,
                                        std::uint64_t tag) const {
  GeneNetworkParams prm;
  prm.k = k_;
  for (int i = 0; i < 8; ++i) prm.rates[static_cast<std::size_t>(i)] = std::exp(theta_working[i]);
  return gene_loglik_pf(prm, init_, data_, dt_, sigma_, pf_particles_, seed, tag);
}

double GeneModel::simulate(const Eigen::VectorXd& theta_working, RngStream& stream) const {
  // stand-alone path: derive (seed, tag) from the caller's stream so single
  // evaluations stay reproducible; sentinel substitution needs the batch path
  const std::uint64_t seed = stream.next_u64();
  const std::uint64_t tag = stream.next_u64();
  const auto ll = loglik(theta_working, seed, tag);
  if (ll) return *ll;
  if (sentinel_) return *sentinel_;
  throw std::runtime_error("GeneModel::simulate: early termination before sentinel calibration");
}

Eigen::VectorXd GeneModel::simulate_batch(const Eigen::MatrixXd& thetas_working,
                                          std::uint64_t seed, std::uint64_t wave,
                                          unsigned threads) {
  const auto n = thetas_working.rows();
  std::vector<std::optional<double>> lls(static_cast<std::size_t>(n));
  parallel_for(static_cast<std::size_t>(n), threads, [&](std::size_t i) {
    lls[i] = loglik(thetas_working.row(static_cast<Eigen::Index>(i)), seed,
                    wave * 1000003ull + static_cast<std::uint64_t>(i));
  });

  if (!sentinel_) {
    // freeze the sentinel from the first (prior) batch
    double lo = std::numeric_limits<double>::infinity();
    for (const auto& ll : lls)
      if (ll && *ll < lo) lo = *ll;
    if (!std::isfinite(lo))
      throw std::runtime_error(
          "GeneModel: no properly estimated log-likelihood in the prior batch; cannot calibrate "
          "the sentinel");
    sentinel_ = lo;
  }

  Eigen::VectorXd out(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& ll = lls[static_cast<std::size_t>(i)];
    if (ll) {
      out[i] = *ll;
    } else {
      out[i] = *sentinel_;
      ++sentinel_assignments_;
    }
  }
  return out;
}

}  // namespace hmsmc
