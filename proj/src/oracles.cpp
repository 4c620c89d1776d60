#include "hmsmc/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <stdexcept>

#include "hmsmc/kde.hpp"
#include "hmsmc/parallel.hpp"
#include "hmsmc/sobol.hpp"
#include "hmsmc/stats.hpp"

namespace hmsmc {

namespace {

Eigen::MatrixXd take_rows(const Eigen::MatrixXd& m, const std::vector<Eigen::Index>& rows) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i)
    out.row(static_cast<Eigen::Index>(i)) = m.row(rows[i]);
  return out;
}

}  // namespace

BruteForceResult brute_force_history_match(SimulatorModel& model, const ParameterSpace& space,
                                           int n_qmc, int training_size, double alpha, int waves,
                                           const ImplausibilityMeasure& measure,
                                           std::uint64_t seed, unsigned threads,
                                           const GpFitConfig& gp_base) {
  if (!space.all_box())
    throw std::invalid_argument("brute_force_history_match: requires a box-bounded space");

  BruteForceResult result;

  // dense uniform coverage of the box (working == original scale here)
  Eigen::MatrixXd survivors = initial_design(space, {n_qmc, DesignSpec::Scheme::sobol_qmc, seed});

  for (int w = 1; w <= waves; ++w) {
    if (survivors.rows() < training_size) {
      result.stop_reason = "survivor count below training size at wave " + std::to_string(w);
      break;
    }

    // uniform without-replacement training subset of the current survivors
    RngStream choose(seed, streams::oracle, static_cast<std::uint64_t>(w));
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(survivors.rows()));
    for (Eigen::Index i = 0; i < survivors.rows(); ++i) idx[static_cast<std::size_t>(i)] = i;
    for (int i = 0; i < training_size; ++i) {
      const auto j = i + static_cast<Eigen::Index>(
                             choose.below(static_cast<std::uint64_t>(survivors.rows() - i)));
      std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
    }
    idx.resize(static_cast<std::size_t>(training_size));
    const Eigen::MatrixXd train = take_rows(survivors, idx);

    const Eigen::VectorXd raw = model.simulate_batch(train, seed, static_cast<std::uint64_t>(w),
                                                     threads);
    result.simulation_count += train.rows();
    Eigen::VectorXd transformed(raw.size());
    for (Eigen::Index i = 0; i < raw.size(); ++i) transformed[i] = model.transform_output(raw[i]);

    GpFitConfig gp = gp_base;
    gp.seed = splitmix64(seed ^ (0x0facadeull + static_cast<std::uint64_t>(w)));
    gp.learn_noise = !model.deterministic();
    auto emulator = std::make_shared<const GpEmulator>(fit_gp(GpTrainingSet(train, transformed), gp));
    auto scorer = std::make_shared<EmulatorScorer>(emulator, measure);

    const Eigen::VectorXd scores = scorer->score_batch(survivors);
    std::vector<double> score_vec(scores.data(), scores.data() + scores.size());
    const auto sel = select_cutoff(score_vec, alpha);

    std::vector<Eigen::Index> keep;
    keep.reserve(static_cast<std::size_t>(sel.survivor_count));
    for (Eigen::Index i = 0; i < scores.size(); ++i)
      if (sel.survivors[static_cast<std::size_t>(i)]) keep.push_back(i);
    survivors = take_rows(survivors, keep);

    result.chain.push({w, scorer, sel.cutoff});
    result.cutoffs.push_back(sel.cutoff);
    result.survivors_per_wave.push_back(survivors);
  }

  if (result.stop_reason.empty()) result.stop_reason = "completed";
  return result;
}

RejectionResult rejection_sampler(const WaveChain& chain, const ParameterSpace& space,
                                  int n_target, std::uint64_t seed, long long max_proposals) {
  RejectionResult result;
  result.samples.resize(n_target, space.dim());
  Eigen::Index filled = 0;

  RngStream stream(seed, streams::baseline, 0x7265ull);
  const int block = 8192;
  while (filled < n_target) {
    const Eigen::MatrixXd original = space.sample_prior(block, stream);
    Eigen::MatrixXd proposals(block, space.dim());
    for (int i = 0; i < block; ++i)
      proposals.row(i) = space.to_working(original.row(i)).transpose();
    result.proposals += block;

    const auto ok = chain.accepts_batch(proposals);
    for (int i = 0; i < block && filled < n_target; ++i)
      if (ok[static_cast<std::size_t>(i)]) result.samples.row(filled++) = proposals.row(i);

    if (result.proposals >= max_proposals) {
      const double rate = static_cast<double>(filled) / static_cast<double>(result.proposals);
      if (rate < 1e-6 || filled == 0) {
        result.aborted = true;
        result.samples.conservativeResize(filled, Eigen::NoChange);
        break;
      }
    }
  }
  result.acceptance_rate =
      result.proposals > 0 ? static_cast<double>(filled) / static_cast<double>(result.proposals)
                           : 1.0;
  if (chain.empty()) result.acceptance_rate = 1.0;
  return result;
}

namespace {

// logit transform helpers for box spaces
Eigen::MatrixXd to_logit(const Eigen::MatrixXd& thetas, const ParameterSpace& space) {
  Eigen::MatrixXd z(thetas.rows(), thetas.cols());
  for (Eigen::Index i = 0; i < thetas.rows(); ++i)
    for (int k = 0; k < space.dim(); ++k) {
      const double u = (thetas(i, k) - space.working_lower(k)) /
                       (space.working_upper(k) - space.working_lower(k));
      const double uc = std::clamp(u, 1e-14, 1.0 - 1e-14);
      z(i, k) = std::log(uc / (1.0 - uc));
    }
  return z;
}

Eigen::VectorXd from_logit(const Eigen::VectorXd& z, const ParameterSpace& space) {
  Eigen::VectorXd theta(z.size());
  for (int k = 0; k < space.dim(); ++k) {
    const double s = 1.0 / (1.0 + std::exp(-z[k]));
    theta[k] = space.working_lower(k) + (space.working_upper(k) - space.working_lower(k)) * s;
  }
  return theta;
}

}  // namespace

AdhocResult adhoc_sampler(const WaveChain& chain, const Eigen::MatrixXd& particles,
                          const ParameterSpace& space, AdhocTransform transform, int n_target,
                          std::uint64_t seed, long long max_proposals) {
  if (chain.empty()) throw std::invalid_argument("adhoc_sampler: empty chain");

  // survivors of the full chain among the input particles
  const auto ok = chain.accepts_batch(particles);
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < particles.rows(); ++i)
    if (ok[static_cast<std::size_t>(i)]) keep.push_back(i);
  if (static_cast<int>(keep.size()) < space.dim() + 2)
    throw std::runtime_error("adhoc_sampler: too few survivors to fit the sampling distribution");
  const Eigen::MatrixXd survivors = take_rows(particles, keep);

  // transform survivors, fit MVN
  Eigen::MatrixXd z;
  std::unique_ptr<MarginalTransform> kde_map;
  if (transform == AdhocTransform::logit) {
    if (!space.all_box()) throw std::invalid_argument("adhoc_sampler: logit needs a box space");
    z = to_logit(survivors, space);
  } else {
    kde_map = std::make_unique<MarginalTransform>(
        fit_marginals(survivors, space, std::min<int>(1000, static_cast<int>(survivors.rows())),
                      splitmix64(seed ^ 0xadc0ull)));
    z.resize(survivors.rows(), survivors.cols());
    for (Eigen::Index i = 0; i < survivors.rows(); ++i)
      z.row(i) = kde_map->to_normal(survivors.row(i)).transpose();
  }

  const Eigen::RowVectorXd mean = z.colwise().mean();
  Eigen::MatrixXd cov = sample_covariance(z);
  cov.diagonal().array() += 1e-10;
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("adhoc_sampler: covariance factorization failed");
  const Eigen::MatrixXd chol = llt.matrixL();

  AdhocResult result;
  result.samples.resize(n_target, space.dim());
  Eigen::Index filled = 0;
  long long proposals = 0;
  RngStream stream(seed, streams::baseline, 0xadc1ull);

  while (filled < n_target && proposals < max_proposals) {
    Eigen::VectorXd eta(space.dim());
    for (int k = 0; k < space.dim(); ++k) eta[k] = stream.normal();
    const Eigen::VectorXd zs = mean.transpose() + chol * eta;
    const Eigen::VectorXd theta =
        transform == AdhocTransform::logit ? from_logit(zs, space) : kde_map->from_normal(zs);
    ++proposals;
    if (chain.accepts(theta)) result.samples.row(filled++) = theta.transpose();
  }
  if (filled < n_target) {
    result.aborted = true;
    result.samples.conservativeResize(filled, Eigen::NoChange);
  }
  result.acceptance_rate =
      proposals > 0 ? static_cast<double>(filled) / static_cast<double>(proposals) : 0.0;
  return result;
}

AdhocResult adhoc_sampler_sequence(const WaveChain& chain, const ParameterSpace& space,
                                   AdhocTransform transform, int n_target, std::uint64_t seed) {
  RngStream prior_stream(seed, streams::baseline, 0xadc2ull);
  const Eigen::MatrixXd original = space.sample_prior(n_target, prior_stream);
  Eigen::MatrixXd current(n_target, space.dim());
  for (int i = 0; i < n_target; ++i)
    current.row(i) = space.to_working(original.row(i)).transpose();

  AdhocResult last;
  for (int w = 1; w <= chain.size(); ++w) {
    last = adhoc_sampler(chain.prefix(w), current, space, transform, n_target,
                         splitmix64(seed ^ static_cast<std::uint64_t>(w)));
    if (last.aborted) return last;
    current = last.samples;
  }
  return last;
}

SmcOptResult smc_optimisation(SimulatorModel& model, const ParameterSpace& space,
                              const SmcConfig& cfg, std::uint64_t seed) {
  SmcOptResult result;
  auto pop = ParticlePopulation::from_prior(space, cfg.particles, seed);

  // initial distances for the whole population
  Eigen::VectorXd distances =
      model.simulate_batch(pop.thetas, seed, 0xd15700ull, cfg.threads);
  result.simulation_count += pop.thetas.rows();

  for (int w = 1; w <= cfg.max_waves; ++w) {
    std::vector<double> dist_vec(distances.data(), distances.data() + distances.size());
    const auto sel = select_cutoff(dist_vec, cfg.alpha);
    result.cutoffs.push_back(sel.cutoff);

    // resample particles and carried distances together
    std::vector<int> alive;
    for (int i = 0; i < cfg.particles; ++i)
      if (sel.survivors[static_cast<std::size_t>(i)]) alive.push_back(i);
    RngStream rstream(seed, streams::resample, static_cast<std::uint64_t>(w));
    Eigen::MatrixXd thetas = pop.thetas;
    Eigen::VectorXd dists = distances;
    for (int i = 0; i < cfg.particles; ++i) {
      if (sel.survivors[static_cast<std::size_t>(i)]) continue;
      const int pick = alive[static_cast<std::size_t>(rstream.below(alive.size()))];
      thetas.row(i) = pop.thetas.row(pick);
      dists[i] = distances[pick];
    }
    pop.thetas = thetas;
    pop.wave = w;
    distances = dists;

    const ProposalState prop =
        build_proposal(pop.thetas, space, cfg.kde_subset,
                       splitmix64(seed ^ static_cast<std::uint64_t>(w)), cfg.transform,
                       cfg.rw_scale);

    // distance-constrained MH sweep; every proposal is one fresh simulation
    auto sweep = [&](int sweep_idx) {
      const auto m = static_cast<std::size_t>(cfg.particles);
      std::vector<int> accepted(m, 0);
      std::vector<int> simulated(m, 0);
      Eigen::MatrixXd new_thetas = pop.thetas;
      Eigen::VectorXd new_dists = distances;
      parallel_for(m, cfg.threads, [&](std::size_t i) {
        RngStream stream(pop.stream_keys[i], streams::mcmc_move,
                         (static_cast<std::uint64_t>(w) << 20) |
                             static_cast<std::uint64_t>(sweep_idx));
        const Eigen::VectorXd theta = pop.thetas.row(static_cast<Eigen::Index>(i));
        const Eigen::VectorXd z = prop.map->to_normal(theta);
        Eigen::VectorXd eta(space.dim());
        for (int k = 0; k < space.dim(); ++k) eta[k] = stream.normal();
        const double u = stream.uniform_pos();

        const Eigen::VectorXd zs = z + prop.chol * eta;
        const Eigen::VectorXd theta_star = prop.map->from_normal(zs);
        const double log_r = (space.log_prior_working(theta_star) + prop.map->log_jacobian(theta, z)) -
                             (space.log_prior_working(theta) + prop.map->log_jacobian(theta_star, zs));
        if (!(std::log(u) <= log_r)) return;

        RngStream sim_stream(seed, streams::train_sim,
                             (static_cast<std::uint64_t>(w) << 24) |
                                 (static_cast<std::uint64_t>(sweep_idx) << 16),
                             static_cast<std::uint64_t>(i));
        const double dist = model.simulate(theta_star, sim_stream);
        simulated[i] = 1;
        if (dist <= sel.cutoff) {
          new_thetas.row(static_cast<Eigen::Index>(i)) = theta_star.transpose();
          new_dists[static_cast<Eigen::Index>(i)] = dist;
          accepted[i] = 1;
        }
      });
      for (const int s : simulated) result.simulation_count += s;
      pop.thetas = new_thetas;
      distances = new_dists;
      int acc = 0;
      for (const int a : accepted) acc += a;
      return static_cast<double>(acc) / cfg.particles;
    };

    const double p_acc = sweep(0);
    const int repeats = adaptive_repeats(p_acc, cfg.move_target_c, cfg.repeat_p_floor,
                                         cfg.repeat_max);
    double pooled_acc = p_acc;
    for (int k = 1; k <= repeats; ++k) pooled_acc += sweep(k);
    pooled_acc /= (repeats + 1);

    WaveSummary s;
    s.wave = w;
    s.cutoff = sel.cutoff;
    s.survivor_count = sel.survivor_count;
    s.survivor_fraction = static_cast<double>(sel.survivor_count) / cfg.particles;
    s.ess_after_reweight = sel.survivor_count;
    s.repeats = repeats;
    s.p_acc = p_acc;
    s.p_acc_all = pooled_acc;
    s.unique_particles = pop.unique_count();
    s.simulations_cum = result.simulation_count;
    result.summaries.push_back(s);
  }

  result.population = std::move(pop);
  return result;
}

namespace {

double ess_of(const std::vector<double>& log_w) {
  double max_lw = -std::numeric_limits<double>::infinity();
  for (const double lw : log_w) max_lw = std::max(max_lw, lw);
  if (!std::isfinite(max_lw)) return 0.0;
  double s = 0.0, s2 = 0.0;
  for (const double lw : log_w) {
    const double w = std::exp(lw - max_lw);
    s += w;
    s2 += w * w;
  }
  return s * s / s2;
}

}  // namespace

BayesSmcResult bayes_smc_anneal(const LogLikelihood& loglik, const ParameterSpace& space, int m,
                                double target_ess_ratio, std::uint64_t seed, double move_target_c,
                                int repeat_max, unsigned threads) {
  BayesSmcResult result;

  auto pop = ParticlePopulation::from_prior(space, m, seed);
  std::vector<double> lls(static_cast<std::size_t>(m));
  parallel_for(static_cast<std::size_t>(m), threads, [&](std::size_t i) {
    lls[i] = loglik(pop.thetas.row(static_cast<Eigen::Index>(i)), seed, i);
  });
  result.likelihood_evaluations += m;

  double gamma = 0.0;
  const double target = target_ess_ratio * m;
  int step = 0;

  while (gamma < 1.0) {
    ++step;
    // choose the increment by bisection on the post-reweight ESS
    auto ess_at = [&](double dg) {
      std::vector<double> lw(lls.size());
      for (std::size_t i = 0; i < lls.size(); ++i) lw[i] = dg * lls[i];
      return ess_of(lw);
    };

    double dg = 1.0 - gamma;
    if (ess_at(dg) < target) {
      double lo = 0.0, hi = dg;
      for (int it = 0; it < 60; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (ess_at(mid) >= target)
          lo = mid;
        else
          hi = mid;
      }
      dg = lo;
      if (dg <= 0.0) {
        std::cerr << "[hmsmc] bayes_smc_anneal: bisection collapsed; forcing minimal increment\n";
        dg = 1e-4;
      }
    }
    gamma = std::min(1.0, gamma + dg);
    result.temperatures.push_back(gamma);

    // reweight + multinomial resample
    std::vector<double> lw(lls.size());
    double max_lw = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < lls.size(); ++i) {
      lw[i] = dg * lls[i];
      max_lw = std::max(max_lw, lw[i]);
    }
    std::vector<double> cumulative(lls.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < lls.size(); ++i) {
      sum += std::exp(lw[i] - max_lw);
      cumulative[i] = sum;
    }
    RngStream rstream(seed, streams::resample, 0xbe5ull + static_cast<std::uint64_t>(step));
    Eigen::MatrixXd new_thetas(m, space.dim());
    std::vector<double> new_lls(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) {
      const double u = rstream.uniform() * sum;
      const auto it = std::lower_bound(cumulative.begin(), cumulative.end(), u);
      const auto pick = std::min(static_cast<std::size_t>(it - cumulative.begin()),
                                 lls.size() - 1);
      new_thetas.row(i) = pop.thetas.row(static_cast<Eigen::Index>(pick));
      new_lls[static_cast<std::size_t>(i)] = lls[pick];
    }
    pop.thetas = new_thetas;
    lls = new_lls;

    // MVN random-walk moves with adaptive repeats (pseudo-marginal MH)
    Eigen::MatrixXd cov = sample_covariance(pop.thetas);
    cov.diagonal().array() += 1e-10;
    Eigen::LLT<Eigen::MatrixXd> llt(cov);
    if (llt.info() != Eigen::Success)
      throw std::runtime_error("bayes_smc_anneal: covariance factorization failed");
    const Eigen::MatrixXd chol = llt.matrixL();

    auto sweep = [&](int sweep_idx) {
      std::vector<int> accepted(static_cast<std::size_t>(m), 0);
      parallel_for(static_cast<std::size_t>(m), threads, [&](std::size_t i) {
        RngStream stream(pop.stream_keys[i], streams::mcmc_move,
                         (static_cast<std::uint64_t>(step) << 20) |
                             static_cast<std::uint64_t>(sweep_idx));
        const Eigen::VectorXd theta = pop.thetas.row(static_cast<Eigen::Index>(i));
        Eigen::VectorXd eta(space.dim());
        for (int k = 0; k < space.dim(); ++k) eta[k] = stream.normal();
        const double u = stream.uniform_pos();
        const Eigen::VectorXd theta_star = theta + chol * eta;

        const double lp_star = space.log_prior_working(theta_star);
        if (!std::isfinite(lp_star)) return;
        const double ll_star =
            loglik(theta_star, splitmix64(seed ^ static_cast<std::uint64_t>(step)),
                   (static_cast<std::uint64_t>(sweep_idx) << 32) | static_cast<std::uint64_t>(i));
        const double lp = space.log_prior_working(theta);
        const double log_r = gamma * (ll_star - lls[i]) + lp_star - lp;
        if (std::log(u) <= log_r) {
          pop.thetas.row(static_cast<Eigen::Index>(i)) = theta_star.transpose();
          lls[i] = ll_star;
          accepted[i] = 1;
        }
      });
      result.likelihood_evaluations += m;
      int acc = 0;
      for (const int a : accepted) acc += a;
      return static_cast<double>(acc) / m;
    };

    const double p_acc = sweep(0);
    result.acceptance_rates.push_back(p_acc);
    const int repeats = adaptive_repeats(p_acc, move_target_c, 1e-3, repeat_max);
    for (int k = 1; k <= repeats; ++k) sweep(k);

    if (step > 1000)
      throw std::runtime_error("bayes_smc_anneal: temperature schedule failed to reach 1");
  }

  result.particles = pop.thetas;
  return result;
}

double grid_tv_distance(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double lo_x,
                        double hi_x, double lo_y, double hi_y, int cells_per_side) {
  const int c = cells_per_side;
  std::vector<double> pa(static_cast<std::size_t>(c) * c, 0.0), pb(pa);
  auto bin = [&](const Eigen::MatrixXd& s, std::vector<double>& pr) {
    for (Eigen::Index i = 0; i < s.rows(); ++i) {
      int ix = static_cast<int>((s(i, 0) - lo_x) / (hi_x - lo_x) * c);
      int iy = static_cast<int>((s(i, 1) - lo_y) / (hi_y - lo_y) * c);
      ix = std::clamp(ix, 0, c - 1);
      iy = std::clamp(iy, 0, c - 1);
      pr[static_cast<std::size_t>(ix) * c + iy] += 1.0 / static_cast<double>(s.rows());
    }
  };
  bin(a, pa);
  bin(b, pb);
  double tv = 0.0;
  for (std::size_t i = 0; i < pa.size(); ++i) tv += std::abs(pa[i] - pb[i]);
  return 0.5 * tv;
}

}  // namespace hmsmc
