#include "hmsmc/smc.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <set>
#include <stdexcept>

#include "hmsmc/stats.hpp"

namespace hmsmc {

namespace {

std::array<double, 5> five_number_summary(const Eigen::VectorXd& v) {
  std::vector<double> vals(v.data(), v.data() + v.size());
  return {empirical_quantile(vals, 0.0), empirical_quantile(vals, 0.25),
          empirical_quantile(vals, 0.5), empirical_quantile(vals, 0.75),
          empirical_quantile(vals, 1.0)};
}

int count_unique_rows(const Eigen::MatrixXd& m) {
  std::set<std::vector<double>> seen;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    std::vector<double> row(m.cols());
    for (Eigen::Index k = 0; k < m.cols(); ++k) row[static_cast<std::size_t>(k)] = m(i, k);
    seen.insert(std::move(row));
  }
  return static_cast<int>(seen.size());
}

// One probing sweep, adaptive repeat count, then the repeats.
struct MovePhase {
  SweepDiagnostics probe;
  SweepDiagnostics pooled;
  int repeats = 0;
};

}  // namespace

ParticlePopulation ParticlePopulation::from_prior(const ParameterSpace& space, int m,
                                                  std::uint64_t seed) {
  ParticlePopulation pop;
  RngStream stream(seed, streams::prior_draw);
  const Eigen::MatrixXd original = space.sample_prior(m, stream);
  pop.thetas.resize(m, space.dim());
  for (int i = 0; i < m; ++i)
    pop.thetas.row(i) = space.to_working(original.row(i)).transpose();
  pop.weights = Eigen::VectorXd::Constant(m, 1.0 / m);
  pop.wave = 0;
  pop.stream_keys.resize(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i)
    pop.stream_keys[static_cast<std::size_t>(i)] =
        splitmix64(seed ^ splitmix64(0x9d2c5680u + static_cast<std::uint64_t>(i)));
  return pop;
}

int ParticlePopulation::unique_count() const { return count_unique_rows(thetas); }

CutoffSelection select_cutoff(const std::vector<double>& implausibilities, double alpha) {
  if (implausibilities.empty()) throw std::invalid_argument("select_cutoff: empty input");
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("select_cutoff: alpha outside (0,1)");
  for (const double v : implausibilities)
    if (std::isnan(v)) throw std::invalid_argument("select_cutoff: NaN implausibility");

  const double lo = *std::min_element(implausibilities.begin(), implausibilities.end());
  const double hi = *std::max_element(implausibilities.begin(), implausibilities.end());
  if (lo == hi)
    throw std::runtime_error("select_cutoff: degenerate implausibility; cannot shrink");

  CutoffSelection sel;
  sel.cutoff = quantile_order_stat(implausibilities, alpha);
  sel.survivors.resize(implausibilities.size());
  for (std::size_t i = 0; i < implausibilities.size(); ++i) {
    sel.survivors[i] = implausibilities[i] <= sel.cutoff;
    if (sel.survivors[i]) ++sel.survivor_count;
  }
  return sel;
}

ParticlePopulation reweight_and_resample(const ParticlePopulation& pop,
                                         const std::vector<bool>& survivors, RngStream& stream) {
  const int m = pop.size();
  if (static_cast<int>(survivors.size()) != m)
    throw std::invalid_argument("reweight_and_resample: mask size mismatch");

  std::vector<int> alive;
  alive.reserve(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i)
    if (survivors[static_cast<std::size_t>(i)]) alive.push_back(i);
  if (alive.empty())
    throw std::runtime_error("reweight_and_resample: zero survivors; entire space deemed implausible");

  ParticlePopulation out = pop;
  for (int i = 0; i < m; ++i) {
    if (survivors[static_cast<std::size_t>(i)]) continue;
    const int pick = alive[static_cast<std::size_t>(stream.below(alive.size()))];
    out.thetas.row(i) = pop.thetas.row(pick);
  }
  out.weights = Eigen::VectorXd::Constant(m, 1.0 / m);
  return out;
}

int adaptive_repeats(double p_acc, double move_target_c, double p_floor, int r_max, bool* floored) {
  if (!(move_target_c > 0.0 && move_target_c < 1.0))
    throw std::invalid_argument("adaptive_repeats: move_target_c outside (0,1)");
  if (floored) *floored = false;
  if (p_acc >= 1.0 - 1e-12) return 1;
  if (p_acc <= p_floor) {
    if (floored) *floored = true;
    return r_max;
  }
  const double r = std::ceil(std::log(move_target_c) / std::log1p(-p_acc));
  return std::min(r_max, static_cast<int>(r));
}

Eigen::MatrixXd subsample_training(const ParticlePopulation& pop, int n, bool deterministic,
                                   RngStream& stream) {
  const int m = pop.size();
  if (n > m) throw std::invalid_argument("subsample_training: N exceeds population size");

  Eigen::MatrixXd source = pop.thetas;
  if (deterministic) {
    std::set<std::vector<double>> seen;
    std::vector<int> keep;
    for (int i = 0; i < m; ++i) {
      std::vector<double> row(pop.thetas.cols());
      for (Eigen::Index k = 0; k < pop.thetas.cols(); ++k)
        row[static_cast<std::size_t>(k)] = pop.thetas(i, k);
      if (seen.insert(std::move(row)).second) keep.push_back(i);
    }
    source.resize(static_cast<Eigen::Index>(keep.size()), pop.thetas.cols());
    for (std::size_t i = 0; i < keep.size(); ++i)
      source.row(static_cast<Eigen::Index>(i)) = pop.thetas.row(keep[i]);
  }

  const auto avail = static_cast<int>(source.rows());
  const int take = std::min(n, avail);

  // partial Fisher-Yates over the source rows
  std::vector<int> idx(static_cast<std::size_t>(avail));
  for (int i = 0; i < avail; ++i) idx[static_cast<std::size_t>(i)] = i;
  for (int i = 0; i < take; ++i) {
    const auto j = i + static_cast<int>(stream.below(static_cast<std::uint64_t>(avail - i)));
    std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
  }
  Eigen::MatrixXd out(take, pop.thetas.cols());
  for (int i = 0; i < take; ++i) out.row(i) = source.row(idx[static_cast<std::size_t>(i)]);
  return out;
}

namespace {

MovePhase move_phase_impl(ParticlePopulation& pop, const WaveChain& target,
                          const ParameterSpace& space, const SmcConfig& cfg, std::uint64_t seed,
                          int wave) {
  MovePhase out;
  const ProposalState prop = build_proposal(pop.thetas, space, cfg.kde_subset,
                                            splitmix64(seed ^ static_cast<std::uint64_t>(wave)),
                                            cfg.transform, cfg.rw_scale);

  const auto sweep_key = [wave](int sweep) {
    return (static_cast<std::uint64_t>(wave) << 20) | static_cast<std::uint64_t>(sweep);
  };

  out.probe = mh_sweep(pop.thetas, pop.stream_keys, target, prop, space, sweep_key(0),
                       cfg.threads, /*verify_inputs=*/true);
  out.pooled = out.probe;

  bool floored = false;
  out.repeats = adaptive_repeats(out.probe.p_acc, cfg.move_target_c, cfg.repeat_p_floor,
                                 cfg.repeat_max, &floored);
  if (floored)
    std::cerr << "[hmsmc] wave " << wave << ": acceptance " << out.probe.p_acc
              << " at or below floor; clamping repeats to " << cfg.repeat_max << "\n";

  for (int k = 1; k <= out.repeats; ++k) {
    const auto diag = mh_sweep(pop.thetas, pop.stream_keys, target, prop, space, sweep_key(k),
                               cfg.threads, /*verify_inputs=*/false);
    out.pooled.accumulate(diag);
  }
  return out;
}

GpFitConfig wave_gp_config(const SmcConfig& cfg, std::uint64_t seed, int wave, bool stochastic) {
  GpFitConfig gp = cfg.gp;
  gp.seed = splitmix64(seed ^ (0xa5a5a5a5ull + static_cast<std::uint64_t>(wave)));
  gp.learn_noise = stochastic;
  return gp;
}

}  // namespace

RunResult run_history_match(SimulatorModel& model, const ParameterSpace& space,
                            const ImplausibilityMeasure& measure, const SmcConfig& cfg,
                            std::uint64_t seed, WaveSink* sink) {
  if (cfg.training_size > cfg.particles)
    throw std::invalid_argument("run_history_match: training_size must be <= particles");
  if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0))
    throw std::invalid_argument("run_history_match: alpha outside (0,1)");

  RunResult result;
  result.population = ParticlePopulation::from_prior(space, cfg.particles, seed);
  long long sims = 0;

  // wave 0: space filling design over the prior, simulate, fit E_0
  DesignSpec design_spec{cfg.training_size, cfg.design_scheme, seed};
  const Eigen::MatrixXd design = initial_design(space, design_spec);
  Eigen::MatrixXd train_inputs(design.rows(), design.cols());
  for (Eigen::Index i = 0; i < design.rows(); ++i)
    train_inputs.row(i) = space.to_working(design.row(i)).transpose();

  Eigen::VectorXd raw = model.simulate_batch(train_inputs, seed, 0, cfg.threads);
  sims += train_inputs.rows();
  Eigen::VectorXd transformed(raw.size());
  for (Eigen::Index i = 0; i < raw.size(); ++i) transformed[i] = model.transform_output(raw[i]);

  std::shared_ptr<const GpEmulator> emulator;
  try {
    emulator = std::make_shared<GpEmulator>(
        fit_gp(GpTrainingSet(train_inputs, transformed),
               wave_gp_config(cfg, seed, 0, !model.deterministic()), nullptr));
  } catch (const std::exception& e) {
    result.stop_reason = std::string("wave 0 emulator fit failed: ") + e.what();
    result.simulation_count = sims;
    return result;
  }

  {
    WaveSummary s;
    s.wave = 0;
    s.survivor_count = cfg.particles;
    s.survivor_fraction = 1.0;
    s.ess_after_reweight = cfg.particles;
    s.unique_particles = result.population.unique_count();
    s.training_quantiles = five_number_summary(transformed);
    s.simulations_cum = sims;
    result.summaries.push_back(s);
    if (sink) {
      WaveArtifacts art;
      art.wave = 0;
      art.population = &result.population;
      art.training_inputs = &train_inputs;
      art.training_raw = &raw;
      art.training_transformed = &transformed;
      art.emulator = emulator;
      art.summary = &result.summaries.back();
      art.measure = &measure;
      sink->on_wave(art);
    }
  }

  int low_acceptance_streak = 0;
  double previous_cutoff = std::numeric_limits<double>::quiet_NaN();

  for (int w = 1; w <= cfg.max_waves; ++w) {
    auto scorer = std::make_shared<EmulatorScorer>(emulator, measure);

    const Eigen::VectorXd scores = scorer->score_batch(result.population.thetas);
    std::vector<double> score_vec(scores.data(), scores.data() + scores.size());

    CutoffSelection sel;
    try {
      sel = select_cutoff(score_vec, cfg.alpha);
    } catch (const std::exception& e) {
      result.stop_reason = std::string("stopped at wave ") + std::to_string(w) + ": " + e.what();
      break;
    }

    result.chain.push({w, scorer, sel.cutoff});

    RngStream resample_stream(seed, streams::resample, static_cast<std::uint64_t>(w));
    try {
      result.population = reweight_and_resample(result.population, sel.survivors, resample_stream);
    } catch (const std::exception& e) {
      result.stop_reason = std::string("stopped at wave ") + std::to_string(w) + ": " + e.what();
      break;
    }
    result.population.wave = w;

    MovePhase phase;
    try {
      phase = move_phase_impl(result.population, result.chain, space, cfg, seed, w);
    } catch (const std::exception& e) {
      result.stop_reason = std::string("stopped at wave ") + std::to_string(w) +
                           " (move step): " + e.what();
      break;
    }

    WaveSummary s;
    s.wave = w;
    s.cutoff = sel.cutoff;
    s.survivor_count = sel.survivor_count;
    s.survivor_fraction = static_cast<double>(sel.survivor_count) / cfg.particles;
    s.ess_after_reweight = sel.survivor_count;
    s.repeats = phase.repeats;
    s.p_acc = phase.probe.p_acc;
    s.p_acc_all = phase.pooled.p_acc;
    s.unique_particles = result.population.unique_count();

    // training set for the next emulator
    RngStream train_stream(seed, streams::train_sim, static_cast<std::uint64_t>(w), 0xfeed);
    Eigen::MatrixXd train;
    try {
      train = subsample_training(result.population, cfg.training_size, model.deterministic(),
                                 train_stream);
      if (model.deterministic() && train.rows() < 2)
        throw std::runtime_error("fewer than 2 unique particles for a deterministic model");
    } catch (const std::exception& e) {
      result.stop_reason = std::string("stopped at wave ") + std::to_string(w) + ": " + e.what();
      result.summaries.push_back(s);
      break;
    }
    if (model.deterministic() && train.rows() < cfg.training_size)
      std::cerr << "[hmsmc] wave " << w << ": deduplication reduced training set to "
                << train.rows() << " rows\n";

    raw = model.simulate_batch(train, seed, static_cast<std::uint64_t>(w), cfg.threads);
    sims += train.rows();
    transformed.resize(raw.size());
    for (Eigen::Index i = 0; i < raw.size(); ++i) transformed[i] = model.transform_output(raw[i]);

    std::shared_ptr<const GpEmulator> next_emulator;
    try {
      // warm start from the previous wave keeps successive fits in the same
      // likelihood basin; refit-to-refit jumps in the predictive sd otherwise
      // swamp the cutoff sequence once the region has converged
      next_emulator = std::make_shared<GpEmulator>(
          fit_gp(GpTrainingSet(train, transformed),
                 wave_gp_config(cfg, seed, w, !model.deterministic()),
                 &emulator->hyperparams()));
    } catch (const std::exception& e) {
      result.stop_reason = std::string("stopped at wave ") + std::to_string(w) +
                           " (emulator fit): " + e.what();
      result.summaries.push_back(s);
      break;
    }
    emulator = next_emulator;

    s.training_quantiles = five_number_summary(transformed);
    s.simulations_cum = sims;
    result.summaries.push_back(s);

    if (sink) {
      WaveArtifacts art;
      art.wave = w;
      art.population = &result.population;
      art.training_inputs = &train;
      art.training_raw = &raw;
      art.training_transformed = &transformed;
      art.emulator = emulator;
      art.summary = &result.summaries.back();
      art.cutoff = sel.cutoff;
      art.measure = &measure;
      sink->on_wave(art);
    }

    // stopping rules beyond max_waves
    if (cfg.min_acceptance > 0.0) {
      low_acceptance_streak = phase.probe.p_acc < cfg.min_acceptance ? low_acceptance_streak + 1 : 0;
      if (low_acceptance_streak >= 2) {
        result.stop_reason = "stopped: acceptance below min_acceptance for 2 consecutive waves";
        break;
      }
    }
    if (cfg.min_cutoff_improvement >= 0.0 && w >= 2 &&
        previous_cutoff - sel.cutoff < cfg.min_cutoff_improvement) {
      result.stop_reason = "stopped: cutoff improvement below threshold";
      break;
    }
    previous_cutoff = sel.cutoff;
  }

  if (result.stop_reason.empty()) result.stop_reason = "completed max_waves";
  result.simulation_count = sims;
  return result;
}

RunResult run_frozen_chain(const WaveChain& chain, const ParameterSpace& space,
                           const SmcConfig& cfg, std::uint64_t seed, WaveSink* sink) {
  RunResult result;
  result.population = ParticlePopulation::from_prior(space, cfg.particles, seed);
  result.chain = chain;

  for (int w = 1; w <= chain.size(); ++w) {
    const auto& record = chain.wave(w - 1);
    const Eigen::VectorXd scores = record.scorer->score_batch(result.population.thetas);

    std::vector<bool> survivors(static_cast<std::size_t>(scores.size()));
    int count = 0;
    for (Eigen::Index i = 0; i < scores.size(); ++i) {
      survivors[static_cast<std::size_t>(i)] = scores[i] <= record.cutoff;
      if (survivors[static_cast<std::size_t>(i)]) ++count;
    }

    WaveSummary s;
    s.wave = w;
    s.cutoff = record.cutoff;
    s.survivor_count = count;
    s.survivor_fraction = static_cast<double>(count) / cfg.particles;
    s.ess_after_reweight = count;

    RngStream resample_stream(seed, streams::resample, static_cast<std::uint64_t>(w));
    try {
      result.population = reweight_and_resample(result.population, survivors, resample_stream);
    } catch (const std::exception& e) {
      result.stop_reason = std::string("stopped at wave ") + std::to_string(w) + ": " + e.what();
      result.summaries.push_back(s);
      break;
    }
    result.population.wave = w;

    MovePhase phase;
    try {
      phase = move_phase_impl(result.population, chain.prefix(w), space, cfg, seed, w);
    } catch (const std::exception& e) {
      result.stop_reason = std::string("stopped at wave ") + std::to_string(w) +
                           " (move step): " + e.what();
      result.summaries.push_back(s);
      break;
    }

    s.repeats = phase.repeats;
    s.p_acc = phase.probe.p_acc;
    s.p_acc_all = phase.pooled.p_acc;
    s.unique_particles = result.population.unique_count();
    result.summaries.push_back(s);

    if (sink) {
      WaveArtifacts art;
      art.wave = w;
      art.population = &result.population;
      art.summary = &result.summaries.back();
      art.cutoff = record.cutoff;
      sink->on_wave(art);
    }
  }

  if (result.stop_reason.empty()) result.stop_reason = "completed frozen chain";
  return result;
}

}  // namespace hmsmc
