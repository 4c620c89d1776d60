#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "hmsmc/gp.hpp"
#include "hmsmc/implausibility.hpp"
#include "hmsmc/mcmc.hpp"
#include "hmsmc/models/model.hpp"
#include "hmsmc/param_space.hpp"

namespace hmsmc {

struct ParticlePopulation {
  Eigen::MatrixXd thetas;  // working scale, M x p
  Eigen::VectorXd weights;
  int wave = 0;
  std::vector<std::uint64_t> stream_keys;

  static ParticlePopulation from_prior(const ParameterSpace& space, int m, std::uint64_t seed);
  int size() const { return static_cast<int>(thetas.rows()); }
  int unique_count() const;
};

struct SmcConfig {
  int particles = 1000;        // M
  int training_size = 100;     // N per wave
  double alpha = 0.5;          // survival proportion
  double move_target_c = 0.01; // bound on the probability of not moving
  int max_waves = 10;
  double min_acceptance = 0.0;           // stop after 2 consecutive waves below; 0 disables
  double min_cutoff_improvement = -1.0;  // stop when c_{w-1}-c_w drops below; <0 disables
  int kde_subset = 1000;
  double rw_scale = 1.0;
  TransformKind transform = TransformKind::kde_marginal;
  DesignSpec::Scheme design_scheme = DesignSpec::Scheme::sobol_qmc;
  unsigned threads = 1;
  GpFitConfig gp;
  double repeat_p_floor = 1e-3;
  int repeat_max = 100;
};

struct WaveSummary {
  int wave = 0;
  double cutoff = 0.0;
  double ess_after_reweight = 0.0;
  int survivor_count = 0;
  double survivor_fraction = 0.0;
  int repeats = 0;        // R_t (additional sweeps after the probe)
  double p_acc = 0.0;     // probing sweep
  double p_acc_all = 0.0; // pooled over all sweeps of the wave
  int unique_particles = 0;
  // min, q1, median, q3, max of the transformed training outputs
  std::array<double, 5> training_quantiles{};
  long long simulations_cum = 0;
};

struct CutoffSelection {
  double cutoff = 0.0;
  std::vector<bool> survivors;
  int survivor_count = 0;
};

// cutoff = order statistic of rank ceil(alpha*M); ties at the cutoff survive.
CutoffSelection select_cutoff(const std::vector<double>& implausibilities, double alpha);

// Survivors stay in place; dead slots are refilled with multinomial draws
// from the survivors.  Output has uniform weights.
ParticlePopulation reweight_and_resample(const ParticlePopulation& pop,
                                         const std::vector<bool>& survivors, RngStream& stream);

// R_t = ceil(log c / log(1 - p_acc)), with floor/ceiling guards.
int adaptive_repeats(double p_acc, double move_target_c, double p_floor = 1e-3, int r_max = 100,
                     bool* floored = nullptr);

// Uniform without-replacement subsample of the population for emulator
// training; deterministic models deduplicate first (result may be short).
Eigen::MatrixXd subsample_training(const ParticlePopulation& pop, int n, bool deterministic,
                                   RngStream& stream);

// Per-wave artifacts handed to a sink at wave boundaries (single writer).
struct WaveArtifacts {
  int wave = 0;
  const ParticlePopulation* population = nullptr;
  const Eigen::MatrixXd* training_inputs = nullptr;   // working scale
  const Eigen::VectorXd* training_raw = nullptr;
  const Eigen::VectorXd* training_transformed = nullptr;
  std::shared_ptr<const GpEmulator> emulator;
  const WaveSummary* summary = nullptr;
  std::optional<double> cutoff;
  const ImplausibilityMeasure* measure = nullptr;
};

class WaveSink {
 public:
  virtual ~WaveSink() = default;
  virtual void on_wave(const WaveArtifacts& artifacts) = 0;
};

struct RunResult {
  WaveChain chain;
  ParticlePopulation population;
  std::vector<WaveSummary> summaries;
  long long simulation_count = 0;
  std::string stop_reason;
};

// Algorithm: initial design + emulator, then waves of implausibility
// evaluation, adaptive cutoff, resampling, kde-transformed MCMC moves with
// adaptive repeats, training subsampling and emulator refits.
RunResult run_history_match(SimulatorModel& model, const ParameterSpace& space,
                            const ImplausibilityMeasure& measure, const SmcConfig& config,
                            std::uint64_t seed, WaveSink* sink = nullptr);

// Sample a fixed (frozen) chain with the same move machinery: per wave,
// reweight by the frozen cutoff, resample, move.  Used for sampler studies
// against brute-force sequences and analytic regions.
RunResult run_frozen_chain(const WaveChain& chain, const ParameterSpace& space,
                           const SmcConfig& config, std::uint64_t seed, WaveSink* sink = nullptr);

}  // namespace hmsmc
