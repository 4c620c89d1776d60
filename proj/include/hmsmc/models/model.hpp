#pragma once

#include <Eigen/Dense>
#include <cstdint>

#include "hmsmc/param_space.hpp"
#include "hmsmc/rng.hpp"

namespace hmsmc {

// A simulator behind the engine: working-scale parameter vector (+ RNG stream
// for stochastic models) to a scalar training output.
class SimulatorModel {
 public:
  enum class Kind { deterministic, stochastic };

  virtual ~SimulatorModel() = default;

  virtual Kind kind() const = 0;
  virtual ParameterSpace space() const = 0;

  // Raw scalar output (function value, distance, or log-likelihood).
  virtual double simulate(const Eigen::VectorXd& theta_working, RngStream& stream) const = 0;

  // Emulator training transform of the raw output; identity by default.
  virtual double transform_output(double raw) const { return raw; }

  // Batch evaluation with deterministic per-point streams.  Stateful models
  // (sentinel calibration) override; called once per wave by the engine.
  virtual Eigen::VectorXd simulate_batch(const Eigen::MatrixXd& thetas_working,
                                         std::uint64_t seed, std::uint64_t wave,
                                         unsigned threads);

  bool deterministic() const { return kind() == Kind::deterministic; }

  // Replicate count K: raw output is the average of K simulations.
  int replicates = 1;
};

}  // namespace hmsmc
