#pragma once

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "hmsmc/gp.hpp"
#include "hmsmc/param_space.hpp"

namespace hmsmc {

// Implausibility from an emulator prediction.  `ratio` is the classic
// |mean - y_obs| / sqrt(s_m^2 + s_e^2 + s_d^2); `lcb` is mean - r * sd
// (optionally mean - r * sd^2 with use_variance_form, for fidelity checks).
struct ImplausibilityMeasure {
  enum class Kind { ratio, lcb };
  Kind kind = Kind::lcb;

  // ratio parameters
  double y_obs = 0.0;
  double model_sd = 0.0;        // s_m, constant
  double discrepancy_sd = 0.0;  // s_d

  // lcb parameters
  double r = 3.0;
  bool use_variance_form = false;

  double operator()(const GpPrediction& pred) const;
};

// One wave's implausibility score; GP-backed in production, analytic in tests.
class ImplausibilityScorer {
 public:
  virtual ~ImplausibilityScorer() = default;
  virtual double score(const Eigen::VectorXd& theta) const = 0;
  virtual Eigen::VectorXd score_batch(const Eigen::MatrixXd& thetas) const;
};

class EmulatorScorer final : public ImplausibilityScorer {
 public:
  EmulatorScorer(std::shared_ptr<const GpEmulator> emulator, ImplausibilityMeasure measure)
      : emulator_(std::move(emulator)), measure_(measure) {}
  double score(const Eigen::VectorXd& theta) const override;
  Eigen::VectorXd score_batch(const Eigen::MatrixXd& thetas) const override;
  const GpEmulator& emulator() const { return *emulator_; }
  const ImplausibilityMeasure& measure() const { return measure_; }

 private:
  std::shared_ptr<const GpEmulator> emulator_;
  ImplausibilityMeasure measure_;
};

class AnalyticScorer final : public ImplausibilityScorer {
 public:
  explicit AnalyticScorer(std::function<double(const Eigen::VectorXd&)> fn)
      : fn_(std::move(fn)) {}
  double score(const Eigen::VectorXd& theta) const override { return fn_(theta); }

 private:
  std::function<double(const Eigen::VectorXd&)> fn_;
};

struct WaveRecord {
  int index = 0;  // 1-based
  std::shared_ptr<const ImplausibilityScorer> scorer;
  double cutoff = 0.0;
};

struct ChainCheck {
  bool accepted = true;
  std::optional<int> rejecting_wave;  // 1-based wave index of first violation
};

// Ordered conjunction of wave constraints; theta passes if score <= cutoff at
// every wave, evaluated in ascending order with early exit.
class WaveChain {
 public:
  WaveChain() = default;

  void push(WaveRecord record);
  int size() const { return static_cast<int>(waves_.size()); }
  bool empty() const { return waves_.empty(); }
  const WaveRecord& wave(int i) const { return waves_[i]; }
  const std::vector<WaveRecord>& waves() const { return waves_; }

  ChainCheck check(const Eigen::VectorXd& theta) const;
  bool accepts(const Eigen::VectorXd& theta) const { return check(theta).accepted; }

  // Prefix chain containing waves 1..w.
  WaveChain prefix(int w) const;

  // Mask of points passing all waves, evaluated wave-by-wave over the batch.
  std::vector<bool> accepts_batch(const Eigen::MatrixXd& thetas) const;

 private:
  std::vector<WaveRecord> waves_;
};

}  // namespace hmsmc
