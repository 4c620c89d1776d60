#include "hmsmc/implausibility.hpp"

#include <cmath>
#include <stdexcept>

namespace hmsmc {

double ImplausibilityMeasure::operator()(const GpPrediction& pred) const {
  if (kind == Kind::ratio) {
    const double denom2 =
        model_sd * model_sd + pred.sd * pred.sd + discrepancy_sd * discrepancy_sd;
    if (!(denom2 > 0.0))
      throw std::domain_error("ImplausibilityMeasure: ratio denominator is zero");
    return std::abs(pred.mean - y_obs) / std::sqrt(denom2);
  }
  return use_variance_form ? pred.mean - r * pred.sd * pred.sd : pred.mean - r * pred.sd;
}

Eigen::VectorXd ImplausibilityScorer::score_batch(const Eigen::MatrixXd& thetas) const {
  Eigen::VectorXd out(thetas.rows());
  for (Eigen::Index i = 0; i < thetas.rows(); ++i) out[i] = score(thetas.row(i));
  return out;
}

double EmulatorScorer::score(const Eigen::VectorXd& theta) const {
  return measure_(emulator_->predict(theta));
}

Eigen::VectorXd EmulatorScorer::score_batch(const Eigen::MatrixXd& thetas) const {
  const auto pred = emulator_->predict_batch(thetas);
  Eigen::VectorXd out(thetas.rows());
  for (Eigen::Index i = 0; i < thetas.rows(); ++i)
    out[i] = measure_({pred.means[i], pred.sds[i]});
  return out;
}

void WaveChain::push(WaveRecord record) {
  const int expected = static_cast<int>(waves_.size()) + 1;
  if (record.index != expected)
    throw std::invalid_argument("WaveChain: wave indices must be consecutive from 1");
  if (std::isnan(record.cutoff)) throw std::invalid_argument("WaveChain: cutoff is NaN");
  waves_.push_back(std::move(record));
}

ChainCheck WaveChain::check(const Eigen::VectorXd& theta) const {
  for (const auto& w : waves_) {
    if (w.scorer->score(theta) > w.cutoff) return {false, w.index};
  }
  return {true, std::nullopt};
}

WaveChain WaveChain::prefix(int w) const {
  WaveChain out;
  for (int i = 0; i < w && i < size(); ++i) out.push(waves_[i]);
  return out;
}

std::vector<bool> WaveChain::accepts_batch(const Eigen::MatrixXd& thetas) const {
  const auto n = thetas.rows();
  std::vector<bool> alive(static_cast<std::size_t>(n), true);
  std::vector<Eigen::Index> active(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) active[static_cast<std::size_t>(i)] = i;

  for (const auto& w : waves_) {
    if (active.empty()) break;
    Eigen::MatrixXd sub(static_cast<Eigen::Index>(active.size()), thetas.cols());
    for (std::size_t i = 0; i < active.size(); ++i) sub.row(static_cast<Eigen::Index>(i)) = thetas.row(active[i]);
    const Eigen::VectorXd scores = w.scorer->score_batch(sub);
    std::vector<Eigen::Index> next;
    next.reserve(active.size());
    for (std::size_t i = 0; i < active.size(); ++i) {
      if (scores[static_cast<Eigen::Index>(i)] <= w.cutoff) {
        next.push_back(active[i]);
      } else {
        alive[static_cast<std::size_t>(active[i])] = false;
      }
    }
    active.swap(next);
  }
  return alive;
}

}  // namespace hmsmc
