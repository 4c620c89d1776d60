#include "hmsmc/models/model.hpp"

#include "hmsmc/parallel.hpp"

namespace hmsmc {

Eigen::VectorXd SimulatorModel::simulate_batch(const Eigen::MatrixXd& thetas_working,
                                               std::uint64_t seed, std::uint64_t wave,
                                               unsigned threads) {
  const auto n = thetas_working.rows();
  Eigen::VectorXd out(n);
  parallel_for(static_cast<std::size_t>(n), threads, [&](std::size_t i) {
    double acc = 0.0;
    for (int rep = 0; rep < replicates; ++rep) {
      RngStream stream(seed, streams::train_sim, wave * 1000003ull + static_cast<std::uint64_t>(rep),
                       static_cast<std::uint64_t>(i));
      acc += simulate(thetas_working.row(static_cast<Eigen::Index>(i)), stream);
    }
    out[static_cast<Eigen::Index>(i)] = acc / static_cast<double>(replicates);
  });
  return out;
}

}  // namespace hmsmc
