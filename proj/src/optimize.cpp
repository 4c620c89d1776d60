#include "hmsmc/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace hmsmc {

NelderMeadResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f,
                             const Eigen::VectorXd& start, double initial_step,
                             int max_evals, double tol) {
  const int n = static_cast<int>(start.size());
  const double alpha = 1.0, gamma = 2.0, rho = 0.5, sigma = 0.5;

  std::vector<Eigen::VectorXd> pts(n + 1, start);
  std::vector<double> vals(n + 1);
  int evals = 0;
  auto eval = [&](const Eigen::VectorXd& x) {
    ++evals;
    const double v = f(x);
    return std::isfinite(v) ? v : 1e300;
  };

  for (int i = 1; i <= n; ++i) pts[i][i - 1] += initial_step;
  for (int i = 0; i <= n; ++i) vals[i] = eval(pts[i]);

  std::vector<int> order(n + 1);
  while (evals < max_evals) {
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) { return vals[a] < vals[b]; });
    const int best = order[0], worst = order[n], second_worst = order[n - 1];

    if (std::abs(vals[worst] - vals[best]) <= tol * (std::abs(vals[best]) + tol)) break;

    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
    for (int i = 0; i <= n; ++i)
      if (i != worst) centroid += pts[i];
    centroid /= static_cast<double>(n);

    const Eigen::VectorXd reflected = centroid + alpha * (centroid - pts[worst]);
    const double fr = eval(reflected);

    if (fr < vals[best]) {
      const Eigen::VectorXd expanded = centroid + gamma * (reflected - centroid);
      const double fe = eval(expanded);
      if (fe < fr) {
        pts[worst] = expanded;
        vals[worst] = fe;
      } else {
        pts[worst] = reflected;
        vals[worst] = fr;
      }
    } else if (fr < vals[second_worst]) {
      pts[worst] = reflected;
      vals[worst] = fr;
    } else {
      const Eigen::VectorXd contracted = centroid + rho * (pts[worst] - centroid);
      const double fc = eval(contracted);
      if (fc < vals[worst]) {
        pts[worst] = contracted;
        vals[worst] = fc;
      } else {
        for (int i = 0; i <= n; ++i) {
          if (i == best) continue;
          pts[i] = pts[best] + sigma * (pts[i] - pts[best]);
          vals[i] = eval(pts[i]);
        }
      }
    }
  }

  int best = 0;
  for (int i = 1; i <= n; ++i)
    if (vals[i] < vals[best]) best = i;
  return {pts[best], vals[best], evals};
}

}  // namespace hmsmc
