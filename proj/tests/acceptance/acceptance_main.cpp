// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure.  Criteria share artifacts (the brute-force toy chain feeds the
// sampler comparisons), so they run in dependency order.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "common/test_stats.hpp"
#include "hmsmc/config.hpp"
#include "hmsmc/io.hpp"
#include "hmsmc/kde.hpp"
#include "hmsmc/models/gene.hpp"
#include "hmsmc/models/rrm.hpp"
#include "hmsmc/models/toy.hpp"
#include "hmsmc/oracles.hpp"
#include "hmsmc/particle_filter.hpp"
#include "hmsmc/smc.hpp"

using namespace hmsmc;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;
std::vector<std::string> g_notes;

class Criterion {
 public:
  Criterion(int number, std::string title)
      : number_(number), title_(std::move(title)), start_(std::chrono::steady_clock::now()) {}

  void check(bool ok, const std::string& what) {
    all_ok_ &= ok;
    details_.push_back(std::string(ok ? "ok: " : "FAILED: ") + what);
  }

  double elapsed_s() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

  ~Criterion() {
    const double secs = elapsed_s();
    std::printf("[%s] criterion %d: %s (%.1fs)\n", all_ok_ ? "PASS" : "FAIL", number_,
                title_.c_str(), secs);
    for (const auto& d : details_) std::printf("        %s\n", d.c_str());
    std::fflush(stdout);
    if (!all_ok_) ++g_failures;
  }

 private:
  int number_;
  std::string title_;
  bool all_ok_ = true;
  std::vector<std::string> details_;
  std::chrono::steady_clock::time_point start_;
};

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

constexpr double kPi = 3.14159265358979323846;

// ---------------------------------------------------------------- criterion 2
BruteForceResult criterion_2() {
  Criterion c(2, "brute-force oracle: 2^20 QMC points, 9 waves at alpha=0.5");

  ToyModel model;
  ImplausibilityMeasure measure;  // lcb, r = 3
  GpFitConfig gp;
  BruteForceResult bf = brute_force_history_match(model, model.space(), 1 << 20, 50, 0.5, 9,
                                                  measure, 4242, 2, gp);

  c.check(bf.stop_reason == "completed", "completed 9 waves (" + bf.stop_reason + ")");
  const long long final_count =
      bf.survivors_per_wave.empty() ? 0 : bf.survivors_per_wave.back().rows();
  c.check(std::llabs(final_count - 2048) <= 16,
          "final survivors " + std::to_string(final_count) + " = 2048 +/- ties");

  // halving with tie slack at every wave
  long long prev = 1 << 20;
  bool halves = true;
  for (const auto& s : bf.survivors_per_wave) {
    const long long expect = (prev + 1) / 2;
    if (std::llabs(s.rows() - expect) > std::max<long long>(4, prev / 1000)) halves = false;
    prev = s.rows();
  }
  c.check(halves, "survivor counts halve (with tie slack) at every wave");

  // exact nesting: every wave-w survivor appears among wave-(w-1) survivors
  bool nested = true;
  for (std::size_t w = 1; w < bf.survivors_per_wave.size() && nested; ++w) {
    std::set<std::pair<double, double>> parent;
    const auto& prev_set = bf.survivors_per_wave[w - 1];
    for (Eigen::Index i = 0; i < prev_set.rows(); ++i)
      parent.insert({prev_set(i, 0), prev_set(i, 1)});
    const auto& cur = bf.survivors_per_wave[w];
    for (Eigen::Index i = 0; i < cur.rows(); ++i)
      if (!parent.count({cur(i, 0), cur(i, 1)})) {
        nested = false;
        break;
      }
  }
  c.check(nested, "survivor sets nest exactly");
  c.check(c.elapsed_s() < 15 * 60, "runtime under 15 minutes");
  return bf;
}

// ---------------------------------------------------------------- criterion 1
void criterion_1(const BruteForceResult& bf) {
  Criterion c(1, "toy replication: M=5000, N=50, alpha=0.5, r=3, 9 waves");

  // (a), (b): the engine's own adaptive run, single-threaded
  ToyModel model;
  ImplausibilityMeasure measure;
  SmcConfig cfg;
  cfg.particles = 5000;
  cfg.training_size = 50;
  cfg.alpha = 0.5;
  cfg.max_waves = 9;
  cfg.kde_subset = 1000;
  cfg.threads = 1;
  const auto run = run_history_match(model, model.space(), measure, cfg, 1001);

  c.check(run.chain.size() == 9, "engine completed 9 waves (" + run.stop_reason + ")");

  double product = 1.0;
  bool acc_ok = true;
  double worst_acc = 1.0;
  for (std::size_t w = 1; w < run.summaries.size(); ++w) {
    product *= run.summaries[w].survivor_fraction;
    const double acc = run.summaries[w].p_acc_all;
    worst_acc = std::min(worst_acc, acc);
    if (acc < 0.30 || acc > 0.70) acc_ok = false;
  }
  c.check(std::abs(product - std::pow(0.5, 9)) < 0.05 * std::pow(0.5, 9),
          "product of survivor fractions " + fmt(product) + " = 0.5^9 +/- tie slack (paper's "
          "0.2% brute-force acceptance)");
  c.check(acc_ok, "per-wave MCMC acceptance within [0.30, 0.70] (worst " + fmt(worst_acc) + ")");

  // (c): sample the frozen brute-force sequence and compare occupancy
  SmcConfig fcfg = cfg;
  fcfg.threads = 2;
  const auto frozen = run_frozen_chain(bf.chain, model.space(), fcfg, 2002);
  c.check(frozen.summaries.size() == 9,
          "frozen-sequence SMC completed (" + frozen.stop_reason + ")");

  const auto rejection = rejection_sampler(bf.chain, model.space(), 5000, 3003);
  c.check(!rejection.aborted, "rejection reference drew 5000 exact samples (acceptance " +
                                   fmt(rejection.acceptance_rate) + ")");

  const auto adhoc_logit =
      adhoc_sampler_sequence(bf.chain, model.space(), AdhocTransform::logit, 5000, 4004);
  const auto adhoc_kde =
      adhoc_sampler_sequence(bf.chain, model.space(), AdhocTransform::kde_marginal, 5000, 5005);
  c.check(!adhoc_logit.aborted && !adhoc_kde.aborted, "both ad-hoc samplers completed");

  const double tv_smc =
      grid_tv_distance(frozen.population.thetas, rejection.samples, 0, kPi, 0, kPi);
  const double tv_logit = grid_tv_distance(adhoc_logit.samples, rejection.samples, 0, kPi, 0, kPi);
  const double tv_kde = grid_tv_distance(adhoc_kde.samples, rejection.samples, 0, kPi, 0, kPi);
  c.check(tv_smc < 0.15, "SMC grid-occupancy TV vs rejection " + fmt(tv_smc) + " < 0.15");
  c.check(tv_smc < tv_logit, "SMC TV " + fmt(tv_smc) + " < logit ad-hoc TV " + fmt(tv_logit));
  c.check(tv_smc < tv_kde, "SMC TV " + fmt(tv_smc) + " < kde ad-hoc TV " + fmt(tv_kde));
  c.check(c.elapsed_s() < 10 * 60, "runtime under 10 minutes");

  g_notes.push_back("criterion 1: survivor-fraction product " + fmt(product) + ", TV smc/logit/kde " +
                    fmt(tv_smc) + "/" + fmt(tv_logit) + "/" + fmt(tv_kde));
}

// ---------------------------------------------------------------- criterion 3
void criterion_3() {
  Criterion c(3, "GP correctness: 200 random sets vs direct-solve reference");

  RngStream s(11, streams::test);
  double worst_mean = 0.0, worst_sd = 0.0, worst_interp = 0.0;
  for (int rep = 0; rep < 200; ++rep) {
    const int n = 5 + static_cast<int>(s.below(46));
    const int p = 1 + static_cast<int>(s.below(7));

    Eigen::MatrixXd x(n, p);
    const double sep = p == 1 ? 0.02 : 0.1;
    int filled = 0;
    while (filled < n) {
      Eigen::VectorXd cand(p);
      for (int k = 0; k < p; ++k) cand[k] = s.uniform(-2.0, 3.0);
      bool ok = true;
      for (int i = 0; i < filled && ok; ++i)
        if ((x.row(i).transpose() - cand).norm() < sep) ok = false;
      if (ok) x.row(filled++) = cand.transpose();
    }
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) y[i] = std::sin(x(i, 0)) + 0.2 * x.row(i).squaredNorm();

    GpHyperparams hp;
    hp.signal_variance = std::exp(s.uniform(std::log(0.5), std::log(2.0)));
    hp.lengthscales = Eigen::VectorXd::NullaryExpr(p, [&](Eigen::Index) {
      return std::exp(s.uniform(std::log(0.3), std::log(1.2)));
    });
    hp.noise_variance = std::exp(s.uniform(std::log(1e-5), std::log(1e-2)));

    const GpTrainingSet tr(x, y);
    const GpEmulator em(tr, hp);

    // independent direct-solve route (explicit inverse, no Cholesky)
    const Eigen::MatrixXd xs =
        tr.std_inputs().array().rowwise() / hp.lengthscales.transpose().array();
    Eigen::MatrixXd kmat(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        kmat(i, j) =
            hp.signal_variance * std::exp(-0.5 * (xs.row(i) - xs.row(j)).squaredNorm());
    kmat.diagonal().array() += hp.noise_variance + 1e-8;
    const Eigen::MatrixXd kinv = kmat.inverse();

    const double mean_scale = tr.output_sd();
    const double sd_scale = std::sqrt(hp.signal_variance) * tr.output_sd();
    for (int q = 0; q < 5; ++q) {
      Eigen::VectorXd theta(p);
      for (int k = 0; k < p; ++k) theta[k] = s.uniform(-2.5, 3.5);
      const Eigen::VectorXd qz = tr.standardize_input(theta).cwiseQuotient(hp.lengthscales);
      Eigen::VectorXd ks(n);
      for (int i = 0; i < n; ++i)
        ks[i] = hp.signal_variance * std::exp(-0.5 * (xs.row(i).transpose() - qz).squaredNorm());
      const double ref_mean = ks.dot(kinv * tr.std_outputs()) * tr.output_sd() + tr.output_mean();
      const double ref_var = hp.signal_variance - ks.dot(kinv * ks);
      const double ref_sd = std::sqrt(std::max(0.0, ref_var)) * tr.output_sd();

      const auto got = em.predict(theta);
      worst_mean = std::max(worst_mean,
                            std::abs(got.mean - ref_mean) / std::max(std::abs(ref_mean), mean_scale));
      worst_sd = std::max(worst_sd, std::abs(got.sd - ref_sd) / std::max(ref_sd, sd_scale));
    }

  }

  // noiseless interpolation needs its own conditioning guard: the only error
  // source is jitter * ||alpha||, which explodes when points nearly coincide
  // relative to the lengthscale, so spread the points and keep scales modest
  for (int rep = 0; rep < 40; ++rep) {
    const int n = 5 + static_cast<int>(s.below(26));
    const int p = 2 + static_cast<int>(s.below(6));
    Eigen::MatrixXd x(n, p);
    int filled = 0;
    while (filled < n) {
      Eigen::VectorXd cand(p);
      for (int k = 0; k < p; ++k) cand[k] = s.uniform(-2.0, 3.0);
      bool ok = true;
      for (int i = 0; i < filled && ok; ++i)
        if ((x.row(i).transpose() - cand).norm() < 0.3) ok = false;
      if (ok) x.row(filled++) = cand.transpose();
    }
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) y[i] = std::sin(x(i, 0)) + 0.2 * x.row(i).squaredNorm();
    GpHyperparams hp;
    hp.signal_variance = 1.0;
    hp.lengthscales = Eigen::VectorXd::NullaryExpr(p, [&](Eigen::Index) {
      return std::exp(s.uniform(std::log(0.3), std::log(0.8)));
    });
    hp.noise_variance = 0.0;
    const GpTrainingSet tr(x, y);
    const GpEmulator em(tr, hp);
    for (int i = 0; i < n; ++i) {
      const auto pred = em.predict(x.row(i));
      worst_interp = std::max(worst_interp, std::abs(pred.mean - tr.raw_outputs()[i]) /
                                                std::max(1.0, tr.output_sd()));
    }
  }
  c.check(worst_mean < 1e-8, "mean agreement (worst scaled error " + fmt(worst_mean) + " < 1e-8)");
  c.check(worst_sd < 1e-6, "sd agreement (worst scaled error " + fmt(worst_sd) + " < 1e-6)");
  c.check(worst_interp < 1e-6,
          "noiseless interpolation error " + fmt(worst_interp) + " < 1e-6");
}

// ---------------------------------------------------------------- criterion 4
void criterion_4() {
  Criterion c(4, "kde transform: round trips, Jacobian vs finite differences, pushforward KS");

  struct Case {
    std::string name;
    ParameterSpace space;
    Eigen::MatrixXd particles;
  };
  std::vector<Case> cases;

  {  // toy box
    ToyModel model;
    RngStream s(21, streams::test);
    Eigen::MatrixXd pts(3000, 2);
    for (int i = 0; i < 3000; ++i) {
      pts(i, 0) = std::clamp(1.6 + 0.5 * s.normal(), 1e-3, kPi - 1e-3);
      pts(i, 1) = std::clamp(s.uniform(0.3, 2.8), 1e-3, kPi - 1e-3);
    }
    cases.push_back({"toy", model.space(), pts});
  }
  {  // hydrology box (7-d)
    const auto space = rrm_prior_space();
    RngStream s(22, streams::test);
    Eigen::MatrixXd pts(3000, 7);
    for (int i = 0; i < 3000; ++i)
      for (int k = 0; k < 7; ++k) {
        const double lo = space.dimension(k).lower, hi = space.dimension(k).upper;
        const double mid = 0.5 * (lo + hi), sd = 0.15 * (hi - lo);
        pts(i, k) = std::clamp(mid + sd * s.normal(), lo + 1e-9 * (hi - lo), hi - 1e-9 * (hi - lo));
      }
    cases.push_back({"rrm", space, pts});
  }
  {  // gene: unbounded working scale (log rates)
    const auto space = ParameterSpace::half_cauchy({"c1", "c2", "c3", "c4", "c5", "c6", "c7", "c8"});
    RngStream s(23, streams::test);
    Eigen::MatrixXd pts(3000, 8);
    for (int i = 0; i < 3000; ++i)
      for (int k = 0; k < 8; ++k) pts(i, k) = -1.0 + 0.8 * s.normal();
    cases.push_back({"gene", space, pts});
  }

  for (auto& cs : cases) {
    const auto t = fit_marginals(cs.particles, cs.space, 1000, 31);
    const int p = t.dim();
    RngStream s(24, streams::test);

    double worst_rt = 0.0;
    for (int i = 0; i < 1000; ++i) {
      Eigen::VectorXd z(p);
      for (int k = 0; k < p; ++k) z[k] = s.uniform(-4.0, 4.0);
      const auto theta = t.from_normal(z);
      const auto z2 = t.to_normal(theta);
      worst_rt = std::max(worst_rt, (z2 - z).cwiseAbs().maxCoeff());
    }
    c.check(worst_rt < 1e-6, cs.name + ": round-trip error " + fmt(worst_rt) + " < 1e-6");

    double worst_jac = 0.0;
    int checked = 0;
    for (int i = 0; i < 400 && checked < 120; ++i) {
      const Eigen::VectorXd theta =
          cs.particles.row(static_cast<Eigen::Index>(s.below(cs.particles.rows())));
      const auto z = t.to_normal(theta);
      const double lj = t.log_jacobian(theta, z);
      if (!std::isfinite(lj)) continue;
      double fd = 0.0;
      bool usable = true;
      for (int k = 0; k < p && usable; ++k) {
        const double h = 1e-6 * std::max(1.0, std::abs(theta[k]));
        Eigen::VectorXd tp = theta, tm = theta;
        tp[k] += h;
        tm[k] -= h;
        const double dz = (t.to_normal(tp)[k] - t.to_normal(tm)[k]) / (2.0 * h);
        if (!(dz > 0.0)) usable = false;
        else fd += std::log(dz);
      }
      if (!usable) continue;
      ++checked;
      worst_jac = std::max(worst_jac, std::abs(lj - fd) / std::max(1.0, std::abs(fd)));
    }
    c.check(checked >= 100 && worst_jac < 1e-4,
            cs.name + ": Jacobian vs finite differences (worst rel " + fmt(worst_jac) + " over " +
                std::to_string(checked) + " points)");

    RngStream draw(25, streams::test);
    bool ks_ok = true;
    double worst_p = 1.0;
    for (int k = 0; k < p; ++k) {
      std::vector<double> zs(10000);
      for (auto& v : zs) {
        Eigen::VectorXd theta(p);
        for (int j = 0; j < p; ++j) theta[j] = t.kde(j).sample(draw);
        v = t.to_normal(theta)[k];
      }
      const double pv = test_stats::ks_test(zs, test_stats::std_normal_cdf);
      worst_p = std::min(worst_p, pv);
      if (pv <= 0.01) ks_ok = false;
    }
    c.check(ks_ok, cs.name + ": pushforward KS p > 0.01 per dimension (worst " + fmt(worst_p) + ")");
  }
}

// ---------------------------------------------------------------- criterion 5
void criterion_5() {
  Criterion c(5, "sampler exactness on an analytic disc (fake wave)");

  const auto space = ParameterSpace::box({"x", "y"}, Eigen::VectorXd::Zero(2),
                                         Eigen::VectorXd::Ones(2));
  WaveChain chain;
  chain.push({1, std::make_shared<AnalyticScorer>([](const Eigen::VectorXd& t) {
                return std::sqrt((t[0] - 0.5) * (t[0] - 0.5) + (t[1] - 0.5) * (t[1] - 0.5));
              }),
              0.3});

  auto pop = ParticlePopulation::from_prior(space, 2000, 51);
  std::vector<bool> mask(2000);
  int survivors = 0;
  for (int i = 0; i < 2000; ++i) {
    mask[static_cast<std::size_t>(i)] = chain.accepts(pop.thetas.row(i));
    survivors += mask[static_cast<std::size_t>(i)];
  }
  RngStream rs(52, streams::test);
  pop = reweight_and_resample(pop, mask, rs);

  const auto prop = build_proposal(pop.thetas, space, 1000, 53);
  for (int sweep = 0; sweep < 20; ++sweep)
    mh_sweep(pop.thetas, pop.stream_keys, chain, prop, space,
             static_cast<std::uint64_t>(100 + sweep), 2, sweep == 0);

  bool inside = true;
  std::vector<double> u(2000);
  for (int i = 0; i < 2000; ++i) {
    const double r2 = (pop.thetas(i, 0) - 0.5) * (pop.thetas(i, 0) - 0.5) +
                      (pop.thetas(i, 1) - 0.5) * (pop.thetas(i, 1) - 0.5);
    if (r2 > 0.09) inside = false;
    u[static_cast<std::size_t>(i)] = r2 / 0.09;  // uniform(0,1) under the disc law
  }
  const double pv = test_stats::ks_test_uniform01(u);
  c.check(inside, "all samples inside the disc");
  c.check(pv > 0.01, "squared-radius KS vs uniform-disc law: p = " + fmt(pv) + " > 0.01");
}

// ---------------------------------------------------------------- criterion 6
void criterion_6() {
  Criterion c(6, "hydrology desk scale: T=365, M=2000, N=200, 10 waves");

  const auto forcing = rrm_synthetic_forcing(365, 7);
  RrmParams truth;
  truth.i_max = 3.0;
  truth.u_max = 200.0;
  truth.qs_max = 2.0;
  truth.alpha_e = 5.0;
  truth.alpha_f = 1.0;
  truth.k_f = 0.3;
  truth.k_s = 0.05;
  const auto obs = rrm_simulate(truth, forcing);
  RrmModel model(forcing, obs, 100);

  ImplausibilityMeasure measure;  // lcb on the distance output, r = 3
  SmcConfig cfg;
  cfg.particles = 2000;
  cfg.training_size = 200;
  cfg.alpha = 0.5;
  cfg.max_waves = 10;
  cfg.kde_subset = 1000;
  cfg.threads = 2;

  const auto run = run_history_match(model, model.space(), measure, cfg, 6001);
  c.check(run.chain.size() == 10, "kde-kernel run completed 10 waves (" + run.stop_reason + ")");

  bool nonincreasing = true;
  for (std::size_t w = 2; w < run.summaries.size(); ++w)
    if (run.summaries[w].wave >= 3 &&
        run.summaries[w].cutoff > run.summaries[w - 1].cutoff + 1e-9)
      nonincreasing = false;
  c.check(nonincreasing, "cutoff sequence nonincreasing from wave 2");

  double worst_acc = 1.0;
  for (std::size_t w = 1; w < run.summaries.size(); ++w)
    worst_acc = std::min(worst_acc, run.summaries[w].p_acc_all);
  c.check(worst_acc > 0.02, "MCMC acceptance > 0.02 every wave (worst " + fmt(worst_acc) + ")");

  // mass balance on every persisted training simulation
  double worst_resid = 0.0;
  long long resimulated = 0;
  for (const auto& rec : run.chain.waves()) {
    const auto* scorer = dynamic_cast<const EmulatorScorer*>(rec.scorer.get());
    if (!scorer) continue;
    const auto& inputs = scorer->emulator().training().raw_inputs();
    for (Eigen::Index i = 0; i < inputs.rows(); ++i) {
      RrmDiagnostics diag;
      model.simulate_with_diagnostics(inputs.row(i), &diag);
      worst_resid = std::max(worst_resid, std::abs(diag.mass_residual));
      ++resimulated;
    }
  }
  c.check(worst_resid < 1e-6, "mass balance closes on " + std::to_string(resimulated) +
                                   " training simulations (worst residual " + fmt(worst_resid) +
                                   " mm)");

  // logistic-transform kernel on the same frozen sequence: lower acceptance by wave 10
  SmcConfig lcfg = cfg;
  lcfg.transform = TransformKind::logistic;
  const auto frozen_logistic = run_frozen_chain(run.chain, model.space(), lcfg, 6002);
  const bool completed = frozen_logistic.summaries.size() == 10;
  double kde_last = run.summaries.back().p_acc_all;
  double logi_last = completed ? frozen_logistic.summaries.back().p_acc_all : 0.0;
  c.check(logi_last < kde_last,
          "logistic kernel acceptance at wave 10 (" + fmt(logi_last) +
              ") below kde kernel (" + fmt(kde_last) + ")");
  c.check(c.elapsed_s() < 30 * 60, "runtime under 30 minutes");

  g_notes.push_back("criterion 6: kde wave-10 acceptance " + fmt(kde_last) + ", logistic " +
                    fmt(logi_last) + ", sims " + std::to_string(run.simulation_count));
}

// ---------------------------------------------------------------- criterion 7
void criterion_7() {
  Criterion c(7, "gene network desk scale: T_obs=20, J=200, M=1000, N=100, 10 waves");

  GeneNetworkParams truth;
  truth.rates = {0.1, 0.7, 0.35, 0.2, 0.1, 0.9, 0.3, 0.1};
  truth.k = 10;
  const auto data = gene_generate_data(truth, GeneState{}, 20, 0.5, 77);

  GeneModel model(data, 0.5, 0.6, 200);
  ImplausibilityMeasure measure;  // lcb on the double-log output
  SmcConfig cfg;
  cfg.particles = 1000;
  cfg.training_size = 100;
  cfg.alpha = 0.5;
  cfg.max_waves = 10;
  cfg.kde_subset = 1000;
  cfg.threads = 2;

  const auto run = run_history_match(model, model.space(), measure, cfg, 7001);
  c.check(run.chain.size() == 10, "run completed 10 waves (" + run.stop_reason + ")");

  c.check(model.sentinel().has_value() && model.sentinel_assignments() > 0,
          "sentinel fired for prior-tail draws (" + std::to_string(model.sentinel_assignments()) +
              " assignments)");

  // never a sentinel at the true parameter
  Eigen::VectorXd log_truth(8);
  for (int i = 0; i < 8; ++i) log_truth[i] = std::log(truth.rates[static_cast<std::size_t>(i)]);
  bool truth_ok = true;
  for (int rep = 0; rep < 20; ++rep)
    if (!model.loglik(log_truth, 9000 + static_cast<std::uint64_t>(rep), 0).has_value())
      truth_ok = false;
  c.check(truth_ok, "PF at the true parameter never terminates early (20 streams)");

  bool median_ok = true;
  for (std::size_t w = 1; w < run.summaries.size(); ++w)
    if (run.summaries[w].training_quantiles[2] >
        run.summaries[w - 1].training_quantiles[2] + 1e-9)
      median_ok = false;
  c.check(median_ok, "median double-log output nonincreasing across waves");

  const long long expected_sims = 100LL * (run.chain.size() + 1);
  c.check(run.simulation_count == expected_sims,
          "simulation counter " + std::to_string(run.simulation_count) + " equals N*(waves+1) = " +
              std::to_string(expected_sims));
  c.check(c.elapsed_s() < 45 * 60, "runtime under 45 minutes");

  g_notes.push_back("criterion 7: sentinel " + fmt(model.sentinel().value_or(0.0)) +
                    ", assignments " + std::to_string(model.sentinel_assignments()));
}

// ---------------------------------------------------------------- criterion 8
void criterion_8() {
  Criterion c(8, "particle filter vs exact Kalman log-likelihood");

  const double a = 0.8, q = 0.5, r = 0.5, m0 = 0.0, p0 = 1.0;
  RngStream sim(81, streams::test);
  double x = sim.normal(m0, p0);
  std::vector<double> y(25);
  for (auto& v : y) {
    x = a * x + sim.normal(0.0, q);
    v = x + sim.normal(0.0, r);
  }

  double mean = m0, var = p0 * p0, exact = 0.0;
  for (const double obs : y) {
    const double pm = a * mean, pv = a * a * var + q * q, sv = pv + r * r;
    const double resid = obs - pm;
    exact += -0.5 * (std::log(2.0 * kPi * sv) + resid * resid / sv);
    const double gain = pv / sv;
    mean = pm + gain * resid;
    var = (1.0 - gain) * pv;
  }

  std::vector<double> estimates(100);
  for (int rep = 0; rep < 100; ++rep) {
    auto propagate = [&](double& state, int step, RngStream& stream) {
      if (step == 0) state = stream.normal(m0, p0);
      state = a * state + stream.normal(0.0, q);
      return true;
    };
    auto log_obs = [&](double state, int step) {
      const double resid = y[static_cast<std::size_t>(step)] - state;
      return -0.5 * (std::log(2.0 * kPi * r * r) + resid * resid / (r * r));
    };
    const auto ll =
        bootstrap_pf_loglik(m0, 25, 1000, propagate, log_obs, 8200 + static_cast<std::uint64_t>(rep), 0);
    estimates[static_cast<std::size_t>(rep)] = ll.value();
  }
  const double est_mean = test_stats::mean_of(estimates);
  const double se = test_stats::sd_of(estimates) / 10.0;
  c.check(std::abs(est_mean - exact) < 3.0 * se,
          "PF mean " + fmt(est_mean) + " within 3 MC s.e. (" + fmt(3.0 * se) + ") of Kalman " +
              fmt(exact));
}

// ---------------------------------------------------------------- criterion 9
void criterion_9() {
  Criterion c(9, "engine algebra: ESS identity, repeat rule, resampling closure");

  // indicator-weight ESS equals the survivor count
  bool ess_ok = true;
  for (const int k : {1, 3, 17, 999}) {
    double sum_sq = 0.0;
    for (int i = 0; i < k; ++i) sum_sq += (1.0 / k) * (1.0 / k);
    if (std::abs(1.0 / sum_sq - k) > 1e-9) ess_ok = false;
  }
  c.check(ess_ok, "reweight-by-indicator ESS equals survivor count exactly");

  c.check(adaptive_repeats(0.5, 0.01) == 7, "adaptive_repeats(c=0.01, p_acc=0.5) = 7");

  const auto space = ParameterSpace::box({"x"}, Eigen::VectorXd::Zero(1), Eigen::VectorXd::Ones(1));
  bool closure = true;
  for (int trial = 0; trial < 200; ++trial) {
    auto pop = ParticlePopulation::from_prior(space, 40, 9000 + static_cast<std::uint64_t>(trial));
    RngStream mask_stream(9500 + static_cast<std::uint64_t>(trial), streams::test);
    std::vector<bool> mask(40);
    std::set<double> survivors;
    int count = 0;
    for (int i = 0; i < 40; ++i) {
      mask[static_cast<std::size_t>(i)] = mask_stream.uniform() < 0.4;
      if (mask[static_cast<std::size_t>(i)]) {
        survivors.insert(pop.thetas(i, 0));
        ++count;
      }
    }
    if (count == 0) continue;
    RngStream rs(9700 + static_cast<std::uint64_t>(trial), streams::test);
    const auto out = reweight_and_resample(pop, mask, rs);
    for (int i = 0; i < 40; ++i)
      if (!survivors.count(out.thetas(i, 0))) closure = false;
  }
  c.check(closure, "resampled populations contain only survivors (200 trials)");
  c.check(c.elapsed_s() < 60, "runtime under 1 minute");
}

// --------------------------------------------------------------- criterion 10
void criterion_10() {
  Criterion c(10, "reproducibility: byte-identical summaries for any worker-pool size");

  const fs::path base = fs::temp_directory_path() / "hmsmc_acceptance_repro";
  fs::remove_all(base);

  auto run_once = [&](const fs::path& dir, unsigned threads) {
    ToyModel model;
    SmcConfig cfg;
    cfg.particles = 500;
    cfg.training_size = 40;
    cfg.max_waves = 3;
    cfg.kde_subset = 500;
    cfg.threads = threads;
    cfg.gp.restarts = 2;
    io::RunWriter writer(dir, model.space(), {"x1", "x2"});
    const auto result = run_history_match(model, model.space(), {}, cfg, 424242, &writer);
    writer.finalize(result, "{}");
  };
  run_once(base / "t1", 1);
  run_once(base / "t2", 2);
  run_once(base / "t1b", 1);

  auto slurp = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };

  bool identical = true;
  std::vector<std::string> files = {"run.json", "chain.json"};
  for (int w = 0; w <= 3; ++w) {
    char sub[32];
    std::snprintf(sub, sizeof(sub), "wave_%03d/summary.json", w);
    files.push_back(sub);
    std::snprintf(sub, sizeof(sub), "wave_%03d/particles.csv", w);
    files.push_back(sub);
  }
  for (const auto& f : files) {
    const auto a = slurp(base / "t1" / f);
    const auto b = slurp(base / "t2" / f);
    const auto d = slurp(base / "t1b" / f);
    if (a.empty() || a != b || a != d) {
      identical = false;
      c.check(false, "mismatch or missing: " + f);
    }
  }
  if (identical) c.check(true, "run.json, chain.json, summaries and particles byte-identical across pool sizes 1/2 and reruns");
  fs::remove_all(base);
}

}  // namespace

int main() {
  std::printf("hmsmc acceptance suite\n");
  const auto start = std::chrono::steady_clock::now();

  criterion_9();
  criterion_3();
  criterion_8();
  criterion_4();
  criterion_5();
  criterion_10();

  const auto bf = criterion_2();
  criterion_1(bf);

  criterion_6();
  criterion_7();

  const double total = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::printf("\n%s: %d criterion failure(s), total %.1fs\n", g_failures ? "FAIL" : "PASS",
              g_failures, total);
  for (const auto& n : g_notes) std::printf("note: %s\n", n.c_str());
  return g_failures ? 1 : 0;
}
