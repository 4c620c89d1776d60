#include <CLI11.hpp>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>

#include "hmsmc/config.hpp"
#include "hmsmc/io.hpp"
#include "hmsmc/models/gene.hpp"
#include "hmsmc/models/rrm.hpp"
#include "hmsmc/oracles.hpp"
#include "hmsmc/smc.hpp"

namespace fs = std::filesystem;
using namespace hmsmc;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitConfig = 2;

void apply_env_overrides(RunConfig& cfg) {
  if (const char* dir = std::getenv("HMSMC_OUTPUT_DIR")) cfg.output_dir = dir;
  if (const char* threads = std::getenv("HMSMC_THREADS")) {
    cfg.threads = static_cast<unsigned>(std::strtoul(threads, nullptr, 10));
    cfg.smc.threads = cfg.threads;
  }
}

std::vector<std::string> space_names(const ParameterSpace& space) {
  std::vector<std::string> names;
  for (int k = 0; k < space.dim(); ++k) names.push_back(space.dimension(k).name);
  return names;
}

void print_wave_line(const WaveSummary& s) {
  std::printf("wave %3d  cutoff % .6g  ess %8.1f  p_acc %.3f  R %3d  sims %lld\n", s.wave,
              s.cutoff, s.ess_after_reweight, s.p_acc, s.repeats,
              static_cast<long long>(s.simulations_cum));
}

int cmd_run(const std::string& config_path, std::uint64_t* seed_override,
            std::string* output_override, int* threads_override, int* max_waves_override) {
  RunConfig cfg = RunConfig::from_file(config_path);
  apply_env_overrides(cfg);
  if (seed_override) cfg.seed = *seed_override;
  if (output_override) cfg.output_dir = *output_override;
  if (threads_override) {
    cfg.threads = static_cast<unsigned>(*threads_override);
    cfg.smc.threads = cfg.threads;
  }
  if (max_waves_override) cfg.smc.max_waves = *max_waves_override;

  io::RunWriter writer(cfg.output_dir, cfg.space, space_names(cfg.space));
  const auto result =
      run_history_match(*cfg.model, cfg.space, cfg.measure, cfg.smc, cfg.seed, &writer);
  writer.finalize(result, cfg.echo);

  for (const auto& s : result.summaries) print_wave_line(s);
  std::printf("%s; %lld model simulations; artifacts in %s\n", result.stop_reason.c_str(),
              result.simulation_count, cfg.output_dir.c_str());
  return kExitOk;
}

int cmd_oracle(const std::string& config_path, int n_qmc, int waves, std::uint64_t* seed_override,
               std::string* output_override) {
  RunConfig cfg = RunConfig::from_file(config_path);
  apply_env_overrides(cfg);
  if (seed_override) cfg.seed = *seed_override;
  fs::path out_dir = output_override ? fs::path(*output_override)
                                     : fs::path(cfg.output_dir) / "oracle";
  if (waves <= 0) waves = cfg.smc.max_waves;

  const auto result = brute_force_history_match(*cfg.model, cfg.space, n_qmc,
                                                cfg.smc.training_size, cfg.smc.alpha, waves,
                                                cfg.measure, cfg.seed, cfg.threads, cfg.smc.gp);
  fs::create_directories(out_dir);

  nlohmann::json j;
  j["n_qmc"] = n_qmc;
  j["stop_reason"] = result.stop_reason;
  j["simulation_count"] = result.simulation_count;
  j["cutoffs"] = result.cutoffs;
  std::vector<long long> counts;
  for (const auto& s : result.survivors_per_wave) counts.push_back(s.rows());
  j["survivor_counts"] = counts;
  std::ofstream(out_dir / "summary.json") << j.dump(2) << "\n";

  const auto names = space_names(cfg.space);
  for (std::size_t w = 0; w < result.survivors_per_wave.size(); ++w) {
    char sub[32];
    std::snprintf(sub, sizeof(sub), "wave_%03d", static_cast<int>(w + 1));
    fs::create_directories(out_dir / sub);
    const auto& surv = result.survivors_per_wave[w];
    const auto rows = std::min<Eigen::Index>(surv.rows(), 5000);
    io::write_csv(out_dir / sub / "survivors_sample.csv", names, surv.topRows(rows),
                  {"survivors " + std::to_string(surv.rows()) + " of " + std::to_string(n_qmc)});
    const auto& rec = result.chain.wave(static_cast<int>(w));
    const auto* scorer = dynamic_cast<const EmulatorScorer*>(rec.scorer.get());
    if (scorer) io::save_emulator(out_dir / sub / "emulator.bin", scorer->emulator());
  }

  // chain.json compatible with load_chain: wave w's emulator lives in wave_{w}
  nlohmann::json chain;
  chain["version"] = 1;
  chain["space"] = nlohmann::json::parse(io::space_to_json(cfg.space));
  chain["measure"] = nlohmann::json::parse(io::measure_to_json(cfg.measure));
  nlohmann::json jw = nlohmann::json::array();
  for (const auto& rec : result.chain.waves()) {
    char sub[40];
    std::snprintf(sub, sizeof(sub), "wave_%03d/emulator.bin", rec.index);
    jw.push_back({{"wave", rec.index}, {"cutoff", rec.cutoff}, {"emulator", sub}});
  }
  chain["waves"] = jw;
  std::ofstream(out_dir / "chain.json") << chain.dump(2) << "\n";

  for (std::size_t w = 0; w < counts.size(); ++w)
    std::printf("wave %3zu  cutoff % .6g  survivors %lld\n", w + 1, result.cutoffs[w], counts[w]);
  std::printf("%s; %lld model simulations; artifacts in %s\n", result.stop_reason.c_str(),
              result.simulation_count, out_dir.string().c_str());
  return kExitOk;
}

int cmd_baseline(const std::string& which, const std::string& config_path,
                 const std::string& chain_dir, int n_target, std::uint64_t* seed_override) {
  RunConfig cfg = RunConfig::from_file(config_path);
  apply_env_overrides(cfg);
  if (seed_override) cfg.seed = *seed_override;
  const fs::path out_dir = fs::path(cfg.output_dir) / ("baseline_" + which);
  fs::create_directories(out_dir);
  const auto names = space_names(cfg.space);
  if (n_target <= 0) n_target = cfg.smc.particles;

  nlohmann::json j;
  j["baseline"] = which;

  if (which == "rejection" || which == "adhoc-logit" || which == "adhoc-kde") {
    if (chain_dir.empty())
      throw ConfigError("baseline '" + which + "' requires --chain-dir (a completed run/oracle)");
    const auto loaded = io::load_chain(chain_dir);
    if (which == "rejection") {
      const auto res = rejection_sampler(loaded.chain, loaded.space, n_target, cfg.seed);
      io::write_csv(out_dir / "samples.csv", names, res.samples);
      j["acceptance_rate"] = res.acceptance_rate;
      j["proposals"] = res.proposals;
      j["aborted"] = res.aborted;
    } else {
      const auto kind = which == "adhoc-logit" ? AdhocTransform::logit : AdhocTransform::kde_marginal;
      const auto res = adhoc_sampler_sequence(loaded.chain, loaded.space, kind, n_target, cfg.seed);
      io::write_csv(out_dir / "samples.csv", names, res.samples);
      j["acceptance_rate"] = res.acceptance_rate;
      j["aborted"] = res.aborted;
    }
  } else if (which == "smc-opt") {
    const auto res = smc_optimisation(*cfg.model, cfg.space, cfg.smc, cfg.seed);
    io::write_csv(out_dir / "samples.csv", names, res.population.thetas);
    j["cutoffs"] = res.cutoffs;
    j["simulation_count"] = res.simulation_count;
    for (const auto& s : res.summaries) print_wave_line(s);
  } else if (which == "bayes-smc") {
    auto* gene = dynamic_cast<GeneModel*>(cfg.model.get());
    if (!gene) throw ConfigError("baseline 'bayes-smc' requires a gene model config");
    class GeneLik final : public LogLikelihood {
     public:
      explicit GeneLik(const GeneModel& model) : model_(model) {}
      double operator()(const Eigen::VectorXd& theta, std::uint64_t seed,
                        std::uint64_t tag) const override {
        const auto ll = model_.loglik(theta, seed, tag);
        return ll ? *ll : -std::numeric_limits<double>::infinity();
      }

     private:
      const GeneModel& model_;
    };
    GeneLik lik(*gene);
    const auto res = bayes_smc_anneal(lik, cfg.space, cfg.smc.particles, 0.5, cfg.seed,
                                      cfg.smc.move_target_c, cfg.smc.repeat_max, cfg.threads);
    io::write_csv(out_dir / "samples.csv", names, res.particles);
    j["temperatures"] = res.temperatures;
    j["acceptance_rates"] = res.acceptance_rates;
    j["likelihood_evaluations"] = res.likelihood_evaluations;
  } else {
    throw ConfigError("unknown baseline '" + which + "'");
  }

  std::ofstream(out_dir / "summary.json") << j.dump(2) << "\n";
  std::printf("baseline %s written to %s\n", which.c_str(), out_dir.string().c_str());
  return kExitOk;
}

int cmd_report(const std::vector<std::string>& run_dirs, const std::string& out) {
  const fs::path out_dir = out.empty() ? fs::path("report") : fs::path(out);
  fs::create_directories(out_dir);

  std::vector<Eigen::MatrixXd> trace_rows;
  std::vector<Eigen::MatrixXd> quantile_rows;
  std::vector<std::string> id_map;

  for (std::size_t run_id = 0; run_id < run_dirs.size(); ++run_id) {
    const fs::path dir(run_dirs[run_id]);
    if (!fs::exists(dir / "run.json")) {
      std::fprintf(stderr, "warning: %s is not a completed run directory; skipping\n",
                   dir.string().c_str());
      continue;
    }
    id_map.push_back("run_id " + std::to_string(run_id) + " = " + dir.string());

    for (int w = 0;; ++w) {
      char sub[16];
      std::snprintf(sub, sizeof(sub), "wave_%03d", w);
      const fs::path wave_dir = dir / sub;
      if (!fs::exists(wave_dir / "summary.json")) break;
      std::ifstream in(wave_dir / "summary.json");
      nlohmann::json s = nlohmann::json::parse(in);

      Eigen::MatrixXd trace(1, 9);
      trace << static_cast<double>(run_id), s["wave"].get<double>(), s["cutoff"].get<double>(),
          s["ess_after_reweight"].get<double>(), s["survivor_fraction"].get<double>(),
          s["p_acc"].get<double>(), s["p_acc_all"].get<double>(), s["repeats"].get<double>(),
          s["simulations_cum"].get<double>();
      trace_rows.push_back(trace);

      const auto q = s["training_quantiles"].get<std::vector<double>>();
      Eigen::MatrixXd quant(1, 7);
      quant << static_cast<double>(run_id), s["wave"].get<double>(), q[0], q[1], q[2], q[3], q[4];
      quantile_rows.push_back(quant);

      if (fs::exists(wave_dir / "particles.csv")) {
        const auto particles = io::read_csv(wave_dir / "particles.csv");
        Eigen::MatrixXd with_id(particles.values.rows(), particles.values.cols() + 1);
        with_id.col(0).setConstant(static_cast<double>(run_id));
        with_id.rightCols(particles.values.cols()) = particles.values;
        std::vector<std::string> cols = {"run_id"};
        cols.insert(cols.end(), particles.columns.begin(), particles.columns.end());
        char name[40];
        std::snprintf(name, sizeof(name), "bivariate_wave_%d.csv", w);
        const fs::path target = out_dir / name;
        if (fs::exists(target) && run_id > 0) {
          const auto existing = io::read_csv(target);
          Eigen::MatrixXd merged(existing.values.rows() + with_id.rows(), with_id.cols());
          merged.topRows(existing.values.rows()) = existing.values;
          merged.bottomRows(with_id.rows()) = with_id;
          io::write_csv(target, cols, merged, id_map);
        } else {
          io::write_csv(target, cols, with_id, id_map);
        }
      }
    }
  }

  if (trace_rows.empty()) {
    std::fprintf(stderr, "error: no completed run directories\n");
    return kExitRuntime;
  }

  Eigen::MatrixXd trace(static_cast<Eigen::Index>(trace_rows.size()), 9);
  for (std::size_t i = 0; i < trace_rows.size(); ++i)
    trace.row(static_cast<Eigen::Index>(i)) = trace_rows[i];
  io::write_csv(out_dir / "acceptance_trace.csv",
                {"run_id", "wave", "cutoff", "ess", "survivor_fraction", "p_acc", "p_acc_all",
                 "repeats", "simulations_cum"},
                trace, id_map);

  Eigen::MatrixXd quant(static_cast<Eigen::Index>(quantile_rows.size()), 7);
  for (std::size_t i = 0; i < quantile_rows.size(); ++i)
    quant.row(static_cast<Eigen::Index>(i)) = quantile_rows[i];
  io::write_csv(out_dir / "output_quantiles.csv",
                {"run_id", "wave", "min", "q1", "median", "q3", "max"}, quant, id_map);

  std::printf("report written to %s\n", out_dir.string().c_str());
  return kExitOk;
}

int cmd_gen_data(const std::string& which, const std::string& out, int days, int n_obs,
                 std::uint64_t seed) {
  const fs::path out_dir(out);
  fs::create_directories(out_dir);
  if (which == "hydrology") {
    const auto forcing = rrm_synthetic_forcing(days, seed);
    RrmParams truth;
    truth.i_max = 3.0;
    truth.u_max = 200.0;
    truth.qs_max = 2.0;
    truth.alpha_e = 5.0;
    truth.alpha_f = 1.0;
    truth.k_f = 0.3;
    truth.k_s = 0.05;
    const auto obs = rrm_simulate(truth, forcing);

    Eigen::MatrixXd ftab(days, 3), otab(days, 2);
    for (int t = 0; t < days; ++t) {
      ftab(t, 0) = t + 1;
      ftab(t, 1) = forcing.precipitation[t];
      ftab(t, 2) = forcing.potential_et[t];
      otab(t, 0) = t + 1;
      otab(t, 1) = obs[t];
    }
    const std::string hdr = "seed=" + std::to_string(seed) +
                            " truth=(3,200,2,5,1,0.3,0.05) burn_in=100";
    io::write_csv(out_dir / "forcing.csv", {"day", "precip_mm", "pet_mm"}, ftab, {hdr});
    io::write_csv(out_dir / "streamflow_obs.csv", {"day", "flow_mm"}, otab, {hdr});
    std::printf("hydrology data (%d days) written to %s\n", days, out_dir.string().c_str());
  } else if (which == "gene") {
    GeneNetworkParams truth;
    truth.rates = {0.1, 0.7, 0.35, 0.2, 0.1, 0.9, 0.3, 0.1};
    truth.k = 10;
    const auto data = gene_generate_data(truth, GeneState{}, n_obs, 0.5, seed);
    Eigen::MatrixXd tab(data.rows(), 5);
    for (Eigen::Index i = 0; i < data.rows(); ++i) {
      tab(i, 0) = 0.5 * static_cast<double>(i + 1);
      tab.row(i).rightCols(4) = data.row(i);
    }
    io::write_csv(out_dir / "gene_data.csv", {"t", "DNA", "RNA", "P", "P2"}, tab,
                  {"seed=" + std::to_string(seed) +
                   " rates=(0.1,0.7,0.35,0.2,0.1,0.9,0.3,0.1) k=10 init=(5,8,8,8)"});
    std::printf("gene data (%d observations) written to %s\n", n_obs, out_dir.string().c_str());
  } else {
    throw ConfigError("gen-data target must be 'hydrology' or 'gene'");
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"History matching via sequential Monte Carlo"};
  app.require_subcommand(1);

  std::string config_path, output_override, chain_dir, which, report_out = "report";
  std::vector<std::string> run_dirs;
  std::uint64_t seed_override = 0;
  int threads_override = 0, max_waves_override = -1;
  int n_qmc = 1 << 20, waves = 0, n_target = 0, days = 365, n_obs = 100;
  std::uint64_t gen_seed = 7;

  auto* run = app.add_subcommand("run", "Run SMC history matching from a config file");
  run->add_option("--config", config_path, "JSON run configuration")->required();
  auto* run_seed = run->add_option("--seed", seed_override, "Override the config seed");
  auto* run_out = run->add_option("--output", output_override, "Override the output directory");
  auto* run_threads = run->add_option("--threads", threads_override, "Worker pool size");
  auto* run_waves = run->add_option("--max-waves", max_waves_override, "Override smc.max_waves");

  auto* oracle = app.add_subcommand("oracle", "Brute-force QMC history matching oracle");
  oracle->add_option("--config", config_path, "JSON run configuration")->required();
  oracle->add_option("--n-qmc", n_qmc, "QMC point count (default 2^20)");
  oracle->add_option("--waves", waves, "Wave count (default smc.max_waves)");
  auto* oracle_seed = oracle->add_option("--seed", seed_override, "Override the config seed");
  auto* oracle_out = oracle->add_option("--output", output_override, "Oracle output directory");

  auto* baseline = app.add_subcommand("baseline", "Comparison samplers");
  baseline->add_option("which", which,
                       "one of: rejection, adhoc-logit, adhoc-kde, smc-opt, bayes-smc")
      ->required();
  baseline->add_option("--config", config_path, "JSON run configuration")->required();
  baseline->add_option("--chain-dir", chain_dir, "Run/oracle directory with chain.json");
  baseline->add_option("--samples", n_target, "Target sample count (default smc.particles)");
  auto* baseline_seed = baseline->add_option("--seed", seed_override, "Override the config seed");

  auto* report = app.add_subcommand("report", "Summarize run directories into plot-ready CSVs");
  report->add_option("dirs", run_dirs, "Completed run directories")->required();
  report->add_option("--output", report_out, "Report output directory");

  auto* gen = app.add_subcommand("gen-data", "Generate synthetic datasets");
  gen->add_option("which", which, "one of: hydrology, gene")->required();
  gen->add_option("--out", report_out, "Output directory")->required();
  gen->add_option("--days", days, "Hydrology: forcing length");
  gen->add_option("--n-obs", n_obs, "Gene: observation count");
  gen->add_option("--seed", gen_seed, "Data seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed())
      return cmd_run(config_path, run_seed->count() ? &seed_override : nullptr,
                     run_out->count() ? &output_override : nullptr,
                     run_threads->count() ? &threads_override : nullptr,
                     run_waves->count() ? &max_waves_override : nullptr);
    if (oracle->parsed())
      return cmd_oracle(config_path, n_qmc, waves, oracle_seed->count() ? &seed_override : nullptr,
                        oracle_out->count() ? &output_override : nullptr);
    if (baseline->parsed())
      return cmd_baseline(which, config_path, chain_dir, n_target,
                          baseline_seed->count() ? &seed_override : nullptr);
    if (report->parsed()) return cmd_report(run_dirs, report_out);
    if (gen->parsed()) return cmd_gen_data(which, report_out, days, n_obs, gen_seed);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitRuntime;
  }
  return kExitOk;
}
