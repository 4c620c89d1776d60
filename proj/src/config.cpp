#include "hmsmc/config.hpp"

#include <fstream>
#include <nlohmann/json.hpp>
#include <set>
#include <sstream>

#include "hmsmc/io.hpp"
#include "hmsmc/models/gene.hpp"
#include "hmsmc/models/rrm.hpp"
#include "hmsmc/models/toy.hpp"
#include "hmsmc/parallel.hpp"

namespace hmsmc {

using nlohmann::json;

namespace {

void reject_unknown_keys(const json& obj, const std::set<std::string>& allowed,
                         const std::string& where) {
  for (const auto& [key, _] : obj.items())
    if (!allowed.count(key))
      throw ConfigError("unknown key '" + where + "." + key + "'");
}

template <typename T>
T require(const json& obj, const std::string& key, const std::string& where) {
  if (!obj.contains(key)) throw ConfigError("missing required field '" + where + "." + key + "'");
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("field '" + where + "." + key + "' has the wrong type");
  }
}

template <typename T>
T optional_of(const json& obj, const std::string& key, const T& fallback,
              const std::string& where) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("field '" + where + "." + key + "' has the wrong type");
  }
}

std::unique_ptr<SimulatorModel> build_rrm(const json& jm, const std::filesystem::path& base_dir) {
  reject_unknown_keys(jm, {"type", "forcing_file", "obs_file", "burn_in", "synthetic_days",
                           "synthetic_seed"},
                      "model");
  const int burn_in = optional_of(jm, "burn_in", 100, "model");

  RrmForcing forcing;
  std::vector<double> observed;
  if (jm.contains("forcing_file")) {
    const auto forcing_path = base_dir / require<std::string>(jm, "forcing_file", "model");
    const auto obs_path = base_dir / require<std::string>(jm, "obs_file", "model");
    const auto ftab = io::read_csv(forcing_path);
    if (ftab.columns.size() != 3)
      throw ConfigError("model.forcing_file: expected 3 columns (date, precip, pet)");
    const auto otab = io::read_csv(obs_path);
    const int days = static_cast<int>(ftab.values.rows());
    forcing.precipitation.resize(days);
    forcing.potential_et.resize(days);
    for (int t = 0; t < days; ++t) {
      forcing.precipitation[t] = ftab.values(t, 1);
      forcing.potential_et[t] = ftab.values(t, 2);
    }
    observed.resize(static_cast<std::size_t>(otab.values.rows()));
    for (Eigen::Index t = 0; t < otab.values.rows(); ++t)
      observed[static_cast<std::size_t>(t)] = otab.values(t, otab.values.cols() - 1);
  } else {
    const int days = optional_of(jm, "synthetic_days", 365, "model");
    const auto seed = optional_of<std::uint64_t>(jm, "synthetic_seed", 7, "model");
    forcing = rrm_synthetic_forcing(days, seed);
    RrmParams truth;  // documented mid-range truth for synthetic runs
    truth.i_max = 3.0;
    truth.u_max = 200.0;
    truth.qs_max = 2.0;
    truth.alpha_e = 5.0;
    truth.alpha_f = 1.0;
    truth.k_f = 0.3;
    truth.k_s = 0.05;
    observed = rrm_simulate(truth, forcing);
  }
  return std::make_unique<RrmModel>(std::move(forcing), std::move(observed), burn_in);
}

std::unique_ptr<SimulatorModel> build_gene(const json& jm, const std::filesystem::path& base_dir) {
  reject_unknown_keys(jm, {"type", "data_file", "t_obs", "pf_particles", "sigma", "dt",
                           "synthetic_seed", "k"},
                      "model");
  const double sigma = optional_of(jm, "sigma", 0.6, "model");
  const double dt = optional_of(jm, "dt", 0.5, "model");
  const int pf_particles = optional_of(jm, "pf_particles", 200, "model");
  const int t_obs = optional_of(jm, "t_obs", 20, "model");
  const int k = optional_of(jm, "k", 10, "model");

  Eigen::MatrixXd data;
  if (jm.contains("data_file")) {
    const auto tab = io::read_csv(base_dir / require<std::string>(jm, "data_file", "model"));
    if (tab.values.cols() < 5)
      throw ConfigError("model.data_file: expected columns t, DNA, RNA, P, P2");
    data = tab.values.rightCols(4);
  } else {
    const auto seed = optional_of<std::uint64_t>(jm, "synthetic_seed", 11, "model");
    GeneNetworkParams truth;
    truth.rates = {0.1, 0.7, 0.35, 0.2, 0.1, 0.9, 0.3, 0.1};
    truth.k = k;
    data = gene_generate_data(truth, GeneState{}, 100, dt, seed);
  }
  if (t_obs < static_cast<int>(data.rows())) data = data.topRows(t_obs).eval();
  return std::make_unique<GeneModel>(std::move(data), dt, sigma, pf_particles, GeneState{}, k);
}

ImplausibilityMeasure parse_measure(const json& j) {
  ImplausibilityMeasure m;
  if (!j.contains("measure")) return m;  // lcb, r = 3
  const json& jm = j.at("measure");
  const auto kind = require<std::string>(jm, "kind", "measure");
  if (kind == "lcb") {
    reject_unknown_keys(jm, {"kind", "r", "variance_form"}, "measure");
    m.kind = ImplausibilityMeasure::Kind::lcb;
    m.r = optional_of(jm, "r", 3.0, "measure");
    m.use_variance_form = optional_of(jm, "variance_form", false, "measure");
  } else if (kind == "ratio") {
    reject_unknown_keys(jm, {"kind", "y_obs", "s_m", "s_d"}, "measure");
    m.kind = ImplausibilityMeasure::Kind::ratio;
    m.y_obs = require<double>(jm, "y_obs", "measure");
    m.model_sd = optional_of(jm, "s_m", 0.0, "measure");
    m.discrepancy_sd = optional_of(jm, "s_d", 0.0, "measure");
  } else {
    throw ConfigError("measure.kind must be 'lcb' or 'ratio'");
  }
  return m;
}

SmcConfig parse_smc(const json& j) {
  SmcConfig cfg;
  if (!j.contains("smc")) throw ConfigError("missing required field 'smc'");
  const json& js = j.at("smc");
  reject_unknown_keys(js,
                      {"particles", "training_size", "alpha", "move_target_c", "max_waves",
                       "min_acceptance", "min_cutoff_improvement", "kde_subset", "rw_scale",
                       "transform", "design", "gp_restarts"},
                      "smc");
  cfg.particles = require<int>(js, "particles", "smc");
  cfg.training_size = require<int>(js, "training_size", "smc");
  cfg.alpha = optional_of(js, "alpha", 0.5, "smc");
  cfg.move_target_c = optional_of(js, "move_target_c", 0.01, "smc");
  cfg.max_waves = optional_of(js, "max_waves", 10, "smc");
  cfg.min_acceptance = optional_of(js, "min_acceptance", 0.0, "smc");
  cfg.min_cutoff_improvement = optional_of(js, "min_cutoff_improvement", -1.0, "smc");
  cfg.kde_subset = optional_of(js, "kde_subset", 1000, "smc");
  cfg.rw_scale = optional_of(js, "rw_scale", 1.0, "smc");
  cfg.gp.restarts = optional_of(js, "gp_restarts", 5, "smc");
  const auto transform = optional_of<std::string>(js, "transform", "kde", "smc");
  if (transform == "kde")
    cfg.transform = TransformKind::kde_marginal;
  else if (transform == "logistic")
    cfg.transform = TransformKind::logistic;
  else
    throw ConfigError("smc.transform must be 'kde' or 'logistic'");
  const auto design = optional_of<std::string>(js, "design", "sobol", "smc");
  if (design == "sobol")
    cfg.design_scheme = DesignSpec::Scheme::sobol_qmc;
  else if (design == "pseudo")
    cfg.design_scheme = DesignSpec::Scheme::pseudo_random;
  else
    throw ConfigError("smc.design must be 'sobol' or 'pseudo'");

  if (cfg.particles < 2) throw ConfigError("smc.particles must be >= 2");
  if (cfg.training_size < 2) throw ConfigError("smc.training_size must be >= 2");
  if (cfg.training_size > cfg.particles)
    throw ConfigError("smc.training_size must not exceed smc.particles");
  if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0)) throw ConfigError("smc.alpha must be in (0,1)");
  if (!(cfg.move_target_c > 0.0 && cfg.move_target_c < 1.0))
    throw ConfigError("smc.move_target_c must be in (0,1)");
  if (cfg.max_waves < 0) throw ConfigError("smc.max_waves must be >= 0");
  return cfg;
}

}  // namespace

RunConfig RunConfig::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return from_json_text(ss.str(), path.parent_path());
}

RunConfig RunConfig::from_json_text(const std::string& text,
                                    const std::filesystem::path& base_dir) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  reject_unknown_keys(j, {"seed", "output_dir", "threads", "model", "measure", "smc"}, "config");

  RunConfig cfg;
  cfg.seed = optional_of<std::uint64_t>(j, "seed", 1, "config");
  cfg.output_dir = optional_of<std::string>(j, "output_dir", "run_out", "config");
  cfg.threads = optional_of<unsigned>(j, "threads", default_threads(), "config");

  if (!j.contains("model")) throw ConfigError("missing required field 'model'");
  const json& jm = j.at("model");
  const auto type = require<std::string>(jm, "type", "model");
  if (type == "toy") {
    reject_unknown_keys(jm, {"type"}, "model");
    cfg.model = std::make_unique<ToyModel>();
  } else if (type == "rrm") {
    cfg.model = build_rrm(jm, base_dir);
  } else if (type == "gene") {
    cfg.model = build_gene(jm, base_dir);
  } else {
    throw ConfigError("model.type must be one of 'toy', 'rrm', 'gene'");
  }
  cfg.space = cfg.model->space();
  cfg.measure = parse_measure(j);
  cfg.smc = parse_smc(j);
  cfg.smc.threads = cfg.threads;
  cfg.echo = j.dump(2);
  return cfg;
}

}  // namespace hmsmc
