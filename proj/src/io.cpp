#include "hmsmc/io.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

namespace hmsmc::io {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  out << text;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open for reading: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void put_u32(std::string& buf, std::uint32_t v) { buf.append(reinterpret_cast<const char*>(&v), 4); }
void put_f64(std::string& buf, double v) { buf.append(reinterpret_cast<const char*>(&v), 8); }

struct Cursor {
  const char* p;
  const char* end;
  std::uint32_t u32() {
    if (end - p < 4) throw std::runtime_error("emulator artifact truncated");
    std::uint32_t v;
    std::memcpy(&v, p, 4);
    p += 4;
    return v;
  }
  double f64() {
    if (end - p < 8) throw std::runtime_error("emulator artifact truncated");
    double v;
    std::memcpy(&v, p, 8);
    p += 8;
    return v;
  }
};

constexpr std::uint32_t kEmulatorMagic = 0x484d4750u;  // "HMGP"
constexpr std::uint32_t kEmulatorVersion = 1;

}  // namespace

void write_csv(const fs::path& path, const std::vector<std::string>& columns,
               const Eigen::MatrixXd& values, const std::vector<std::string>& comments) {
  if (values.cols() != static_cast<Eigen::Index>(columns.size()))
    throw std::invalid_argument("write_csv: column count mismatch");
  std::ostringstream out;
  for (const auto& c : comments) out << "# " << c << "\n";
  for (std::size_t k = 0; k < columns.size(); ++k)
    out << columns[k] << (k + 1 < columns.size() ? "," : "\n");
  for (Eigen::Index i = 0; i < values.rows(); ++i)
    for (Eigen::Index k = 0; k < values.cols(); ++k)
      out << format_double(values(i, k)) << (k + 1 < values.cols() ? "," : "\n");
  write_text(path, out.str());
}

CsvTable read_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open csv: " + path.string());
  CsvTable table;
  std::string line;
  std::vector<std::vector<double>> rows;
  bool have_header = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::size_t start = line.find_first_not_of("# ");
      table.comments.push_back(start == std::string::npos ? "" : line.substr(start));
      continue;
    }
    std::stringstream ss(line);
    std::string cell;
    if (!have_header) {
      while (std::getline(ss, cell, ',')) table.columns.push_back(cell);
      have_header = true;
      continue;
    }
    std::vector<double> row;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    if (row.size() != table.columns.size())
      throw std::runtime_error("csv row width mismatch in " + path.string());
    rows.push_back(std::move(row));
  }
  table.values.resize(static_cast<Eigen::Index>(rows.size()),
                      static_cast<Eigen::Index>(table.columns.size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t k = 0; k < rows[i].size(); ++k)
      table.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = rows[i][k];
  return table;
}

void save_emulator(const fs::path& path, const GpEmulator& emulator) {
  const auto& tr = emulator.training();
  const auto& hp = emulator.hyperparams();
  std::string buf;
  put_u32(buf, kEmulatorMagic);
  put_u32(buf, kEmulatorVersion);
  put_u32(buf, static_cast<std::uint32_t>(tr.size()));
  put_u32(buf, static_cast<std::uint32_t>(tr.input_dim()));
  put_u32(buf, emulator.predict_noisy() ? 1u : 0u);
  put_f64(buf, hp.signal_variance);
  put_f64(buf, hp.noise_variance);
  for (int k = 0; k < tr.input_dim(); ++k) put_f64(buf, hp.lengthscales[k]);
  for (int i = 0; i < tr.size(); ++i)
    for (int k = 0; k < tr.input_dim(); ++k) put_f64(buf, tr.raw_inputs()(i, k));
  for (int i = 0; i < tr.size(); ++i) put_f64(buf, tr.raw_outputs()[i]);
  write_text(path, buf);
}

std::shared_ptr<GpEmulator> load_emulator(const fs::path& path) {
  const std::string buf = read_text(path);
  Cursor c{buf.data(), buf.data() + buf.size()};
  if (c.u32() != kEmulatorMagic) throw std::runtime_error("not an emulator artifact: " + path.string());
  if (c.u32() != kEmulatorVersion)
    throw std::runtime_error("unsupported emulator artifact version in " + path.string());
  const auto n = c.u32();
  const auto p = c.u32();
  const bool noisy = c.u32() != 0;
  GpHyperparams hp;
  hp.signal_variance = c.f64();
  hp.noise_variance = c.f64();
  hp.lengthscales.resize(p);
  for (std::uint32_t k = 0; k < p; ++k) hp.lengthscales[k] = c.f64();
  Eigen::MatrixXd inputs(n, p);
  for (std::uint32_t i = 0; i < n; ++i)
    for (std::uint32_t k = 0; k < p; ++k) inputs(i, k) = c.f64();
  Eigen::VectorXd outputs(n);
  for (std::uint32_t i = 0; i < n; ++i) outputs[i] = c.f64();
  return std::make_shared<GpEmulator>(GpTrainingSet(inputs, outputs), hp, noisy);
}

std::string space_to_json(const ParameterSpace& space) {
  json dims = json::array();
  for (int k = 0; k < space.dim(); ++k) {
    const auto& d = space.dimension(k);
    json jd;
    jd["name"] = d.name;
    jd["prior"] = d.prior == PriorKind::uniform_box ? "uniform" : "half_cauchy";
    if (d.prior == PriorKind::uniform_box) {
      jd["lower"] = d.lower;
      jd["upper"] = d.upper;
    }
    dims.push_back(jd);
  }
  return json{{"dimensions", dims}}.dump(2);
}

ParameterSpace space_from_json(const std::string& json_text) {
  const json j = json::parse(json_text);
  std::vector<ParameterSpace::Dimension> dims;
  for (const auto& jd : j.at("dimensions")) {
    ParameterSpace::Dimension d;
    d.name = jd.at("name").get<std::string>();
    const auto prior = jd.at("prior").get<std::string>();
    if (prior == "uniform") {
      d.prior = PriorKind::uniform_box;
      d.lower = jd.at("lower").get<double>();
      d.upper = jd.at("upper").get<double>();
    } else if (prior == "half_cauchy") {
      d.prior = PriorKind::half_cauchy;
      d.lower = 0.0;
      d.upper = std::numeric_limits<double>::infinity();
    } else {
      throw std::runtime_error("space_from_json: unknown prior kind '" + prior + "'");
    }
    dims.push_back(d);
  }
  return ParameterSpace(std::move(dims));
}

std::string measure_to_json(const ImplausibilityMeasure& m) {
  json j;
  if (m.kind == ImplausibilityMeasure::Kind::ratio) {
    j["kind"] = "ratio";
    j["y_obs"] = m.y_obs;
    j["s_m"] = m.model_sd;
    j["s_d"] = m.discrepancy_sd;
  } else {
    j["kind"] = "lcb";
    j["r"] = m.r;
    j["variance_form"] = m.use_variance_form;
  }
  return j.dump(2);
}

ImplausibilityMeasure measure_from_json(const std::string& json_text) {
  const json j = json::parse(json_text);
  ImplausibilityMeasure m;
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "ratio") {
    m.kind = ImplausibilityMeasure::Kind::ratio;
    m.y_obs = j.at("y_obs").get<double>();
    m.model_sd = j.at("s_m").get<double>();
    m.discrepancy_sd = j.at("s_d").get<double>();
  } else if (kind == "lcb") {
    m.kind = ImplausibilityMeasure::Kind::lcb;
    m.r = j.at("r").get<double>();
    m.use_variance_form = j.value("variance_form", false);
  } else {
    throw std::runtime_error("measure_from_json: unknown kind '" + kind + "'");
  }
  return m;
}

std::string wave_summary_to_json(const WaveSummary& s) {
  json j;
  j["wave"] = s.wave;
  j["cutoff"] = s.cutoff;
  j["ess_after_reweight"] = s.ess_after_reweight;
  j["survivor_count"] = s.survivor_count;
  j["survivor_fraction"] = s.survivor_fraction;
  j["repeats"] = s.repeats;
  j["p_acc"] = s.p_acc;
  j["p_acc_all"] = s.p_acc_all;
  j["unique_particles"] = s.unique_particles;
  j["training_quantiles"] = s.training_quantiles;
  j["simulations_cum"] = s.simulations_cum;
  return j.dump(2);
}

RunWriter::RunWriter(fs::path dir, const ParameterSpace& space, std::vector<std::string> names)
    : dir_(std::move(dir)), space_(space), names_(std::move(names)) {
  fs::create_directories(dir_);
}

void RunWriter::on_wave(const WaveArtifacts& art) {
  char sub[16];
  std::snprintf(sub, sizeof(sub), "wave_%03d", art.wave);
  const fs::path wave_dir = dir_ / sub;
  fs::create_directories(wave_dir);

  if (art.population) {
    write_csv(wave_dir / "particles.csv", names_, art.population->thetas);
  }
  if (art.training_inputs) {
    std::vector<std::string> cols = names_;
    cols.push_back("raw_output");
    cols.push_back("transformed_output");
    Eigen::MatrixXd tbl(art.training_inputs->rows(), art.training_inputs->cols() + 2);
    tbl.leftCols(art.training_inputs->cols()) = *art.training_inputs;
    tbl.col(art.training_inputs->cols()) = *art.training_raw;
    tbl.col(art.training_inputs->cols() + 1) = *art.training_transformed;
    write_csv(wave_dir / "training.csv", cols, tbl);
  }
  if (art.summary) write_text(wave_dir / "summary.json", wave_summary_to_json(*art.summary) + "\n");
  if (art.emulator) {
    save_emulator(wave_dir / "emulator.bin", *art.emulator);
    if (art.cutoff) chain_entries_.push_back({art.wave, *art.cutoff, std::string(sub) + "/emulator.bin"});
  }
  if (art.measure && measure_json_.empty()) measure_json_ = measure_to_json(*art.measure);
}

void RunWriter::finalize(const RunResult& result, const std::string& config_echo) {
  json chain;
  chain["version"] = 1;
  chain["space"] = json::parse(space_to_json(space_));
  if (!measure_json_.empty()) chain["measure"] = json::parse(measure_json_);
  json waves = json::array();
  // the wave-w scorer uses the emulator trained at wave w-1
  for (const auto& rec : result.chain.waves()) {
    json jw;
    jw["wave"] = rec.index;
    jw["cutoff"] = rec.cutoff;
    char sub[32];
    std::snprintf(sub, sizeof(sub), "wave_%03d/emulator.bin", rec.index - 1);
    jw["emulator"] = sub;
    waves.push_back(jw);
  }
  chain["waves"] = waves;
  write_text(dir_ / "chain.json", chain.dump(2) + "\n");

  json run;
  run["stop_reason"] = result.stop_reason;
  run["simulation_count"] = result.simulation_count;
  run["waves_completed"] = result.chain.size();
  if (!config_echo.empty()) run["config"] = json::parse(config_echo);
  write_text(dir_ / "run.json", run.dump(2) + "\n");
}

LoadedChain load_chain(const fs::path& run_dir) {
  const json chain = json::parse(read_text(run_dir / "chain.json"));
  LoadedChain out{WaveChain{}, space_from_json(chain.at("space").dump()),
                  chain.contains("measure") ? measure_from_json(chain.at("measure").dump())
                                            : ImplausibilityMeasure{}};
  for (const auto& jw : chain.at("waves")) {
    const int wave = jw.at("wave").get<int>();
    const double cutoff = jw.at("cutoff").get<double>();
    const auto emulator = load_emulator(run_dir / jw.at("emulator").get<std::string>());
    out.chain.push({wave, std::make_shared<EmulatorScorer>(emulator, out.measure), cutoff});
  }
  return out;
}

}  // namespace hmsmc::io
