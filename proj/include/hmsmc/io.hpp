#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "hmsmc/implausibility.hpp"
#include "hmsmc/smc.hpp"

namespace hmsmc::io {

// ---- CSV ----------------------------------------------------------------
// Doubles are written with 17 significant digits so files parse back
// losslessly.  Lines starting with '#' are comments; the first data line is
// the header.

struct CsvTable {
  std::vector<std::string> comments;  // without the leading '#'
  std::vector<std::string> columns;
  Eigen::MatrixXd values;
};

void write_csv(const std::filesystem::path& path, const std::vector<std::string>& columns,
               const Eigen::MatrixXd& values, const std::vector<std::string>& comments = {});
CsvTable read_csv(const std::filesystem::path& path);

// ---- emulator artifact ---------------------------------------------------
// Versioned little-endian binary: hyperparameters + raw training pairs; the
// factorization is rebuilt on load (deterministic, so predictions match).

void save_emulator(const std::filesystem::path& path, const GpEmulator& emulator);
std::shared_ptr<GpEmulator> load_emulator(const std::filesystem::path& path);

// ---- parameter space / measure JSON blobs --------------------------------

std::string space_to_json(const ParameterSpace& space);
ParameterSpace space_from_json(const std::string& json_text);

std::string measure_to_json(const ImplausibilityMeasure& measure);
ImplausibilityMeasure measure_from_json(const std::string& json_text);

// ---- run directory --------------------------------------------------------
// Layout: wave_{w:03}/particles.csv, training.csv, summary.json, emulator.bin
// plus top-level chain.json and run.json.

class RunWriter final : public WaveSink {
 public:
  RunWriter(std::filesystem::path dir, const ParameterSpace& space,
            std::vector<std::string> names);
  void on_wave(const WaveArtifacts& artifacts) override;
  void finalize(const RunResult& result, const std::string& config_echo);
  const std::filesystem::path& dir() const { return dir_; }

 private:
  std::filesystem::path dir_;
  ParameterSpace space_;
  std::vector<std::string> names_;
  struct ChainEntry {
    int wave;
    double cutoff;
    std::string emulator_file;
  };
  std::vector<ChainEntry> chain_entries_;
  std::string measure_json_;
};

// Rebuild a frozen chain from a run directory written by RunWriter.
struct LoadedChain {
  WaveChain chain;
  ParameterSpace space;
  ImplausibilityMeasure measure;
};
LoadedChain load_chain(const std::filesystem::path& run_dir);

std::string wave_summary_to_json(const WaveSummary& summary);

}  // namespace hmsmc::io
