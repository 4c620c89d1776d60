#pragma once

#include <filesystem>
#include <memory>
#include <string>

#include "hmsmc/implausibility.hpp"
#include "hmsmc/models/model.hpp"
#include "hmsmc/smc.hpp"

namespace hmsmc {

// Configuration error with the offending field path; maps to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// A fully validated run configuration: model + space + measure + engine
// settings.  Unknown keys anywhere in the file are rejected.
struct RunConfig {
  std::uint64_t seed = 1;
  std::string output_dir = "run_out";
  unsigned threads = 1;
  std::unique_ptr<SimulatorModel> model;
  ParameterSpace space = ParameterSpace::box({"x"}, Eigen::VectorXd::Zero(1),
                                             Eigen::VectorXd::Ones(1));
  ImplausibilityMeasure measure;
  SmcConfig smc;
  std::string echo;  // normalized JSON echo for run.json

  static RunConfig from_file(const std::filesystem::path& path);
  static RunConfig from_json_text(const std::string& text,
                                  const std::filesystem::path& base_dir = ".");
};

}  // namespace hmsmc
