#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "streampca/estimators.hpp"
#include "streampca/metrics.hpp"
#include "streampca/streams.hpp"

namespace streampca {

/// Schema violation; `path()` is the offending field, e.g. "algorithms[1].rate".
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string path, const std::string& message);
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

struct StreamConfig {
  enum class Kind { synthetic, dataset };
  Kind kind = Kind::synthetic;
  SyntheticSpec synthetic;
  std::filesystem::path dataset_path;
};

/// One grid entry before corpus-dependent values are resolved.
struct AlgorithmEntry {
  std::string id;
  EstimatorConfig estimator;
  /// BPCA block = floor(N / floor(L log d)) when set.
  std::optional<double> bpca_multiplier;
  std::optional<double> log_base;
};

struct ExperimentConfig {
  std::string name = "experiment";
  StreamConfig stream;
  std::size_t k = 0;
  std::uint64_t points = 0;
  std::vector<std::uint64_t> checkpoints;
  std::vector<std::uint64_t> designated_checkpoints;  // defaults to the last checkpoint
  std::size_t trials = 60;
  std::uint64_t seed = 0;
  OracleOptions oracle;
  std::vector<AlgorithmEntry> algorithms;
};

/// Parses and validates a configuration. Unknown keys are rejected. Numeric
/// algorithm parameters given as arrays expand into one grid entry per value.
/// Relative dataset paths resolve against `base_dir`.
ExperimentConfig parse_experiment_config(const nlohmann::json& doc,
                                         const std::filesystem::path& base_dir = {});

/// Reads a config file, or the "config" section of a run manifest.
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

/// Fully resolved form (explicit eigenvalues, expanded grid, explicit ids).
/// Parsing it back yields the same experiment.
nlohmann::json to_json(const ExperimentConfig& config);

/// top followed by tail_start * tail_ratio^j until `dimension` values.
std::vector<double> geometric_spectrum(std::size_t dimension, const std::vector<double>& top,
                                       double tail_start, double tail_ratio);

}  // namespace streampca
