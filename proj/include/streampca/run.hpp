#pragma once

#include <filesystem>
#include <memory>
#include <stdexcept>
#include <vector>

#include <json.hpp>

#include "streampca/config.hpp"
#include "streampca/harness.hpp"

namespace streampca {

inline constexpr const char* kToolVersion = "0.1.0";
inline constexpr int kManifestVersion = 1;

/// Dataset could not be read or parsed.
class DatasetIoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A configuration with its stream loaded, BPCA blocks resolved, and the
/// ground-truth subspace computed.
struct PreparedExperiment {
  ExperimentConfig config;
  ExperimentPlan plan;
  std::shared_ptr<const Dataset> dataset;  // null for synthetic streams
};

/// Loads the dataset (DatasetIoError on failure), resolves corpus-dependent
/// parameters, and computes the reference: analytic for synthetic streams,
/// orthogonal iteration over the dataset otherwise. Semantic problems that
/// only show up here (k > vocabulary, missing eigengap) raise ConfigError.
PreparedExperiment prepare_experiment(const ExperimentConfig& config, unsigned threads = 1);

struct RunOutputs {
  std::vector<TrialRecord> records;
  ExperimentSummary summary;
};

RunOutputs execute(const PreparedExperiment& prepared, unsigned threads = 1);

/// Everything needed to redo the run: resolved config, tool version, RNG,
/// normalization, and oracle settings and outcome.
nlohmann::json build_manifest(const PreparedExperiment& prepared);

/// Writes manifest.json, trials.csv, summary.csv, best.csv, comparisons.csv,
/// and (unless disabled) curves.svg into `out_dir`.
void write_run_directory(const PreparedExperiment& prepared, const RunOutputs& outputs,
                         const std::filesystem::path& out_dir, bool plots = true);

/// STREAMPCA_THREADS if set and positive, else the hardware concurrency.
unsigned default_thread_count();

}  // namespace streampca
