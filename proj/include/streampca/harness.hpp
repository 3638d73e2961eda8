#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "streampca/estimators.hpp"
#include "streampca/metrics.hpp"
#include "streampca/streams.hpp"

namespace streampca {

enum class TrialStatus { ok, degenerate_block, rank_deficient };
std::string_view to_string(TrialStatus s) noexcept;

/// One estimator configuration of a parameter grid.
struct GridEntry {
  std::string id;
  EstimatorConfig estimator;
};

/// Spectral error of one run at each checkpoint; absent after a failure.
struct TrialRecord {
  std::string config_id;
  std::size_t trial = 0;
  std::uint64_t seed = 0;
  std::vector<std::optional<double>> errors;
  TrialStatus status = TrialStatus::ok;
  std::string message;
};

/// seed = mix64(mix64(base ^ fnv1a64(config_id)) + trial * golden): a trial's
/// seed depends on its own config id only, so growing a grid leaves existing
/// trials untouched.
std::uint64_t trial_seed(std::uint64_t base_seed, std::string_view config_id, std::size_t trial);

/// Runs one estimator over a fresh stream and records the spectral error after
/// exactly `checkpoints[j]` points. The trial seed is split into the
/// estimator's init seed and the stream's order seed.
TrialRecord run_trial(const EstimatorConfig& config, const StreamBacking& backing,
                      const ReferenceSubspace& ref, std::span<const std::uint64_t> checkpoints,
                      std::uint64_t seed);

/// Everything needed to run a grid of trials.
struct ExperimentPlan {
  StreamBacking backing;
  ReferenceSubspace reference;
  std::vector<std::uint64_t> checkpoints;
  std::vector<GridEntry> grid;
  std::size_t trials = 60;
  std::uint64_t base_seed = 0;
};

/// Checks checkpoints are strictly increasing, trials >= 1, ids unique and
/// dimensions consistent. Throws std::invalid_argument.
void validate(const ExperimentPlan& plan);

/// All (config, trial) runs, ordered by grid position then trial, regardless
/// of `threads`.
std::vector<TrialRecord> run_experiment(const ExperimentPlan& plan, unsigned threads = 1);

struct CheckpointStats {
  double mean = 0.0;
  double stderr_mean = 0.0;  // sample stddev / sqrt(count); 0 when count < 2
  std::size_t count = 0;
};

struct ConfigSummary {
  std::string config_id;
  Algorithm algorithm = Algorithm::spca;
  std::vector<CheckpointStats> stats;  // aligned with checkpoints
  std::size_t trials = 0;
  std::size_t failed = 0;
};

struct BestConfig {
  std::uint64_t checkpoint = 0;
  Algorithm algorithm = Algorithm::spca;
  std::string config_id;
  CheckpointStats stats;
};

struct WelchResult {
  double t = 0.0;
  double df = 0.0;
  double p_two_sided = 1.0;
};

/// Two-sample t-test with unequal variances. Needs >= 2 values per side.
WelchResult welch_t_test(std::span<const double> a, std::span<const double> b);

struct Comparison {
  std::uint64_t checkpoint = 0;
  std::string config_a;
  std::string config_b;
  Algorithm algorithm_a = Algorithm::spca;
  Algorithm algorithm_b = Algorithm::spca;
  WelchResult test;
  bool significant = false;  // p < 0.05
};

struct ExperimentSummary {
  std::vector<std::uint64_t> checkpoints;
  std::vector<ConfigSummary> configs;
  std::vector<BestConfig> best;  // per designated checkpoint, per algorithm family
  std::vector<Comparison> comparisons;
};

/// Means, standard errors, per-family best configs (lowest mean) at each
/// designated checkpoint, and Welch tests between every pair of family bests.
/// Failed trials are excluded from the statistics but counted.
ExperimentSummary aggregate(std::span<const TrialRecord> records, std::span<const GridEntry> grid,
                            std::span<const std::uint64_t> checkpoints,
                            std::span<const std::uint64_t> designated);

/// Successful per-trial errors of one config at checkpoint index j.
std::vector<double> errors_at(std::span<const TrialRecord> records, std::string_view config_id,
                              std::size_t checkpoint_index);

}  // namespace streampca
