#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "streampca/harness.hpp"

namespace streampca {

inline constexpr const char* kTrialsHeader = "config_id,trial,seed,checkpoint,error,status";
inline constexpr const char* kSummaryHeader = "config_id,checkpoint,mean,stderr,count";
inline constexpr const char* kBestHeader = "checkpoint,algorithm,config_id,mean,stderr,count";
inline constexpr const char* kComparisonsHeader =
    "checkpoint,config_a,config_b,t,df,p_value,significant";

/// One row per (trial, checkpoint); the error field is empty after a failure.
void write_trials_csv(std::ostream& out, std::span<const TrialRecord> records,
                      std::span<const std::uint64_t> checkpoints);
/// One row per (config, checkpoint); mean and stderr are empty when count is 0.
void write_summary_csv(std::ostream& out, const ExperimentSummary& summary);
void write_best_csv(std::ostream& out, const ExperimentSummary& summary);
void write_comparisons_csv(std::ostream& out, const ExperimentSummary& summary);

class CsvError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SummaryRow {
  std::string config_id;
  std::uint64_t checkpoint = 0;
  double mean = 0.0;
  double stderr_mean = 0.0;
  std::size_t count = 0;
};

/// Parses a summary CSV; rows with count 0 are skipped. Throws CsvError.
std::vector<SummaryRow> read_summary_csv(std::istream& in);

struct PlotOptions {
  std::string title = "Spectral error vs. samples";
  double width = 800.0;
  double height = 500.0;
};

/// Line chart: one polyline of mean error per config over the checkpoints,
/// with a shaded +-1 standard error band. Throws CsvError when `rows` is empty.
std::string render_svg(std::span<const SummaryRow> rows, const PlotOptions& options = {});

}  // namespace streampca
