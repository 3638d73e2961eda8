// streampca: run streaming PCA benchmarks, plot summaries, emit synthetic specs.
//
// Exit codes: 0 success, 1 unexpected failure, 2 invalid config or CSV,
// 3 dataset I/O failure.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "streampca/config.hpp"
#include "streampca/report.hpp"
#include "streampca/run.hpp"

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitInvalid = 2;
constexpr int kExitDataset = 3;

int cmd_run(const std::string& config_path, const std::string& out_dir,
            std::optional<unsigned> threads, bool no_plots) {
  using namespace streampca;
  try {
    const ExperimentConfig config = load_experiment_config(config_path);
    const unsigned n = threads.value_or(default_thread_count());
    const PreparedExperiment prepared = prepare_experiment(config, n);
    const RunOutputs outputs = execute(prepared, n);
    write_run_directory(prepared, outputs, out_dir, !no_plots);
  } catch (const ConfigError& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kExitInvalid;
  } catch (const DatasetIoError& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kExitDataset;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kExitFailure;
  }
  return 0;
}

int cmd_plot(const std::string& summary_path, const std::string& out_path,
             const std::string& title) {
  using namespace streampca;
  std::ifstream in(summary_path);
  if (!in) {
    fmt::print(stderr, "error: cannot open '{}'\n", summary_path);
    return kExitInvalid;
  }
  try {
    const auto rows = read_summary_csv(in);
    PlotOptions opts;
    if (!title.empty()) opts.title = title;
    const std::string svg = render_svg(rows, opts);
    std::ofstream out(out_path, std::ios::binary);
    if (!out || !(out << svg)) {
      fmt::print(stderr, "error: cannot write '{}'\n", out_path);
      return kExitFailure;
    }
  } catch (const CsvError& e) {
    fmt::print(stderr, "error: {}: {}\n", summary_path, e.what());
    return kExitInvalid;
  }
  return 0;
}

int cmd_spec(std::size_t dimension, const std::vector<double>& top, double tail_start,
             double tail_ratio, std::optional<std::uint64_t> rotation_seed,
             const std::string& out_path) {
  using namespace streampca;
  SyntheticSpec spec;
  spec.dimension = dimension;
  spec.eigenvalues = geometric_spectrum(dimension, top, tail_start, tail_ratio);
  spec.rotation_seed = rotation_seed;
  try {
    validate(spec);
  } catch (const std::invalid_argument& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kExitInvalid;
  }
  nlohmann::json doc{{"type", "synthetic"},
                     {"dimension", spec.dimension},
                     {"eigenvalues", spec.eigenvalues}};
  if (rotation_seed) doc["rotation_seed"] = *rotation_seed;
  const std::string text = doc.dump(2) + "\n";
  if (out_path.empty()) {
    std::cout << text;
    return 0;
  }
  std::ofstream out(out_path, std::ios::binary);
  if (!out || !(out << text)) {
    fmt::print(stderr, "error: cannot write '{}'\n", out_path);
    return kExitFailure;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Memory-restricted streaming PCA benchmarks"};
  app.set_version_flag("--version", std::string(streampca::kToolVersion));
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "Run an experiment from a JSON config or manifest");
  std::string config_path, out_dir;
  std::optional<unsigned> threads;
  bool no_plots = false;
  run->add_option("--config", config_path, "Config file or manifest.json")->required();
  run->add_option("--out", out_dir, "Output directory")->required();
  run->add_option("--threads", threads, "Parallel trials (default: STREAMPCA_THREADS or cores)")
      ->check(CLI::PositiveNumber);
  run->add_flag("--no-plots", no_plots, "Skip curves.svg");

  auto* plot = app.add_subcommand("plot", "Render a summary CSV as an SVG line chart");
  std::string summary_path, svg_path, title;
  plot->add_option("--summary", summary_path, "summary.csv from a run")->required();
  plot->add_option("--out", svg_path, "Output SVG")->required();
  plot->add_option("--title", title, "Chart title");

  auto* spec = app.add_subcommand("spec", "Print a synthetic stream description");
  std::size_t dimension = 0;
  std::vector<double> top;
  double tail_start = 0.0;
  double tail_ratio = 1.0;
  std::optional<std::uint64_t> rotation_seed;
  std::string spec_out;
  spec->add_option("--dimension", dimension, "Ambient dimension d")->required();
  spec->add_option("--top", top, "Leading eigenvalues, descending")->required();
  spec->add_option("--tail-start", tail_start, "First tail eigenvalue")->required();
  spec->add_option("--tail-ratio", tail_ratio, "Geometric decay of the tail")
      ->check(CLI::Range(0.0, 1.0));
  spec->add_option("--rotation-seed", rotation_seed, "Random orthogonal basis seed");
  spec->add_option("--out", spec_out, "Write here instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitInvalid;
  }

  if (*run) return cmd_run(config_path, out_dir, threads, no_plots);
  if (*plot) return cmd_plot(summary_path, svg_path, title);
  return cmd_spec(dimension, top, tail_start, tail_ratio, rotation_seed, spec_out);
}
