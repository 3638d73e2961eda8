#include "streampca/run.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include <fmt/format.h>

#include "streampca/random.hpp"
#include "streampca/report.hpp"

namespace streampca {

using nlohmann::json;

PreparedExperiment prepare_experiment(const ExperimentConfig& config, unsigned threads) {
  PreparedExperiment prepared;
  prepared.config = config;
  ExperimentPlan& plan = prepared.plan;
  std::uint64_t corpus_size = config.points;

  if (config.stream.kind == StreamConfig::Kind::synthetic) {
    auto model = std::make_shared<const SyntheticSampler>(config.stream.synthetic);
    try {
      plan.reference = analytic_reference(*model, config.k);
    } catch (const std::invalid_argument& e) {
      throw ConfigError("stream.eigenvalues", e.what());
    }
    plan.backing.synthetic = std::move(model);
  } else {
    try {
      prepared.dataset =
          std::make_shared<const Dataset>(load_bag_of_words(config.stream.dataset_path));
    } catch (const ParseError& e) {
      throw DatasetIoError(fmt::format("{}: {}", config.stream.dataset_path.string(), e.what()));
    } catch (const std::system_error& e) {
      throw DatasetIoError(fmt::format("cannot read dataset: {}", e.what()));
    }
    if (prepared.dataset->empty()) {
      throw DatasetIoError(
          fmt::format("{}: dataset has no documents", config.stream.dataset_path.string()));
    }
    if (config.k > prepared.dataset->dimension()) {
      throw ConfigError("k", fmt::format("exceeds the vocabulary size {}",
                                         prepared.dataset->dimension()));
    }
    corpus_size = prepared.dataset->size();
    plan.backing.dataset = prepared.dataset;
    plan.reference = reference_oracle(sample_covariance_action(prepared.dataset, 8, threads),
                                      prepared.dataset->dimension(), config.k, config.oracle);
  }

  const std::size_t d = plan.backing.dimension();
  for (std::size_t i = 0; i < config.algorithms.size(); ++i) {
    const AlgorithmEntry& a = config.algorithms[i];
    GridEntry entry{a.id, a.estimator};
    if (a.bpca_multiplier) {
      try {
        entry.estimator.bpca_block =
            bpca_block_from_corpus(corpus_size, d, *a.bpca_multiplier, a.log_base);
      } catch (const std::invalid_argument& e) {
        throw ConfigError(fmt::format("algorithms[{}].L", i), e.what());
      }
    }
    if (entry.estimator.dbpca_schedule) entry.estimator.dbpca_schedule->dimension = d;
    plan.grid.push_back(std::move(entry));
  }
  plan.checkpoints = config.checkpoints;
  plan.trials = config.trials;
  plan.base_seed = config.seed;
  validate(plan);
  return prepared;
}

RunOutputs execute(const PreparedExperiment& prepared, unsigned threads) {
  RunOutputs out;
  out.records = run_experiment(prepared.plan, threads);
  out.summary = aggregate(out.records, prepared.plan.grid, prepared.plan.checkpoints,
                          prepared.config.designated_checkpoints);
  return out;
}

json build_manifest(const PreparedExperiment& prepared) {
  const ExperimentPlan& plan = prepared.plan;
  json m;
  m["manifest_version"] = kManifestVersion;
  m["tool"] = "streampca";
  m["tool_version"] = kToolVersion;
  m["rng"] = std::string(kRngAlgorithm);
  m["trial_seed_rule"] =
      "mix64(mix64(seed ^ fnv1a64(config_id)) + trial * 0x9e3779b97f4a7c15); init and stream "
      "seeds derived from it with tags 1 and 2";
  m["config"] = to_json(prepared.config);

  json stream;
  stream["dimension"] = plan.backing.dimension();
  if (prepared.dataset) {
    stream["documents"] = prepared.dataset->size();
    stream["nonzeros"] = prepared.dataset->nonzeros();
    stream["normalization"] = kBagOfWordsNormalization;
    stream["order"] = "uniform permutation per pass, reshuffled between passes";
  } else {
    stream["sampler"] =
        "x = s * r_i * v_i, direction i with p_i = lambda_i / sum(lambda), r_i = sqrt(sum(lambda))";
    stream["rotation"] = prepared.config.stream.synthetic.rotation_seed ? "gaussian-qr" : "identity";
  }
  m["stream"] = stream;

  json ref;
  const Provenance& prov = plan.reference.provenance;
  ref["provenance"] = prov.kind == Provenance::Kind::analytic ? "analytic" : "oracle";
  ref["eigenvalues"] = plan.reference.eigenvalues;
  if (prov.kind == Provenance::Kind::oracle) {
    ref["oracle_iterations_budget"] = prepared.config.oracle.iterations;
    ref["oracle_tolerance"] = prepared.config.oracle.tolerance;
    ref["oracle_seed"] = prov.seed;
    ref["oracle_iterations_run"] = prov.iterations;
    ref["converged"] = prov.converged;
    if (!prov.warning.empty()) ref["warning"] = prov.warning;
  }
  m["reference"] = ref;

  json grid = json::array();
  for (const auto& g : plan.grid) {
    json e{{"id", g.id}, {"algorithm", std::string(to_string(g.estimator.algorithm))}};
    if (g.estimator.algorithm == Algorithm::bpca) e["block"] = g.estimator.bpca_block;
    if (g.estimator.algorithm == Algorithm::dbpca && !g.estimator.dbpca_schedule) {
      e["initial_block"] = g.estimator.dbpca_initial_block > 0 ? g.estimator.dbpca_initial_block
                                                               : 2 * g.estimator.k;
    }
    grid.push_back(std::move(e));
  }
  m["resolved_grid"] = std::move(grid);
  return m;
}

namespace {

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error(fmt::format("cannot write '{}'", path.string()));
  out << content;
  if (!out) throw std::runtime_error(fmt::format("failed writing '{}'", path.string()));
}

}  // namespace

void write_run_directory(const PreparedExperiment& prepared, const RunOutputs& outputs,
                         const std::filesystem::path& out_dir, bool plots) {
  std::filesystem::create_directories(out_dir);
  write_file(out_dir / "manifest.json", build_manifest(prepared).dump(2) + "\n");

  std::ostringstream trials;
  write_trials_csv(trials, outputs.records, prepared.plan.checkpoints);
  write_file(out_dir / "trials.csv", trials.str());

  std::ostringstream summary;
  write_summary_csv(summary, outputs.summary);
  write_file(out_dir / "summary.csv", summary.str());

  std::ostringstream best;
  write_best_csv(best, outputs.summary);
  write_file(out_dir / "best.csv", best.str());

  std::ostringstream comparisons;
  write_comparisons_csv(comparisons, outputs.summary);
  write_file(out_dir / "comparisons.csv", comparisons.str());

  std::vector<SummaryRow> rows;
  for (const auto& cs : outputs.summary.configs) {
    for (std::size_t j = 0; j < outputs.summary.checkpoints.size(); ++j) {
      const CheckpointStats& s = cs.stats[j];
      if (s.count == 0) continue;
      rows.push_back({cs.config_id, outputs.summary.checkpoints[j], s.mean, s.stderr_mean, s.count});
    }
  }
  // every trial failed: nothing to draw
  if (plots && !rows.empty()) {
    PlotOptions opts;
    opts.title = fmt::format("{} (k={})", prepared.config.name, prepared.config.k);
    write_file(out_dir / "curves.svg", render_svg(rows, opts));
  }
}

unsigned default_thread_count() {
  if (const char* env = std::getenv("STREAMPCA_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v > 0) return static_cast<unsigned>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

}  // namespace streampca
