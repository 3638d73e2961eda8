#include "streampca/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <set>
#include <thread>

#include <boost/math/distributions/students_t.hpp>
#include <fmt/format.h>

#include "streampca/random.hpp"

namespace streampca {

namespace {
constexpr std::uint64_t kInitTag = 1;
constexpr std::uint64_t kStreamTag = 2;
}  // namespace

std::string_view to_string(TrialStatus s) noexcept {
  switch (s) {
    case TrialStatus::ok: return "ok";
    case TrialStatus::degenerate_block: return "degenerate-block";
    case TrialStatus::rank_deficient: return "rank-deficient";
  }
  return "unknown";
}

std::uint64_t trial_seed(std::uint64_t base_seed, std::string_view config_id, std::size_t trial) {
  const std::uint64_t config_key = mix64(base_seed ^ fnv1a64(config_id));
  return mix64(config_key + static_cast<std::uint64_t>(trial) * 0x9e3779b97f4a7c15ULL);
}

TrialRecord run_trial(const EstimatorConfig& config, const StreamBacking& backing,
                      const ReferenceSubspace& ref, std::span<const std::uint64_t> checkpoints,
                      std::uint64_t seed) {
  if (backing.dimension() != ref.dimension()) {
    throw std::invalid_argument(fmt::format("trial: stream dimension {} != reference dimension {}",
                                            backing.dimension(), ref.dimension()));
  }
  if (config.k != ref.rank()) {
    throw std::invalid_argument(
        fmt::format("trial: estimator k = {} != reference k = {}", config.k, ref.rank()));
  }

  TrialRecord record;
  record.seed = seed;
  record.errors.assign(checkpoints.size(), std::nullopt);

  EstimatorConfig cfg = config;
  cfg.init_seed = derive_seed(seed, kInitTag);
  StreamingEstimator estimator(cfg, backing.dimension());
  StreamSource stream(backing, derive_seed(seed, kStreamTag));

  std::size_t next = 0;
  try {
    for (; next < checkpoints.size(); ++next) {
      while (estimator.samples_seen() < checkpoints[next]) estimator.update(stream.next());
      record.errors[next] = spectral_error(ref, estimator.current_basis());
    }
  } catch (const DegenerateBlockError& e) {
    record.status = TrialStatus::degenerate_block;
    record.message = e.what();
  } catch (const RankDeficientError& e) {
    record.status = TrialStatus::rank_deficient;
    record.message = e.what();
  }
  return record;
}

void validate(const ExperimentPlan& plan) {
  if (plan.trials < 1) throw std::invalid_argument("experiment: trials must be >= 1");
  if (plan.checkpoints.empty()) throw std::invalid_argument("experiment: no checkpoints");
  for (std::size_t i = 1; i < plan.checkpoints.size(); ++i) {
    if (plan.checkpoints[i] <= plan.checkpoints[i - 1]) {
      throw std::invalid_argument("experiment: checkpoints must be strictly increasing");
    }
  }
  if (plan.grid.empty()) throw std::invalid_argument("experiment: empty algorithm grid");
  std::set<std::string> ids;
  for (const auto& entry : plan.grid) {
    if (!ids.insert(entry.id).second) {
      throw std::invalid_argument(fmt::format("experiment: duplicate config id '{}'", entry.id));
    }
    validate(entry.estimator);
    if (entry.estimator.k != plan.reference.rank()) {
      throw std::invalid_argument(fmt::format("experiment: config '{}' has k = {}, reference has {}",
                                              entry.id, entry.estimator.k, plan.reference.rank()));
    }
  }
  if (plan.backing.dimension() != plan.reference.dimension()) {
    throw std::invalid_argument("experiment: stream and reference dimensions differ");
  }
}

std::vector<TrialRecord> run_experiment(const ExperimentPlan& plan, unsigned threads) {
  validate(plan);
  const std::size_t total = plan.grid.size() * plan.trials;
  std::vector<TrialRecord> records(total);

  auto run_one = [&](std::size_t index) {
    const GridEntry& entry = plan.grid[index / plan.trials];
    const std::size_t trial = index % plan.trials;
    TrialRecord r = run_trial(entry.estimator, plan.backing, plan.reference, plan.checkpoints,
                              trial_seed(plan.base_seed, entry.id, trial));
    r.config_id = entry.id;
    r.trial = trial;
    records[index] = std::move(r);
  };

  threads = std::max(1u, threads);
  if (threads == 1) {
    for (std::size_t i = 0; i < total; ++i) run_one(i);
    return records;
  }

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < std::min<std::size_t>(threads, total); ++t) {
      pool.emplace_back([&] {
        for (std::size_t i; !failed && (i = next.fetch_add(1)) < total;) {
          try {
            run_one(i);
          } catch (...) {
            if (!failed.exchange(true)) failure = std::current_exception();
          }
        }
      });
    }
  }
  if (failure) std::rethrow_exception(failure);
  return records;
}

WelchResult welch_t_test(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) {
    throw std::invalid_argument("welch t-test: need at least two values per sample");
  }
  auto moments = [](std::span<const double> x) {
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= static_cast<double>(x.size());
    double ss = 0.0;
    for (double v : x) ss += (v - mean) * (v - mean);
    return std::pair{mean, ss / static_cast<double>(x.size() - 1)};
  };
  const auto [ma, va] = moments(a);
  const auto [mb, vb] = moments(b);
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  const double sa = va / na;
  const double sb = vb / nb;
  const double se2 = sa + sb;

  WelchResult out;
  if (se2 == 0.0) {
    // both samples constant
    if (ma == mb) return out;
    out.t = ma > mb ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
    out.df = na + nb - 2.0;
    out.p_two_sided = 0.0;
    return out;
  }
  out.t = (ma - mb) / std::sqrt(se2);
  out.df = se2 * se2 / (sa * sa / (na - 1.0) + sb * sb / (nb - 1.0));
  boost::math::students_t dist(out.df);
  out.p_two_sided = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(out.t)));
  return out;
}

std::vector<double> errors_at(std::span<const TrialRecord> records, std::string_view config_id,
                              std::size_t checkpoint_index) {
  std::vector<double> out;
  for (const auto& r : records) {
    if (r.config_id != config_id || r.status != TrialStatus::ok) continue;
    if (checkpoint_index < r.errors.size() && r.errors[checkpoint_index]) {
      out.push_back(*r.errors[checkpoint_index]);
    }
  }
  return out;
}

namespace {

CheckpointStats stats_of(std::span<const double> values) {
  CheckpointStats s;
  s.count = values.size();
  if (s.count == 0) return s;
  for (double v : values) s.mean += v;
  s.mean /= static_cast<double>(s.count);
  if (s.count >= 2) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    const double sd = std::sqrt(ss / static_cast<double>(s.count - 1));
    s.stderr_mean = sd / std::sqrt(static_cast<double>(s.count));
  }
  // keep the mean inside [min, max] despite summation rounding
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  s.mean = std::clamp(s.mean, *lo, *hi);
  return s;
}

}  // namespace

ExperimentSummary aggregate(std::span<const TrialRecord> records, std::span<const GridEntry> grid,
                            std::span<const std::uint64_t> checkpoints,
                            std::span<const std::uint64_t> designated) {
  ExperimentSummary summary;
  summary.checkpoints.assign(checkpoints.begin(), checkpoints.end());

  for (const auto& entry : grid) {
    ConfigSummary cs;
    cs.config_id = entry.id;
    cs.algorithm = entry.estimator.algorithm;
    for (const auto& r : records) {
      if (r.config_id != entry.id) continue;
      ++cs.trials;
      if (r.status != TrialStatus::ok) ++cs.failed;
    }
    for (std::size_t j = 0; j < checkpoints.size(); ++j) {
      cs.stats.push_back(stats_of(errors_at(records, entry.id, j)));
    }
    summary.configs.push_back(std::move(cs));
  }

  for (std::uint64_t cp : designated) {
    const auto it = std::find(checkpoints.begin(), checkpoints.end(), cp);
    if (it == checkpoints.end()) {
      throw std::invalid_argument(fmt::format("aggregate: {} is not a checkpoint", cp));
    }
    const std::size_t j = static_cast<std::size_t>(it - checkpoints.begin());

    std::vector<BestConfig> family_best;
    for (Algorithm a : {Algorithm::alecton, Algorithm::spca, Algorithm::bpca, Algorithm::dbpca}) {
      const ConfigSummary* best = nullptr;
      for (const auto& cs : summary.configs) {
        // configs whose every trial failed are flagged and never win
        if (cs.algorithm != a || cs.failed == cs.trials || cs.stats[j].count == 0) continue;
        if (!best || cs.stats[j].mean < best->stats[j].mean) best = &cs;
      }
      if (best) family_best.push_back(BestConfig{cp, a, best->config_id, best->stats[j]});
    }

    for (std::size_t x = 0; x < family_best.size(); ++x) {
      for (std::size_t y = x + 1; y < family_best.size(); ++y) {
        const auto ea = errors_at(records, family_best[x].config_id, j);
        const auto eb = errors_at(records, family_best[y].config_id, j);
        if (ea.size() < 2 || eb.size() < 2) continue;
        Comparison c;
        c.checkpoint = cp;
        c.config_a = family_best[x].config_id;
        c.config_b = family_best[y].config_id;
        c.algorithm_a = family_best[x].algorithm;
        c.algorithm_b = family_best[y].algorithm;
        c.test = welch_t_test(ea, eb);
        c.significant = c.test.p_two_sided < 0.05;
        summary.comparisons.push_back(std::move(c));
      }
    }
    summary.best.insert(summary.best.end(), family_best.begin(), family_best.end());
  }
  return summary;
}

}  // namespace streampca
