#include "streampca/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "streampca/random.hpp"

namespace streampca {

std::string_view to_string(Algorithm a) noexcept {
  switch (a) {
    case Algorithm::spca: return "spca";
    case Algorithm::alecton: return "alecton";
    case Algorithm::dbpca: return "dbpca";
    case Algorithm::bpca: return "bpca";
  }
  return "unknown";
}

std::optional<Algorithm> parse_algorithm(std::string_view name) noexcept {
  if (name == "spca") return Algorithm::spca;
  if (name == "alecton") return Algorithm::alecton;
  if (name == "dbpca") return Algorithm::dbpca;
  if (name == "bpca") return Algorithm::bpca;
  return std::nullopt;
}

ScheduleTerms schedule_terms(std::size_t i, const ScheduleParams& p) {
  if (i < 1) throw std::invalid_argument("schedule: block index must be >= 1");
  if (!(p.lambda_k > p.lambda_k1) || !(p.lambda_k1 >= 0.0)) {
    throw std::invalid_argument(
        fmt::format("schedule: need lambda_k > lambda_k1 >= 0, got {} and {}", p.lambda_k,
                    p.lambda_k1));
  }
  if (!(p.delta0 > 0.0 && p.delta0 < 1.0)) {
    throw std::invalid_argument("schedule: delta0 must lie in (0, 1)");
  }
  if (p.dimension < 1 || p.k < 1) throw std::invalid_argument("schedule: d and k must be >= 1");
  if (!(p.chernoff_c > 0.0) || !(p.cbar > 0.0)) {
    throw std::invalid_argument("schedule: chernoff_c and cbar must be positive");
  }

  ScheduleTerms t{};
  t.lambda_tilde = std::max(p.lambda_k1, p.lambda_k / 4.0);
  t.gamma = std::pow(t.lambda_tilde / p.lambda_k, 0.25);
  t.delta = (p.lambda_k - t.lambda_tilde) / 4.0;
  t.eps0 = std::sqrt(p.cbar / static_cast<double>(p.k * p.dimension));
  const double eps_prev = t.eps0 * std::pow(t.gamma, static_cast<double>(i - 1));
  t.beta = std::min(t.gamma / std::sqrt(1.0 + eps_prev * eps_prev), t.gamma * eps_prev);
  t.delta_i = p.delta0 / (2.0 * static_cast<double>(i) * static_cast<double>(i));
  return t;
}

std::uint64_t theoretical_block_size(std::size_t i, const ScheduleParams& p) {
  (void)schedule_terms(i, p);  // validates
  // extended precision: sizes reach 1e12 within 20 blocks and must round exactly
  using ld = long double;
  const ld lambda = p.lambda_k;
  const ld lambda_tilde = std::max<ld>(p.lambda_k1, lambda / 4);
  const ld gamma = std::pow(lambda_tilde / lambda, ld(0.25));
  const ld delta = (lambda - lambda_tilde) / 4;
  const ld eps_prev = std::sqrt(ld(p.cbar) / (ld(p.k) * ld(p.dimension))) *
                      std::pow(gamma, static_cast<ld>(i - 1));
  const ld beta = std::min(gamma / std::sqrt(1 + eps_prev * eps_prev), gamma * eps_prev);
  const ld delta_i = ld(p.delta0) / (2 * static_cast<ld>(i) * static_cast<ld>(i));
  const ld raw = (ld(p.chernoff_c) / ((delta * beta) * (delta * beta))) *
                 std::log(static_cast<ld>(p.dimension) / delta_i);
  const ld size = std::ceil(raw);
  if (!(size < 0x1.0p63L)) {
    throw std::overflow_error(
        fmt::format("theoretical block {} size {:.3e} overflows", i, static_cast<double>(raw)));
  }
  return std::max<std::uint64_t>(1, static_cast<std::uint64_t>(size));
}

std::uint64_t bpca_block_from_corpus(std::uint64_t corpus_size, std::size_t dimension,
                                     double multiplier, std::optional<double> log_base) {
  if (corpus_size < 1) throw std::invalid_argument("bpca block: corpus size must be >= 1");
  if (dimension < 2) throw std::invalid_argument("bpca block: dimension must be >= 2");
  if (!(multiplier > 0.0)) throw std::invalid_argument("bpca block: L must be positive");
  double log_d = std::log(static_cast<double>(dimension));
  if (log_base) {
    if (!(*log_base > 0.0) || *log_base == 1.0) {
      throw std::invalid_argument("bpca block: log base must be positive and != 1");
    }
    log_d /= std::log(*log_base);
  }
  const double blocks = std::floor(multiplier * log_d);
  if (blocks < 1.0) {
    throw std::invalid_argument(
        fmt::format("bpca block: floor(L * log d) = 0 for L={} d={}", multiplier, dimension));
  }
  const std::uint64_t count = static_cast<std::uint64_t>(blocks);
  const std::uint64_t block = corpus_size / count;
  if (block < 1) {
    throw std::invalid_argument(
        fmt::format("bpca block: {} blocks exceed corpus size {}", count, corpus_size));
  }
  return block;
}

std::uint64_t dbpca_next_block_size(std::uint64_t size, double gamma_sq) {
  if (!(gamma_sq > 0.0 && gamma_sq < 1.0)) {
    throw std::invalid_argument("dbpca: gamma_sq must lie in (0, 1)");
  }
  const double q = static_cast<double>(size) / gamma_sq;
  const double nearest = std::round(q);
  const double ulps = 8.0 * std::numeric_limits<double>::epsilon() * q;
  const double next = std::abs(q - nearest) <= ulps ? nearest : std::ceil(q);
  if (!(next < 0x1.0p63)) throw std::overflow_error("dbpca: block size overflows");
  return static_cast<std::uint64_t>(next);
}

EstimatorConfig EstimatorConfig::spca(std::size_t k, double c, double n0) {
  EstimatorConfig cfg;
  cfg.algorithm = Algorithm::spca;
  cfg.k = k;
  cfg.spca_c = c;
  cfg.spca_n0 = n0;
  return cfg;
}

EstimatorConfig EstimatorConfig::alecton(std::size_t k, double rate) {
  EstimatorConfig cfg;
  cfg.algorithm = Algorithm::alecton;
  cfg.k = k;
  cfg.alecton_rate = rate;
  return cfg;
}

EstimatorConfig EstimatorConfig::dbpca(std::size_t k, double gamma_sq, std::uint64_t initial_block) {
  EstimatorConfig cfg;
  cfg.algorithm = Algorithm::dbpca;
  cfg.k = k;
  cfg.dbpca_gamma_sq = gamma_sq;
  cfg.dbpca_initial_block = initial_block;
  return cfg;
}

EstimatorConfig EstimatorConfig::bpca(std::size_t k, std::uint64_t block) {
  EstimatorConfig cfg;
  cfg.algorithm = Algorithm::bpca;
  cfg.k = k;
  cfg.bpca_block = block;
  return cfg;
}

void validate(const EstimatorConfig& config) {
  if (config.k < 1) throw std::invalid_argument("estimator: k must be >= 1");
  switch (config.algorithm) {
    case Algorithm::spca:
      if (!(config.spca_c > 0.0) || !std::isfinite(config.spca_c)) {
        throw std::invalid_argument("estimator: spca c must be positive");
      }
      if (!(config.spca_n0 >= 0.0) || !std::isfinite(config.spca_n0)) {
        throw std::invalid_argument("estimator: spca n0 must be >= 0");
      }
      break;
    case Algorithm::alecton:
      // a zero rate is allowed and freezes the basis
      if (!(config.alecton_rate >= 0.0) || !std::isfinite(config.alecton_rate)) {
        throw std::invalid_argument("estimator: alecton rate must be >= 0");
      }
      break;
    case Algorithm::dbpca:
      if (config.dbpca_schedule) {
        (void)schedule_terms(1, *config.dbpca_schedule);
      } else if (!(config.dbpca_gamma_sq > 0.0 && config.dbpca_gamma_sq < 1.0)) {
        throw std::invalid_argument("estimator: dbpca gamma_sq must lie in (0, 1)");
      }
      break;
    case Algorithm::bpca:
      if (config.bpca_block < 1) throw std::invalid_argument("estimator: bpca block must be >= 1");
      break;
  }
}

DegenerateBlockError::DegenerateBlockError(std::uint64_t block_index,
                                           const RankDeficientError& cause)
    : std::runtime_error(fmt::format("degenerate block {}: {}", block_index, cause.what())),
      block_index_(block_index) {}

namespace {

DenseMatrix initial_basis(const EstimatorConfig& config, std::size_t dimension) {
  if (dimension < config.k) {
    throw std::invalid_argument(
        fmt::format("estimator: dimension {} is smaller than k = {}", dimension, config.k));
  }
  Rng rng(config.init_seed);
  return qr_decompose(gaussian_matrix(dimension, config.k, rng)).q;
}

bool is_block_method(Algorithm a) { return a == Algorithm::dbpca || a == Algorithm::bpca; }

}  // namespace

StreamingEstimator::StreamingEstimator(const EstimatorConfig& config, std::size_t dimension)
    : StreamingEstimator(config, (validate(config), initial_basis(config, dimension))) {}

StreamingEstimator::StreamingEstimator(const EstimatorConfig& config, DenseMatrix initial)
    : config_(config), basis_(std::move(initial)) {
  validate(config_);
  const std::size_t d = basis_.rows();
  const std::size_t k = config_.k;
  if (basis_.cols() != k || d < k) {
    throw std::invalid_argument(fmt::format("estimator: initial basis is {}x{}, expected d x {}",
                                            basis_.rows(), basis_.cols(), k));
  }
  if (orthonormality_defect(basis_) > 1e-8) {
    throw std::invalid_argument("estimator: initial basis is not orthonormal");
  }
  scratch_ = DenseMatrix(d, k);
  r_ = DenseMatrix(k, k);
  ws_.reserve(k);
  weights_.assign(k, 0.0);
  if (is_block_method(config_.algorithm)) {
    block_index_ = 1;
    block_size_ = block_size_for(1);
  }
}

std::uint64_t StreamingEstimator::block_size_for(std::uint64_t index) const {
  if (config_.algorithm == Algorithm::bpca) return config_.bpca_block;
  if (config_.dbpca_schedule) return theoretical_block_size(index, *config_.dbpca_schedule);
  if (index == 1) {
    return config_.dbpca_initial_block > 0 ? config_.dbpca_initial_block : 2 * config_.k;
  }
  return dbpca_next_block_size(block_size_, config_.dbpca_gamma_sq);
}

std::size_t StreamingEstimator::footprint_doubles() const noexcept {
  return basis_.data().size() + scratch_.data().size() + r_.data().size() + ws_.tau.size() +
         ws_.column_norms.size() + weights_.size();
}

void StreamingEstimator::project(const PointView& x) {
  const std::size_t k = config_.k;
  for (std::size_t j = 0; j < k; ++j) {
    auto q = basis_.col(j);
    double s = 0.0;
    if (x.sparse) {
      for (std::size_t t = 0; t < x.indices.size(); ++t) s += x.values[t] * q[x.indices[t]];
    } else {
      for (std::size_t i = 0; i < x.values.size(); ++i) s += x.values[i] * q[i];
    }
    weights_[j] = s;
  }
}

void StreamingEstimator::add_outer(const PointView& x, double scale, DenseMatrix& target) const {
  for (std::size_t j = 0; j < config_.k; ++j) {
    const double w = scale * weights_[j];
    if (w == 0.0) continue;
    auto t = target.col(j);
    if (x.sparse) {
      for (std::size_t s = 0; s < x.indices.size(); ++s) t[x.indices[s]] += w * x.values[s];
    } else {
      for (std::size_t i = 0; i < x.values.size(); ++i) t[i] += w * x.values[i];
    }
  }
}

void StreamingEstimator::sgd_step(const PointView& x, double rate) {
  last_rate_ = rate;
  project(x);
  // S = Q exactly; QR would only add rounding
  if (rate == 0.0 || std::all_of(weights_.begin(), weights_.end(), [](double w) { return w == 0.0; })) {
    return;
  }
  std::copy(basis_.data().begin(), basis_.data().end(), scratch_.data().begin());
  add_outer(x, rate, scratch_);
  qr_in_place(scratch_, basis_, r_, ws_);
}

void StreamingEstimator::block_step(const PointView& x) {
  if (block_fill_ == 0) scratch_.set_zero();
  project(x);
  add_outer(x, 1.0 / static_cast<double>(block_size_), scratch_);
  if (++block_fill_ < block_size_) return;

  try {
    qr_in_place(scratch_, basis_, r_, ws_);
  } catch (const RankDeficientError& e) {
    throw DegenerateBlockError(block_index_, e);
  }
  block_fill_ = 0;
  const std::uint64_t next = block_size_for(block_index_ + 1);
  ++block_index_;
  block_size_ = next;
}

void StreamingEstimator::update(const PointView& x) {
  if (x.dimension != basis_.rows()) {
    throw std::invalid_argument(fmt::format("estimator: point dimension {} != {}", x.dimension,
                                            basis_.rows()));
  }
  ++samples_;
  switch (config_.algorithm) {
    case Algorithm::spca:
      sgd_step(x, config_.spca_c / (config_.spca_n0 + static_cast<double>(samples_)));
      break;
    case Algorithm::alecton:
      sgd_step(x, config_.alecton_rate);
      break;
    case Algorithm::dbpca:
    case Algorithm::bpca:
      block_step(x);
      break;
  }
}

void StreamingEstimator::update(std::span<const double> dense_point) {
  update(PointView{dense_point.size(), dense_point, {}, false});
}

}  // namespace streampca
