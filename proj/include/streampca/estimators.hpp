#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string_view>

#include "streampca/linalg.hpp"
#include "streampca/streams.hpp"

namespace streampca {

enum class Algorithm { spca, alecton, dbpca, bpca };

std::string_view to_string(Algorithm a) noexcept;
/// Accepts "spca", "alecton", "dbpca", "bpca".
std::optional<Algorithm> parse_algorithm(std::string_view name) noexcept;

/// Inputs of the closed-form DBPCA block schedule, for users who know the
/// eigenvalues lambda_k > lambda_{k+1}.
struct ScheduleParams {
  double lambda_k = 0.0;
  double lambda_k1 = 0.0;
  double delta0 = 0.1;
  std::size_t dimension = 0;
  std::size_t k = 0;
  double chernoff_c = 1.0;
  double cbar = 1.0;
};

/// Derived quantities of the closed-form schedule for block i >= 1.
struct ScheduleTerms {
  double lambda_tilde;
  double gamma;
  double delta;  // (lambda - lambda_tilde) / 4
  double eps0;
  double beta;
  double delta_i;
};

ScheduleTerms schedule_terms(std::size_t i, const ScheduleParams& p);

/// ceil((c / (delta * beta_i)^2) * ln(d / delta_i)). Throws std::invalid_argument
/// for invalid parameters and std::overflow_error past 2^63.
std::uint64_t theoretical_block_size(std::size_t i, const ScheduleParams& p);

/// floor(N / floor(L * log(d))); natural log unless `log_base` is given.
std::uint64_t bpca_block_from_corpus(std::uint64_t corpus_size, std::size_t dimension,
                                     double multiplier, std::optional<double> log_base = {});

/// ceil(size / gamma_sq), snapping quotients within a few ulps of an integer.
std::uint64_t dbpca_next_block_size(std::uint64_t size, double gamma_sq);

/// Algorithm choice plus the parameters that algorithm reads.
struct EstimatorConfig {
  Algorithm algorithm = Algorithm::spca;
  std::size_t k = 1;
  double spca_c = 0.0;
  double spca_n0 = 0.0;
  double alecton_rate = 0.0;
  double dbpca_gamma_sq = 0.0;
  /// 0 selects the default of 2k.
  std::uint64_t dbpca_initial_block = 0;
  /// When set, DBPCA block i has theoretical_block_size(i, *schedule) points.
  std::optional<ScheduleParams> dbpca_schedule;
  std::uint64_t bpca_block = 0;
  std::uint64_t init_seed = 0;

  static EstimatorConfig spca(std::size_t k, double c, double n0 = 0.0);
  static EstimatorConfig alecton(std::size_t k, double rate);
  static EstimatorConfig dbpca(std::size_t k, double gamma_sq, std::uint64_t initial_block = 0);
  static EstimatorConfig bpca(std::size_t k, std::uint64_t block);
};

/// Throws std::invalid_argument naming the offending field.
void validate(const EstimatorConfig& config);

/// A block accumulated to a rank-deficient matrix.
class DegenerateBlockError : public std::runtime_error {
 public:
  DegenerateBlockError(std::uint64_t block_index, const RankDeficientError& cause);
  std::uint64_t block_index() const noexcept { return block_index_; }

 private:
  std::uint64_t block_index_;
};

/// One streaming PCA estimator with O(kd) state.
///
/// SPCA and Alecton apply Q <- QR(Q + rate * x (x^T Q)) per point, with
/// rate = c / (n0 + n) for SPCA and a constant for Alecton. DBPCA and BPCA
/// accumulate S += x (x^T Q) / |block| and replace Q by the Q factor of S when
/// the block fills; between block ends the previous basis is reported.
///
/// State is the basis Q plus one d x k scratch/accumulator and O(k^2)
/// workspace. Updates do not allocate.
class StreamingEstimator {
 public:
  /// Q_0 is the Q factor of a Gaussian d x k matrix seeded by config.init_seed.
  StreamingEstimator(const EstimatorConfig& config, std::size_t dimension);
  /// Starts from a caller-provided orthonormal basis instead.
  StreamingEstimator(const EstimatorConfig& config, DenseMatrix initial_basis);

  void update(const PointView& x);
  void update(std::span<const double> dense_point);

  const DenseMatrix& current_basis() const noexcept { return basis_; }
  const EstimatorConfig& config() const noexcept { return config_; }
  std::size_t dimension() const noexcept { return basis_.rows(); }

  std::uint64_t samples_seen() const noexcept { return samples_; }
  /// Index of the block being filled (1-based); 0 for SPCA/Alecton.
  std::uint64_t block_index() const noexcept { return block_index_; }
  std::uint64_t block_fill() const noexcept { return block_fill_; }
  std::uint64_t current_block_size() const noexcept { return block_size_; }
  /// Step size used by the most recent SPCA/Alecton update.
  double last_rate() const noexcept { return last_rate_; }

  /// Doubles held by the estimator, for footprint checks.
  std::size_t footprint_doubles() const noexcept;

 private:
  void project(const PointView& x);  // weights_ = x^T Q
  void add_outer(const PointView& x, double scale, DenseMatrix& target) const;
  void sgd_step(const PointView& x, double rate);
  void block_step(const PointView& x);
  std::uint64_t block_size_for(std::uint64_t index) const;

  EstimatorConfig config_;
  DenseMatrix basis_;
  DenseMatrix scratch_;
  DenseMatrix r_;
  QrWorkspace ws_;
  std::vector<double> weights_;
  std::uint64_t samples_ = 0;
  std::uint64_t block_index_ = 0;
  std::uint64_t block_fill_ = 0;
  std::uint64_t block_size_ = 0;
  double last_rate_ = 0.0;
};

}  // namespace streampca
