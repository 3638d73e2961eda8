#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "streampca/linalg.hpp"
#include "streampca/random.hpp"

namespace streampca {

/// Non-owning view of one data point, either dense or sparse.
/// For sparse points `indices` is strictly increasing and aligned with `values`.
struct PointView {
  std::size_t dimension = 0;
  std::span<const double> values;
  std::span<const std::uint32_t> indices;
  bool sparse = false;

  double squared_norm() const noexcept;
};

/// Covariance V diag(eigenvalues) V^T with a bounded-norm sampler.
struct SyntheticSpec {
  std::size_t dimension = 0;
  std::vector<double> eigenvalues;
  /// Seed of the random orthogonal basis V; nullopt means V = I.
  std::optional<std::uint64_t> rotation_seed;
};

/// Throws std::invalid_argument unless eigenvalues are nonincreasing, lie in
/// (0, 1], number `dimension`, and sum to at most 1.
void validate(const SyntheticSpec& spec);

/// Per-direction split lambda_i = probability_i * radius_i^2.
struct SamplerDecomposition {
  std::vector<double> probabilities;
  std::vector<double> radii;
};

/// Default split: p_i = lambda_i / sum(lambda), r_i = sqrt(sum(lambda)).
SamplerDecomposition default_decomposition(const SyntheticSpec& spec);

/// Draws x = s * r_i * v_i with direction i chosen with probability p_i and a
/// fair random sign s. E[x x^T] = V diag(lambda) V^T and |x| = r_i <= 1.
class SyntheticSampler {
 public:
  explicit SyntheticSampler(SyntheticSpec spec);
  SyntheticSampler(SyntheticSpec spec, SamplerDecomposition decomposition);

  const SyntheticSpec& spec() const noexcept { return spec_; }
  const SamplerDecomposition& decomposition() const noexcept { return decomposition_; }
  std::size_t dimension() const noexcept { return spec_.dimension; }
  /// Orthogonal d x d basis V; column i has variance eigenvalues[i].
  const DenseMatrix& basis() const noexcept { return basis_; }

  /// Writes one draw into `out` (size d). Consumes two integers from `rng`.
  void sample(Rng& rng, std::span<double> out) const;
  std::vector<double> sample(Rng& rng) const;

  /// Exact A * Q for the model covariance A, without forming A.
  DenseMatrix covariance_times(const DenseMatrix& q) const;

 private:
  SyntheticSpec spec_;
  SamplerDecomposition decomposition_;
  std::vector<double> cumulative_;
  std::vector<double> emit_radii_;
  DenseMatrix basis_;
};

/// Sparse corpus in CSR layout with values normalized into [0, 1].
class Dataset {
 public:
  Dataset(std::size_t dimension, std::vector<std::size_t> offsets,
          std::vector<std::uint32_t> indices, std::vector<double> values);

  std::size_t size() const noexcept { return offsets_.size() - 1; }
  std::size_t dimension() const noexcept { return dimension_; }
  std::size_t nonzeros() const noexcept { return values_.size(); }
  bool empty() const noexcept { return size() == 0; }

  PointView point(std::size_t i) const noexcept;

 private:
  std::size_t dimension_;
  std::vector<std::size_t> offsets_;
  std::vector<std::uint32_t> indices_;
  std::vector<double> values_;
};

/// Parse failure with the 1-based line it refers to (0 when not line-specific).
class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& what);
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// How loaded counts were normalized; recorded in run manifests.
inline constexpr const char* kBagOfWordsNormalization =
    "per-feature division by corpus-wide max count, then per-point scaling by 1/max(1, |x|)";

/// Reads the UCI bag-of-words format: lines D, W, NNZ, then NNZ lines
/// "docID wordID count" with 1-based ids. Repeated (doc, word) pairs are summed.
/// Counts are divided by the corpus-wide maximum of their feature, then each
/// point is scaled by 1 / max(1, |x|). Documents without words stay zero.
Dataset parse_bag_of_words(std::istream& in);
Dataset load_bag_of_words(const std::filesystem::path& path);

/// Either a synthetic model or a loaded dataset.
struct StreamBacking {
  std::shared_ptr<const SyntheticSampler> synthetic;
  std::shared_ptr<const Dataset> dataset;

  std::size_t dimension() const;
};

/// Single-consumer point source. Synthetic backings stream i.i.d. draws;
/// dataset backings stream a fresh uniform permutation per pass. The sequence
/// is fixed by (backing, order_seed).
class StreamSource {
 public:
  StreamSource(StreamBacking backing, std::uint64_t order_seed);

  /// The returned view is valid until the next call.
  PointView next();

  std::size_t dimension() const noexcept { return dimension_; }
  std::uint64_t position() const noexcept { return position_; }
  std::uint64_t passes_started() const noexcept { return passes_; }

 private:
  void reshuffle();

  StreamBacking backing_;
  Rng rng_;
  std::size_t dimension_;
  std::uint64_t position_ = 0;
  std::uint64_t passes_ = 0;
  std::vector<double> buffer_;
  std::vector<std::uint32_t> order_;
  std::size_t cursor_ = 0;
};

inline StreamSource make_stream(StreamBacking backing, std::uint64_t order_seed) {
  return StreamSource(std::move(backing), order_seed);
}

}  // namespace streampca
