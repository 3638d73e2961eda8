#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "streampca/linalg.hpp"
#include "streampca/streams.hpp"

namespace streampca {

/// Where a ground-truth basis came from.
struct Provenance {
  enum class Kind { analytic, oracle };
  Kind kind = Kind::analytic;
  std::size_t iterations = 0;  // oracle iterations actually run
  std::uint64_t seed = 0;
  bool converged = true;
  std::string warning;
};

/// Ground-truth top-k subspace of a covariance.
struct ReferenceSubspace {
  DenseMatrix basis;                 // d x k, orthonormal columns
  std::vector<double> eigenvalues;   // top k, descending
  Provenance provenance;

  std::size_t dimension() const noexcept { return basis.rows(); }
  std::size_t rank() const noexcept { return basis.cols(); }
};

/// sin^2 of the largest principal angle is reported as infinite tangent.
class InfiniteAngleError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Rounding slack tolerated below 0 (or above 1) before an error is a bug.
inline constexpr double kClampSlack = 1e-12;

/// sin^2 of the k-th principal angle, 1 - sigma_min(U^T Q)^2, in [0, 1].
double spectral_error(const DenseMatrix& u, const DenseMatrix& q);
double spectral_error(const ReferenceSubspace& ref, const DenseMatrix& q);

/// |U_perp^T Q|^2 as the top eigenvalue of Q^T Q - (U^T Q)^T (U^T Q).
/// Never forms U_perp; equals spectral_error for orthonormal inputs.
double residual_error(const DenseMatrix& u, const DenseMatrix& q);
double residual_error(const ReferenceSubspace& ref, const DenseMatrix& q);

/// sin / cos of the k-th principal angle. Throws InfiniteAngleError when the
/// subspaces have an orthogonal direction.
double tan_error(const ReferenceSubspace& ref, const DenseMatrix& q);

/// Returns A * Q for some symmetric PSD A.
using CovarianceAction = std::function<DenseMatrix(const DenseMatrix&)>;

/// (1/N) sum_n x_n (x_n^T Q) over the dataset. Points are split into
/// `shards` fixed contiguous ranges whose partial sums are merged in shard
/// order, so the result does not depend on `threads`.
CovarianceAction sample_covariance_action(std::shared_ptr<const Dataset> data,
                                          std::size_t shards = 8, unsigned threads = 1);
/// Same for dense samples stored one per column of `samples`.
CovarianceAction sample_covariance_action(std::shared_ptr<const DenseMatrix> samples);

struct OracleOptions {
  std::size_t iterations = 300;
  std::uint64_t seed = 0;
  /// Stop once spectral_error(U_t, U_{t+1}) drops below this.
  double tolerance = 1e-12;
};

/// Orthogonal iteration U <- QR(A U) from a seeded Gaussian start, with
/// Rayleigh-quotient eigenvalue estimates. Runs until the tolerance is met or
/// the iteration budget is spent; the latter is reported in the provenance
/// (typically a missing eigengap), not thrown.
ReferenceSubspace reference_oracle(const CovarianceAction& apply, std::size_t dimension,
                                   std::size_t k, const OracleOptions& options);

/// Exact top-k basis of a synthetic model. Requires lambda_k > lambda_{k+1}.
ReferenceSubspace analytic_reference(const SyntheticSampler& model, std::size_t k);

}  // namespace streampca
