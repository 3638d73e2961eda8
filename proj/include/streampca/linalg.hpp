#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace streampca {

/// Column-major dense matrix of doubles.
///
/// Holds the d x k estimates and the small k x k products used by the
/// estimators and metrics. Storage is contiguous, column j occupies
/// data()[j * rows(), (j + 1) * rows()).
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> column_major);

  /// Builds from nested rows, handy in tests: {{1, 2}, {3, 4}}.
  static DenseMatrix from_rows(const std::vector<std::vector<double>>& rows);
  static DenseMatrix identity(std::size_t rows, std::size_t cols);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t i, std::size_t j) noexcept { return data_[j * rows_ + i]; }
  double operator()(std::size_t i, std::size_t j) const noexcept { return data_[j * rows_ + i]; }

  std::span<double> col(std::size_t j) noexcept { return {data_.data() + j * rows_, rows_}; }
  std::span<const double> col(std::size_t j) const noexcept {
    return {data_.data() + j * rows_, rows_};
  }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

  void set_zero() noexcept;
  DenseMatrix transposed() const;

  friend bool operator==(const DenseMatrix&, const DenseMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Raised when a QR factorization meets a numerically dependent column.
class RankDeficientError : public std::runtime_error {
 public:
  RankDeficientError(std::size_t column, double diagonal, double column_norm);
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t column_;
};

/// |R(j,j)| below this fraction of the j-th input column norm is rank deficient.
inline constexpr double kRankTolerance = 1e-12;

struct QrResult {
  DenseMatrix q;
  DenseMatrix r;
};

/// Householder QR of a tall matrix (rows >= cols).
///
/// Q has orthonormal columns and R is upper triangular with a nonnegative
/// diagonal, which makes the factorization unique for full-rank input.
/// Throws RankDeficientError naming the first dependent column.
QrResult qr_decompose(const DenseMatrix& m);

/// Scratch for qr_in_place so repeated factorizations do not allocate.
struct QrWorkspace {
  std::vector<double> tau;
  std::vector<double> column_norms;
  void reserve(std::size_t cols);
};

/// Factorizes `a` in place (it is overwritten with the reflectors) and writes
/// the thin Q into `q` and R into `r`. `q` and `r` must already have the right
/// shapes. On RankDeficientError `q` and `r` are left untouched.
void qr_in_place(DenseMatrix& a, DenseMatrix& q, DenseMatrix& r, QrWorkspace& ws);

/// All min(rows, cols) singular values in descending order.
/// One-sided Jacobi sweeps over the columns of M (or of M^T when M is wide),
/// which diagonalizes M^T M implicitly. Meant for min(rows, cols) <= 64.
std::vector<double> singular_values_small(const DenseMatrix& m);
double smallest_singular_value(const DenseMatrix& m);

/// Eigenvalues of a small symmetric matrix, descending (cyclic Jacobi).
std::vector<double> symmetric_eigenvalues_small(const DenseMatrix& m);

/// A^T * B.
DenseMatrix transpose_multiply(const DenseMatrix& a, const DenseMatrix& b);
/// A * B.
DenseMatrix multiply(const DenseMatrix& a, const DenseMatrix& b);

/// max_ij |Q^T Q - I|
double orthonormality_defect(const DenseMatrix& q);
double max_abs(const DenseMatrix& m);
double max_abs_difference(const DenseMatrix& a, const DenseMatrix& b);

}  // namespace streampca
