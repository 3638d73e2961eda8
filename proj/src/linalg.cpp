#include "streampca/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include <fmt/format.h>

namespace streampca {

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> column_major)
    : rows_(rows), cols_(cols), data_(std::move(column_major)) {
  if (data_.size() != rows * cols) {
    throw std::invalid_argument(
        fmt::format("DenseMatrix: {} values for a {}x{} matrix", data_.size(), rows, cols));
  }
}

DenseMatrix DenseMatrix::from_rows(const std::vector<std::vector<double>>& rows) {
  const std::size_t m = rows.size();
  const std::size_t n = m == 0 ? 0 : rows.front().size();
  DenseMatrix out(m, n);
  for (std::size_t i = 0; i < m; ++i) {
    if (rows[i].size() != n) throw std::invalid_argument("DenseMatrix::from_rows: ragged rows");
    for (std::size_t j = 0; j < n; ++j) out(i, j) = rows[i][j];
  }
  return out;
}

DenseMatrix DenseMatrix::identity(std::size_t rows, std::size_t cols) {
  DenseMatrix out(rows, cols);
  for (std::size_t j = 0; j < std::min(rows, cols); ++j) out(j, j) = 1.0;
  return out;
}

void DenseMatrix::set_zero() noexcept { std::fill(data_.begin(), data_.end(), 0.0); }

DenseMatrix DenseMatrix::transposed() const {
  DenseMatrix out(cols_, rows_);
  for (std::size_t j = 0; j < cols_; ++j)
    for (std::size_t i = 0; i < rows_; ++i) out(j, i) = (*this)(i, j);
  return out;
}

RankDeficientError::RankDeficientError(std::size_t column, double diagonal, double column_norm)
    : std::runtime_error(fmt::format(
          "rank-deficient matrix: column {} has residual norm {:.3e} (column norm {:.3e})", column,
          diagonal, column_norm)),
      column_(column) {}

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(std::span<const double> a) {
  // scaled accumulation avoids overflow for huge entries
  double scale = 0.0;
  double ssq = 1.0;
  for (double v : a) {
    if (v == 0.0) continue;
    const double av = std::abs(v);
    if (scale < av) {
      ssq = 1.0 + ssq * (scale / av) * (scale / av);
      scale = av;
    } else {
      ssq += (av / scale) * (av / scale);
    }
  }
  return scale * std::sqrt(ssq);
}

}  // namespace

void QrWorkspace::reserve(std::size_t cols) {
  tau.resize(cols);
  column_norms.resize(cols);
}

void qr_in_place(DenseMatrix& a, DenseMatrix& q, DenseMatrix& r, QrWorkspace& ws) {
  const std::size_t m = a.rows();
  const std::size_t n = a.cols();
  if (n == 0 || m < n) {
    throw std::invalid_argument(fmt::format("qr: expected rows >= cols >= 1, got {}x{}", m, n));
  }
  if (q.rows() != m || q.cols() != n || r.rows() != n || r.cols() != n) {
    throw std::invalid_argument("qr: output shapes do not match input");
  }
  ws.reserve(n);
  for (std::size_t j = 0; j < n; ++j) ws.column_norms[j] = norm2(a.col(j));

  // Factorization phase. Reflector j is H = I - tau v v^T with v(0) = 1,
  // stored below the diagonal of column j; R lives on and above the diagonal.
  for (std::size_t j = 0; j < n; ++j) {
    auto x = a.col(j).subspan(j);
    const double alpha = norm2(x);
    const double colnorm = ws.column_norms[j];
    if (colnorm == 0.0 || alpha < kRankTolerance * colnorm) {
      throw RankDeficientError(j, alpha, colnorm);
    }
    const double x0 = x[0];
    const double beta = x0 >= 0.0 ? -alpha : alpha;
    const double tau = (beta - x0) / beta;
    const double scale = 1.0 / (x0 - beta);
    for (std::size_t i = 1; i < x.size(); ++i) x[i] *= scale;
    x[0] = beta;
    ws.tau[j] = tau;

    for (std::size_t c = j + 1; c < n; ++c) {
      auto y = a.col(c).subspan(j);
      double w = y[0];
      for (std::size_t i = 1; i < y.size(); ++i) w += x[i] * y[i];
      w *= tau;
      y[0] -= w;
      for (std::size_t i = 1; i < y.size(); ++i) y[i] -= w * x[i];
    }
  }

  // Accumulate thin Q = H_0 ... H_{n-1} [I; 0] backwards.
  q.set_zero();
  for (std::size_t j = 0; j < n; ++j) q(j, j) = 1.0;
  for (std::size_t jj = n; jj-- > 0;) {
    auto v = a.col(jj).subspan(jj);
    const double tau = ws.tau[jj];
    for (std::size_t c = jj; c < n; ++c) {
      auto y = q.col(c).subspan(jj);
      double w = y[0];
      for (std::size_t i = 1; i < y.size(); ++i) w += v[i] * y[i];
      w *= tau;
      y[0] -= w;
      for (std::size_t i = 1; i < y.size(); ++i) y[i] -= w * v[i];
    }
  }

  r.set_zero();
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t i = 0; i <= j; ++i) r(i, j) = a(i, j);

  // Nonnegative diagonal: flip row i of R together with column i of Q.
  for (std::size_t i = 0; i < n; ++i) {
    if (r(i, i) < 0.0) {
      for (std::size_t j = i; j < n; ++j) r(i, j) = -r(i, j);
      for (double& v : q.col(i)) v = -v;
    }
  }
}

QrResult qr_decompose(const DenseMatrix& m) {
  DenseMatrix work = m;
  QrResult out{DenseMatrix(m.rows(), m.cols()), DenseMatrix(m.cols(), m.cols())};
  QrWorkspace ws;
  qr_in_place(work, out.q, out.r, ws);
  return out;
}

std::vector<double> singular_values_small(const DenseMatrix& m) {
  if (m.rows() == 0 || m.cols() == 0) {
    throw std::invalid_argument("singular_values_small: empty matrix");
  }
  DenseMatrix a = m.rows() >= m.cols() ? m : m.transposed();
  const std::size_t n = a.cols();
  if (n > 64) {
    throw std::invalid_argument(
        fmt::format("singular_values_small: min dimension {} exceeds 64", n));
  }

  constexpr double eps = 2.220446049250313e-16;
  constexpr int kMaxSweeps = 80;
  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    bool rotated = false;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        auto ap = a.col(p);
        auto aq = a.col(q);
        const double alpha = dot(ap, ap);
        const double beta = dot(aq, aq);
        const double gamma = dot(ap, aq);
        if (gamma == 0.0 || std::abs(gamma) <= eps * std::sqrt(alpha * beta)) continue;
        rotated = true;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::hypot(1.0, zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (std::size_t i = 0; i < ap.size(); ++i) {
          const double u = ap[i];
          const double w = aq[i];
          ap[i] = c * u - s * w;
          aq[i] = s * u + c * w;
        }
      }
    }
    if (!rotated) break;
  }

  std::vector<double> sv(n);
  for (std::size_t j = 0; j < n; ++j) sv[j] = norm2(a.col(j));
  std::sort(sv.begin(), sv.end(), std::greater<>());
  return sv;
}

double smallest_singular_value(const DenseMatrix& m) { return singular_values_small(m).back(); }

std::vector<double> symmetric_eigenvalues_small(const DenseMatrix& m) {
  const std::size_t n = m.rows();
  if (n == 0 || m.cols() != n) {
    throw std::invalid_argument("symmetric_eigenvalues_small: expected a nonempty square matrix");
  }
  DenseMatrix a = m;
  // symmetrize against rounding in callers
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) a(i, j) = a(j, i) = 0.5 * (a(i, j) + a(j, i));

  constexpr int kMaxSweeps = 80;
  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    double off = 0.0;
    double diag = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      diag += a(i, i) * a(i, i);
      for (std::size_t j = i + 1; j < n; ++j) off += a(i, j) * a(i, j);
    }
    if (off == 0.0 || off <= 1e-32 * diag) break;

    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = std::copysign(1.0, theta) / (std::abs(theta) + std::hypot(1.0, theta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        a(p, q) = a(q, p) = 0.0;
      }
    }
  }

  std::vector<double> ev(n);
  for (std::size_t i = 0; i < n; ++i) ev[i] = a(i, i);
  std::sort(ev.begin(), ev.end(), std::greater<>());
  return ev;
}

DenseMatrix transpose_multiply(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.rows() != b.rows()) {
    throw std::invalid_argument(fmt::format("transpose_multiply: {}x{} vs {}x{}", a.rows(),
                                            a.cols(), b.rows(), b.cols()));
  }
  DenseMatrix out(a.cols(), b.cols());
  for (std::size_t j = 0; j < b.cols(); ++j)
    for (std::size_t i = 0; i < a.cols(); ++i) out(i, j) = dot(a.col(i), b.col(j));
  return out;
}

DenseMatrix multiply(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols() != b.rows()) {
    throw std::invalid_argument(
        fmt::format("multiply: {}x{} vs {}x{}", a.rows(), a.cols(), b.rows(), b.cols()));
  }
  DenseMatrix out(a.rows(), b.cols());
  for (std::size_t j = 0; j < b.cols(); ++j) {
    auto oj = out.col(j);
    for (std::size_t l = 0; l < a.cols(); ++l) {
      const double blj = b(l, j);
      if (blj == 0.0) continue;
      auto al = a.col(l);
      for (std::size_t i = 0; i < a.rows(); ++i) oj[i] += al[i] * blj;
    }
  }
  return out;
}

double orthonormality_defect(const DenseMatrix& q) {
  double worst = 0.0;
  for (std::size_t i = 0; i < q.cols(); ++i) {
    for (std::size_t j = i; j < q.cols(); ++j) {
      const double target = i == j ? 1.0 : 0.0;
      worst = std::max(worst, std::abs(dot(q.col(i), q.col(j)) - target));
    }
  }
  return worst;
}

double max_abs(const DenseMatrix& m) {
  double worst = 0.0;
  for (double v : m.data()) worst = std::max(worst, std::abs(v));
  return worst;
}

double max_abs_difference(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw std::invalid_argument("max_abs_difference: shape mismatch");
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < a.data().size(); ++i)
    worst = std::max(worst, std::abs(a.data()[i] - b.data()[i]));
  return worst;
}

}  // namespace streampca
