#include "streampca/metrics.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

#include <fmt/format.h>

#include "streampca/random.hpp"

namespace streampca {

namespace {

void check_shapes(const DenseMatrix& u, const DenseMatrix& q) {
  if (u.rows() != q.rows() || u.cols() != q.cols() || u.cols() == 0) {
    throw std::invalid_argument(fmt::format("subspace dimensions differ: U is {}x{}, Q is {}x{}",
                                            u.rows(), u.cols(), q.rows(), q.cols()));
  }
}

double clamp_unit(double value, const char* what) {
  if (value < -kClampSlack || value > 1.0 + kClampSlack || std::isnan(value)) {
    throw std::logic_error(fmt::format("{} = {} is outside [0, 1] beyond rounding", what, value));
  }
  return std::clamp(value, 0.0, 1.0);
}

}  // namespace

double spectral_error(const DenseMatrix& u, const DenseMatrix& q) {
  check_shapes(u, q);
  const double cos_k = smallest_singular_value(transpose_multiply(u, q));
  return clamp_unit(1.0 - cos_k * cos_k, "spectral error");
}

double spectral_error(const ReferenceSubspace& ref, const DenseMatrix& q) {
  return spectral_error(ref.basis, q);
}

double residual_error(const DenseMatrix& u, const DenseMatrix& q) {
  check_shapes(u, q);
  const DenseMatrix w = transpose_multiply(u, q);
  DenseMatrix m = transpose_multiply(q, q);
  const DenseMatrix ww = transpose_multiply(w, w);
  for (std::size_t i = 0; i < m.data().size(); ++i) m.data()[i] -= ww.data()[i];
  return clamp_unit(symmetric_eigenvalues_small(m).front(), "residual error");
}

double residual_error(const ReferenceSubspace& ref, const DenseMatrix& q) {
  return residual_error(ref.basis, q);
}

double tan_error(const ReferenceSubspace& ref, const DenseMatrix& q) {
  const double phi = spectral_error(ref, q);
  if (phi >= 1.0) {
    throw InfiniteAngleError("tan error: estimate has a direction orthogonal to the reference");
  }
  return std::sqrt(phi) / std::sqrt(1.0 - phi);
}

CovarianceAction sample_covariance_action(std::shared_ptr<const Dataset> data, std::size_t shards,
                                          unsigned threads) {
  if (!data || data->empty()) throw std::invalid_argument("covariance action: empty dataset");
  shards = std::max<std::size_t>(1, std::min(shards, data->size()));
  threads = std::max(1u, threads);
  return [data, shards, threads](const DenseMatrix& q) {
    const std::size_t n = data->size();
    const std::size_t k = q.cols();
    std::vector<DenseMatrix> partial(shards, DenseMatrix(q.rows(), k));

    auto run_shard = [&](std::size_t s) {
      const std::size_t begin = n * s / shards;
      const std::size_t end = n * (s + 1) / shards;
      DenseMatrix& acc = partial[s];
      std::vector<double> w(k);
      for (std::size_t p = begin; p < end; ++p) {
        const PointView x = data->point(p);
        for (std::size_t j = 0; j < k; ++j) {
          auto qj = q.col(j);
          double sum = 0.0;
          for (std::size_t t = 0; t < x.indices.size(); ++t) sum += x.values[t] * qj[x.indices[t]];
          w[j] = sum;
        }
        for (std::size_t j = 0; j < k; ++j) {
          if (w[j] == 0.0) continue;
          auto aj = acc.col(j);
          for (std::size_t t = 0; t < x.indices.size(); ++t) aj[x.indices[t]] += w[j] * x.values[t];
        }
      }
    };

    if (threads == 1 || shards == 1) {
      for (std::size_t s = 0; s < shards; ++s) run_shard(s);
    } else {
      std::atomic<std::size_t> next{0};
      std::vector<std::jthread> pool;
      for (unsigned t = 0; t < std::min<std::size_t>(threads, shards); ++t) {
        pool.emplace_back([&] {
          for (std::size_t s; (s = next.fetch_add(1)) < shards;) run_shard(s);
        });
      }
    }

    DenseMatrix out(q.rows(), k);
    for (const auto& p : partial)
      for (std::size_t i = 0; i < out.data().size(); ++i) out.data()[i] += p.data()[i];
    const double inv_n = 1.0 / static_cast<double>(n);
    for (double& v : out.data()) v *= inv_n;
    return out;
  };
}

CovarianceAction sample_covariance_action(std::shared_ptr<const DenseMatrix> samples) {
  if (!samples || samples->cols() == 0) {
    throw std::invalid_argument("covariance action: no samples");
  }
  return [samples](const DenseMatrix& q) {
    const DenseMatrix w = transpose_multiply(*samples, q);  // N x k
    DenseMatrix out = multiply(*samples, w);
    const double inv_n = 1.0 / static_cast<double>(samples->cols());
    for (double& v : out.data()) v *= inv_n;
    return out;
  };
}

ReferenceSubspace reference_oracle(const CovarianceAction& apply, std::size_t dimension,
                                   std::size_t k, const OracleOptions& options) {
  if (options.iterations < 1) throw std::invalid_argument("oracle: iterations must be >= 1");
  if (k < 1 || k > dimension) {
    throw std::invalid_argument(fmt::format("oracle: need 1 <= k <= d, got k={} d={}", k, dimension));
  }
  Rng rng(options.seed);
  DenseMatrix u = qr_decompose(gaussian_matrix(dimension, k, rng)).q;

  Provenance prov;
  prov.kind = Provenance::Kind::oracle;
  prov.seed = options.seed;
  prov.converged = false;
  for (std::size_t t = 1; t <= options.iterations; ++t) {
    DenseMatrix next = qr_decompose(apply(u)).q;
    const double change = spectral_error(u, next);
    u = std::move(next);
    prov.iterations = t;
    if (change < options.tolerance) {
      prov.converged = true;
      break;
    }
  }
  if (!prov.converged) {
    prov.warning = fmt::format(
        "orthogonal iteration did not converge to {:.1e} within {} iterations; the eigengap at k "
        "may be missing",
        options.tolerance, options.iterations);
  }

  const DenseMatrix rayleigh = transpose_multiply(u, apply(u));
  return ReferenceSubspace{std::move(u), symmetric_eigenvalues_small(rayleigh), std::move(prov)};
}

ReferenceSubspace analytic_reference(const SyntheticSampler& model, std::size_t k) {
  const auto& lambda = model.spec().eigenvalues;
  if (k < 1 || k > lambda.size()) {
    throw std::invalid_argument(fmt::format("analytic reference: k={} for d={}", k, lambda.size()));
  }
  if (k < lambda.size() && !(lambda[k - 1] > lambda[k])) {
    throw std::invalid_argument(fmt::format(
        "analytic reference: no eigengap at k={} (lambda_k = lambda_k+1 = {})", k, lambda[k]));
  }
  DenseMatrix u(model.dimension(), k);
  for (std::size_t j = 0; j < k; ++j) {
    auto src = model.basis().col(j);
    std::copy(src.begin(), src.end(), u.col(j).begin());
  }
  Provenance prov;
  prov.kind = Provenance::Kind::analytic;
  return ReferenceSubspace{std::move(u), std::vector<double>(lambda.begin(), lambda.begin() + k),
                           std::move(prov)};
}

}  // namespace streampca
