#include "streampca/random.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include <fmt/format.h>

namespace streampca {

std::uint64_t Rng::bounded(std::uint64_t bound) noexcept {
  // reject the top sliver so every residue is equally likely
  const std::uint64_t limit = -bound % bound;  // == 2^64 mod bound
  for (;;) {
    const std::uint64_t r = next_u64();
    if (r >= limit) return r % bound;
  }
}

double Rng::normal() noexcept {
  if (has_cached_) {
    has_cached_ = false;
    return cached_normal_;
  }
  // 1 - uniform() lies in (0, 1], so the log is finite
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  cached_normal_ = radius * std::sin(angle);
  has_cached_ = true;
  return radius * std::cos(angle);
}

DenseMatrix gaussian_matrix(std::size_t rows, std::size_t cols, Rng& rng) {
  if (cols == 0 || rows < cols) {
    throw std::invalid_argument(
        fmt::format("gaussian_matrix: expected rows >= cols >= 1, got {}x{}", rows, cols));
  }
  DenseMatrix out(rows, cols);
  for (double& v : out.data()) v = rng.normal();
  return out;
}

}  // namespace streampca
