#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>

#include "streampca/linalg.hpp"

namespace streampca {

/// Identifier recorded in run manifests.
inline constexpr std::string_view kRngAlgorithm = "splitmix64-counter/box-muller";

/// SplitMix64 finalizer (Steele, Lea, Flood 2014).
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// FNV-1a over bytes; used to turn config ids into seed material.
constexpr std::uint64_t fnv1a64(std::string_view bytes) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Derives an independent seed from a parent seed and a tag.
constexpr std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t tag) noexcept {
  return mix64(mix64(parent) ^ (tag * 0x9e3779b97f4a7c15ULL + 0x632be59bd9b4e019ULL));
}

/// Counter-based generator: the i-th 64-bit output is mix64(key + i * golden).
///
/// The integer stream depends only on (seed, counter), so it is identical on
/// every platform. Doubles are formed from the top 53 bits. Normal deviates use
/// the Box-Muller transform and cache the second deviate of each pair.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) noexcept : seed_(seed), key_(mix64(seed)) {}

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t counter() const noexcept { return counter_; }

  std::uint64_t next_u64() noexcept {
    ++counter_;
    return mix64(key_ + counter_ * 0x9e3779b97f4a7c15ULL);
  }

  /// Uniform in [0, 1).
  double uniform() noexcept { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, bound) by rejection; bound must be > 0.
  std::uint64_t bounded(std::uint64_t bound) noexcept;

  double normal() noexcept;

 private:
  std::uint64_t seed_;
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  double cached_normal_ = 0.0;
  bool has_cached_ = false;
};

/// rows x cols matrix of i.i.d. N(0, 1) draws, filled column by column.
/// Requires rows >= cols >= 1.
DenseMatrix gaussian_matrix(std::size_t rows, std::size_t cols, Rng& rng);

}  // namespace streampca
