#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "streampca/random.hpp"

using namespace streampca;

TEST(Rng, MixMatchesReferenceSplitMix64) {
  // first output of the reference SplitMix64 generator seeded with 0
  EXPECT_EQ(mix64(0x9e3779b97f4a7c15ULL), 0xe220a8397b1dcdafULL);
  EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cULL);
}

TEST(Rng, CounterBasedAndDeterministic) {
  Rng a(123), b(123), c(124);
  for (int i = 0; i < 100; ++i) {
    const auto x = a.next_u64();
    EXPECT_EQ(x, b.next_u64());
    EXPECT_NE(x, c.next_u64());
  }
  EXPECT_EQ(a.counter(), 100u);
  EXPECT_EQ(a.seed(), 123u);
}

TEST(Rng, DerivedSeedsAreDistinct) {
  std::set<std::uint64_t> seen;
  for (std::uint64_t parent = 0; parent < 50; ++parent) {
    for (std::uint64_t tag = 0; tag < 20; ++tag) seen.insert(derive_seed(parent, tag));
  }
  EXPECT_EQ(seen.size(), 1000u);
}

TEST(Rng, UniformAndBoundedRanges) {
  Rng rng(9);
  std::vector<int> hist(10);
  for (int i = 0; i < 100000; ++i) {
    const double u = rng.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    const auto b = rng.bounded(10);
    ASSERT_LT(b, 10u);
    ++hist[b];
  }
  // each cell has sd ~ 95; 6 sd is far outside anything a correct sampler does
  for (int h : hist) EXPECT_NEAR(h, 10000, 600);
  EXPECT_EQ(rng.bounded(1), 0u);
}

TEST(Rng, NormalMoments) {
  Rng rng(2024);
  const int n = 200000;
  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    sum += z;
    sq += z * z;
  }
  const double mean = sum / n;
  const double var = sq / n - mean * mean;
  // 5 standard errors: 5/sqrt(n) for the mean, 5*sqrt(2/n) for the variance
  EXPECT_LT(std::abs(mean), 5.0 / std::sqrt(double(n)));
  EXPECT_LT(std::abs(var - 1.0), 5.0 * std::sqrt(2.0 / n));
}

TEST(Rng, GaussianMatrixShapeAndValidation) {
  Rng rng(1);
  const DenseMatrix g = gaussian_matrix(6, 3, rng);
  EXPECT_EQ(g.rows(), 6u);
  EXPECT_EQ(g.cols(), 3u);
  EXPECT_THROW(gaussian_matrix(2, 3, rng), std::invalid_argument);
  EXPECT_THROW(gaussian_matrix(2, 0, rng), std::invalid_argument);
  Rng again(1);
  EXPECT_EQ(gaussian_matrix(6, 3, again), g);
}
