#include <gtest/gtest.h>

#include <cmath>

#include "streampca/estimators.hpp"
#include "streampca/metrics.hpp"
#include "test_support.hpp"

using namespace streampca;

namespace {

// Frozen from tests/oracles/block_schedule_oracle.py (mpmath, 50 digits).
const ScheduleParams kSetA{0.5, 0.1, 0.1, 100, 4, 1.0, 1.0};
const ScheduleParams kSetB{0.12, 0.03, 0.05, 100, 4, 0.5, 2.0};
const ScheduleParams kSetC{1.0, 0.5, 0.01, 1000, 10, 2.0, 1.0};
const ScheduleParams kSetD{0.5, 0.1, 0.1, 100, 4, 1.0, 1600.0};
const ScheduleParams kSetE{0.2, 0.18, 0.1, 50, 3, 1.0, 1.0};

const std::vector<std::uint64_t> kSizesA = {
    691852,      1636070,     3567390,     7553746,      15757445,     32576989,    66949963,
    137011433,   279511952,   568844215,   1155455535,   2343351262,   4746386693,  9603291204,
    19412361661, 39209710597, 79142701104, 159649255086, 321878698473, 648653019654};
const std::vector<std::uint64_t> kSizesB = {
    3276662,      7648667,       16578804,      34976043,      72773060,      150155929,
    308106934,    629718673,     1283261508,    2609145897,    5295405966,    10731611378,
    21722268628,  43924215285,   88741569697,   179154091105,  361447417935,  728814336210,
    1468827406367, 2958903175184};
const std::vector<std::uint64_t> kSizesC = {
    22095352,   34796460,   52145506,   76690747,    111688558,   161685418,  233122392,
    335154294,  480802470,  688588507,  984853116,   1407048577,  2008413456, 2864609249,
    4083141202, 5816729630, 8282285983, 11787839840, 16770744029, 23851875950};

void feed(StreamingEstimator& est, std::initializer_list<double> x) {
  std::vector<double> v(x);
  est.update(std::span<const double>(v));
}

DenseMatrix column(std::initializer_list<double> v) {
  DenseMatrix m(v.size(), 1);
  std::size_t i = 0;
  for (double x : v) m(i++, 0) = x;
  return m;
}

std::vector<EstimatorConfig> all_kinds(std::size_t k) {
  return {EstimatorConfig::spca(k, 10.0), EstimatorConfig::alecton(k, 0.1),
          EstimatorConfig::dbpca(k, 0.8), EstimatorConfig::bpca(k, 25)};
}

}  // namespace

TEST(Config, Validation) {
  EXPECT_NO_THROW(validate(EstimatorConfig::alecton(2, 0.0)));
  EXPECT_THROW(validate(EstimatorConfig::spca(2, 0.0)), std::invalid_argument);
  EXPECT_THROW(validate(EstimatorConfig::spca(2, 1.0, -1.0)), std::invalid_argument);
  EXPECT_THROW(validate(EstimatorConfig::alecton(2, -0.1)), std::invalid_argument);
  EXPECT_THROW(validate(EstimatorConfig::dbpca(2, 1.0)), std::invalid_argument);
  EXPECT_THROW(validate(EstimatorConfig::dbpca(2, 0.0)), std::invalid_argument);
  EXPECT_THROW(validate(EstimatorConfig::bpca(2, 0)), std::invalid_argument);
  EXPECT_THROW(validate(EstimatorConfig::spca(0, 1.0)), std::invalid_argument);
  EXPECT_EQ(parse_algorithm("dbpca"), Algorithm::dbpca);
  EXPECT_FALSE(parse_algorithm("oja").has_value());
  EXPECT_EQ(to_string(Algorithm::alecton), "alecton");
}

TEST(Init, SeededOrthonormalAndDeterministic) {
  EstimatorConfig cfg = EstimatorConfig::spca(2, 1.0);
  cfg.init_seed = 1;
  StreamingEstimator a(cfg, 5), b(cfg, 5);
  EXPECT_LE(orthonormality_defect(a.current_basis()), 1e-10);
  EXPECT_EQ(a.current_basis(), b.current_basis());
  cfg.init_seed = 2;
  EXPECT_NE(StreamingEstimator(cfg, 5).current_basis(), a.current_basis());
  EXPECT_THROW(StreamingEstimator(EstimatorConfig::spca(6, 1.0), 5), std::invalid_argument);
}

// P(cos < threshold) = 0.0082 per seed by a 2e6-draw numpy Monte-Carlo
// (square k x k blocks have a linear lower tail), so 200 seeds expect ~1.6;
// 7 is the 99.9% binomial quantile.
TEST(Init, RandomStartIsRarelyNearlyOrthogonalToTheTarget) {
  const std::size_t d = 20, k = 2;
  const DenseMatrix u = DenseMatrix::identity(d, k);
  const double threshold = 0.01 * std::sqrt(1.0 / double(d * k));
  int bad = 0;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    EstimatorConfig cfg = EstimatorConfig::spca(k, 1.0);
    cfg.init_seed = seed;
    StreamingEstimator est(cfg, d);
    bad += smallest_singular_value(transpose_multiply(u, est.current_basis())) < threshold;
  }
  EXPECT_LE(bad, 7);
}

TEST(Init, RejectsNonOrthonormalStart) {
  DenseMatrix q = DenseMatrix::identity(3, 1);
  q(1, 0) = 0.1;
  EXPECT_THROW(StreamingEstimator(EstimatorConfig::spca(1, 1.0), q), std::invalid_argument);
  EXPECT_THROW(StreamingEstimator(EstimatorConfig::spca(2, 1.0), DenseMatrix::identity(3, 1)),
               std::invalid_argument);
}

TEST(Spca, DocumentedTwoDimensionalStep) {
  const double h = 1.0 / std::sqrt(2.0);
  StreamingEstimator est(EstimatorConfig::spca(1, 1.0), column({h, h}));
  feed(est, {1.0, 0.0});
  EXPECT_EQ(est.last_rate(), 1.0);
  EXPECT_NEAR(est.current_basis()(0, 0), 0.894427190999916, 1e-12);
  EXPECT_NEAR(est.current_basis()(1, 0), 0.447213595499958, 1e-12);
}

TEST(Spca, StepSizeSequence) {
  StreamingEstimator est(EstimatorConfig::spca(1, 1000.0), column({1.0, 0.0}));
  for (int n = 0; n < 4; ++n) feed(est, {0.0, 0.0});
  EXPECT_EQ(est.last_rate(), 250.0);

  StreamingEstimator offset(EstimatorConfig::spca(1, 10.0, 5.0), column({1.0, 0.0}));
  feed(offset, {0.0, 0.0});
  EXPECT_NEAR(offset.last_rate(), 10.0 / 6.0, 1e-15);
}

TEST(Spca, OrthogonalPointLeavesBasisUnchanged) {
  const DenseMatrix q0 = DenseMatrix::identity(3, 2);
  StreamingEstimator est(EstimatorConfig::spca(2, 100.0), q0);
  feed(est, {0.0, 0.0, 0.8});
  EXPECT_EQ(est.current_basis(), q0);
}

TEST(Alecton, ZeroRateFreezesAndOrthogonalInputIsIgnored) {
  const DenseMatrix q0 = testing_support::random_orthonormal(6, 2, 3);
  StreamingEstimator frozen(EstimatorConfig::alecton(2, 0.0), q0);
  for (int i = 0; i < 10; ++i) feed(frozen, {0.3, -0.2, 0.1, 0.0, 0.5, 0.1});
  EXPECT_EQ(frozen.current_basis(), q0);

  StreamingEstimator est(EstimatorConfig::alecton(1, 3.7), column({0.0, 1.0}));
  feed(est, {1.0, 0.0});
  EXPECT_EQ(est.current_basis(), column({0.0, 1.0}));
}

TEST(Alecton, MatchesSpcaWhenRatesCoincide) {
  const DenseMatrix q0 = testing_support::random_orthonormal(8, 3, 11);
  // SPCA with c = 12, n0 = 3 takes rate 12/4 = 3 on its first step
  StreamingEstimator spca(EstimatorConfig::spca(3, 12.0, 3.0), q0);
  StreamingEstimator alecton(EstimatorConfig::alecton(3, 3.0), q0);
  const std::vector<double> x = {0.1, 0.2, -0.3, 0.05, 0.4, 0.0, -0.1, 0.2};
  spca.update(std::span<const double>(x));
  alecton.update(std::span<const double>(x));
  EXPECT_EQ(spca.last_rate(), 3.0);
  EXPECT_EQ(spca.current_basis(), alecton.current_basis());
}

TEST(AllEstimators, SignFlippedPointsGiveIdenticalState) {
  const DenseMatrix q0 = testing_support::random_orthonormal(10, 3, 21);
  Rng rng(4);
  for (const auto& cfg : all_kinds(3)) {
    StreamingEstimator plus(cfg, q0), minus(cfg, q0);
    std::vector<double> x(10), neg(10);
    for (int t = 0; t < 60; ++t) {
      for (std::size_t i = 0; i < 10; ++i) {
        x[i] = (rng.uniform() - 0.5) * 0.3;
        neg[i] = -x[i];
      }
      plus.update(std::span<const double>(x));
      minus.update(std::span<const double>(neg));
    }
    EXPECT_EQ(plus.current_basis(), minus.current_basis()) << to_string(cfg.algorithm);
  }
}

TEST(AllEstimators, OrthonormalAfterEveryUpdate) {
  const SyntheticSampler sampler(SyntheticSpec{30, std::vector<double>(30, 1.0 / 30.0), 8});
  Rng rng(5);
  std::vector<double> x(30);
  for (auto cfg : all_kinds(4)) {
    cfg.init_seed = 9;
    StreamingEstimator est(cfg, 30);
    for (int t = 0; t < 2000; ++t) {
      // dense Gaussian-like point keeps blocks full rank
      for (double& v : x) v = rng.normal() * 0.15;
      double sq = 0.0;
      for (double v : x) sq += v * v;
      if (sq > 1.0) for (double& v : x) v /= std::sqrt(sq);
      est.update(std::span<const double>(x));
      ASSERT_LE(orthonormality_defect(est.current_basis()), 1e-8) << to_string(cfg.algorithm);
    }
  }
}

TEST(AllEstimators, FootprintIsTwoBasesPlusSmallWorkspace) {
  for (const auto& cfg : all_kinds(5)) {
    StreamingEstimator est(cfg, 400);
    EXPECT_LE(est.footprint_doubles(), 2 * 400 * 5 + 5 * 5 + 4 * 5) << to_string(cfg.algorithm);
  }
}

TEST(AllEstimators, RejectsWrongPointDimension) {
  StreamingEstimator est(EstimatorConfig::spca(1, 1.0), 4);
  EXPECT_THROW(feed(est, {1.0, 0.0}), std::invalid_argument);
}

TEST(Dbpca, PracticalScheduleSizes) {
  StreamingEstimator est(EstimatorConfig::dbpca(4, 0.8), testing_support::random_orthonormal(20, 4, 1));
  Rng rng(2);
  std::vector<double> x(20);
  std::vector<std::uint64_t> sizes;
  for (int t = 0; t < 200; ++t) {
    if (est.block_fill() == 0) sizes.push_back(est.current_block_size());
    for (double& v : x) v = rng.normal() * 0.2;
    est.update(std::span<const double>(x));
  }
  ASSERT_GE(sizes.size(), 5u);
  EXPECT_EQ(std::vector<std::uint64_t>(sizes.begin(), sizes.begin() + 5),
            (std::vector<std::uint64_t>{8, 10, 13, 17, 22}));
}

TEST(Dbpca, RecurrenceMatchesExactRationalSequence) {
  const std::vector<std::uint64_t> g08 = {
      8,     10,    13,    17,    22,    28,     35,     44,     55,     69,
      87,    109,   137,   172,   215,   269,    337,    422,    528,    660,
      825,   1032,  1290,  1613,  2017,  2522,   3153,   3942,   4928,   6160,
      7700,  9625,  12032, 15040, 18800, 23500,  29375,  36719,  45899,  57374,
      71718, 89648, 112060, 140075, 175094, 218868, 273585, 341982, 427478, 534348};
  std::uint64_t s = 8;
  for (std::size_t i = 0; i < g08.size(); ++i) {
    EXPECT_EQ(s, g08[i]) << "block " << i + 1;
    s = dbpca_next_block_size(s, 0.8);
  }
  EXPECT_EQ(dbpca_next_block_size(28, 0.8), 35u);
  EXPECT_EQ(dbpca_next_block_size(9, 0.9), 10u);
  EXPECT_THROW(dbpca_next_block_size(8, 1.0), std::invalid_argument);
}

TEST(Dbpca, CustomInitialBlock) {
  StreamingEstimator est(EstimatorConfig::dbpca(2, 0.5, 3), DenseMatrix::identity(4, 2));
  EXPECT_EQ(est.current_block_size(), 3u);
  EXPECT_EQ(est.block_index(), 1u);
}

TEST(Bpca, DegenerateBlockRaisesWithIndex) {
  StreamingEstimator est(EstimatorConfig::bpca(1, 3), column({0.0, 1.0}));
  feed(est, {1.0, 0.0});
  feed(est, {1.0, 0.0});
  try {
    feed(est, {1.0, 0.0});
    FAIL() << "expected DegenerateBlockError";
  } catch (const DegenerateBlockError& e) {
    EXPECT_EQ(e.block_index(), 1u);
  }
}

TEST(Bpca, MidBlockBasisIsFromLastCompletedBlock) {
  const DenseMatrix q0 = testing_support::random_orthonormal(5, 2, 6);
  StreamingEstimator est(EstimatorConfig::bpca(2, 4), q0);
  feed(est, {0.5, 0.1, 0.0, 0.2, 0.1});
  feed(est, {0.1, 0.5, 0.3, 0.0, 0.1});
  feed(est, {0.0, 0.2, 0.1, 0.6, 0.1});
  EXPECT_EQ(est.current_basis(), q0);
  EXPECT_EQ(est.block_fill(), 3u);
  feed(est, {0.2, 0.0, 0.4, 0.1, 0.5});
  EXPECT_NE(est.current_basis(), q0);
  EXPECT_EQ(est.block_index(), 2u);
  EXPECT_EQ(est.block_fill(), 0u);
  EXPECT_EQ(est.current_block_size(), 4u);
}

TEST(Bpca, BlockFromCorpus) {
  EXPECT_EQ(bpca_block_from_corpus(100000, 22026, 1.0), 11111u);
  EXPECT_EQ(bpca_block_from_corpus(60, 3, 1.0), 60u);
  EXPECT_THROW(bpca_block_from_corpus(60, 3, 0.01), std::invalid_argument);
  EXPECT_EQ(bpca_block_from_corpus(1000, 100, 1.5, 10.0), 333u);
  EXPECT_EQ(bpca_block_from_corpus(200000, 100, 125.0), 347u);
}

TEST(Schedule, ClosedFormTerms) {
  const ScheduleTerms t = schedule_terms(1, kSetA);
  EXPECT_NEAR(t.lambda_tilde, 0.125, 1e-15);
  EXPECT_NEAR(t.gamma, 0.7071067811865476, 1e-12);
  EXPECT_NEAR(t.delta, 0.09375, 1e-15);
  EXPECT_NEAR(t.eps0, 0.05, 1e-15);
  EXPECT_NEAR(t.beta, 0.035355339059327376, 1e-12);
  EXPECT_NEAR(t.delta_i, 0.05, 1e-15);
  const double raw = std::log(2000.0) / std::pow(0.09375 * 0.035355339059327376, 2);
  EXPECT_EQ(theoretical_block_size(1, kSetA), static_cast<std::uint64_t>(std::ceil(raw)));
}

TEST(Schedule, FrozenHighPrecisionSizes) {
  for (std::size_t i = 1; i <= 20; ++i) {
    EXPECT_EQ(theoretical_block_size(i, kSetA), kSizesA[i - 1]) << "A i=" << i;
    EXPECT_EQ(theoretical_block_size(i, kSetB), kSizesB[i - 1]) << "B i=" << i;
    EXPECT_EQ(theoretical_block_size(i, kSetC), kSizesC[i - 1]) << "C i=" << i;
  }
  EXPECT_EQ(theoretical_block_size(50, kSetC), 860287045641794u);
  // 4.9e17 is past what an 80-bit long double resolves to the unit
  const std::uint64_t d50 = theoretical_block_size(50, kSetD);
  EXPECT_LE(d50 > 493993188860410465u ? d50 - 493993188860410465u : 493993188860410465u - d50, 2u);
}

TEST(Schedule, NondecreasingPastTheCrossover) {
  for (const ScheduleParams& p : {kSetC, kSetD, kSetE}) {
    std::size_t first = 0;
    for (std::size_t i = 1; i <= 50 && first == 0; ++i) {
      const ScheduleTerms t = schedule_terms(i, p);
      const double eps_prev = t.eps0 * std::pow(t.gamma, double(i - 1));
      if (t.gamma * eps_prev <= t.gamma / std::sqrt(1.0 + eps_prev * eps_prev)) first = i;
    }
    ASSERT_GT(first, 0u);
    for (std::size_t i = first; i < 50; ++i) {
      EXPECT_LE(theoretical_block_size(i, p), theoretical_block_size(i + 1, p)) << "i=" << i;
    }
  }
  // set D shrinks before its crossover
  EXPECT_GT(theoretical_block_size(1, kSetD), theoretical_block_size(2, kSetD));
}

TEST(Schedule, InvalidParameters) {
  ScheduleParams p = kSetA;
  p.lambda_k1 = p.lambda_k;
  EXPECT_THROW(theoretical_block_size(1, p), std::invalid_argument);
  EXPECT_THROW(theoretical_block_size(0, kSetA), std::invalid_argument);
  p = kSetA;
  p.delta0 = 1.0;
  EXPECT_THROW(theoretical_block_size(1, p), std::invalid_argument);
  EXPECT_THROW(theoretical_block_size(50, kSetA), std::overflow_error);
}

TEST(Schedule, DrivesTheEstimator) {
  EstimatorConfig cfg = EstimatorConfig::dbpca(4, 0.5);
  cfg.dbpca_schedule = kSetD;
  StreamingEstimator est(cfg, 100);
  EXPECT_EQ(est.current_block_size(), 8649u);
}
