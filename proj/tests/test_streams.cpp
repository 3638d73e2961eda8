#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <sstream>

#include "streampca/streams.hpp"
#include "test_support.hpp"

using namespace streampca;

namespace {

Dataset parse(const std::string& text) {
  std::istringstream in(text);
  return parse_bag_of_words(in);
}

double value_at(const PointView& p, std::uint32_t index) {
  for (std::size_t i = 0; i < p.indices.size(); ++i) {
    if (p.indices[i] == index) return p.values[i];
  }
  return 0.0;
}

std::shared_ptr<const Dataset> numbered_dataset(std::size_t n) {
  // document i has a single word i with count 1
  std::ostringstream text;
  text << n << '\n' << n << '\n' << n << '\n';
  for (std::size_t i = 1; i <= n; ++i) text << i << ' ' << i << " 1\n";
  return std::make_shared<const Dataset>(parse(text.str()));
}

std::uint32_t point_id(const PointView& p) { return p.indices[0]; }

}  // namespace

TEST(SyntheticSpec, Validation) {
  EXPECT_NO_THROW(validate(SyntheticSpec{3, {0.5, 0.3, 0.2}, {}}));
  EXPECT_THROW(validate(SyntheticSpec{3, {0.3, 0.5, 0.2}, {}}), std::invalid_argument);
  EXPECT_THROW(validate(SyntheticSpec{2, {0.7, 0.4}, {}}), std::invalid_argument);
  EXPECT_THROW(validate(SyntheticSpec{2, {0.5, 0.0}, {}}), std::invalid_argument);
  EXPECT_THROW(validate(SyntheticSpec{3, {0.5, 0.2}, {}}), std::invalid_argument);
  EXPECT_THROW(validate(SyntheticSpec{0, {}, {}}), std::invalid_argument);
}

TEST(SyntheticSampler, DefaultDecomposition) {
  const SyntheticSpec spec{3, {0.4, 0.2, 0.1}, {}};
  const SamplerDecomposition dec = default_decomposition(spec);
  EXPECT_NEAR(dec.probabilities[0], 0.4 / 0.7, 1e-15);
  EXPECT_NEAR(dec.probabilities[2], 0.1 / 0.7, 1e-15);
  for (double r : dec.radii) EXPECT_NEAR(r, std::sqrt(0.7), 1e-15);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_NEAR(dec.probabilities[i] * dec.radii[i] * dec.radii[i], spec.eigenvalues[i], 1e-15);
  }
}

TEST(SyntheticSampler, RejectsDecompositionThatMissesTheSpectrum) {
  const SyntheticSpec spec{2, {0.5, 0.25}, {}};
  EXPECT_THROW(SyntheticSampler(spec, {{0.5, 0.5}, {1.0, 1.0}}), std::invalid_argument);
  EXPECT_THROW(SyntheticSampler(spec, {{0.25, 0.75}, {1.5, 0.5}}), std::invalid_argument);
}

TEST(SyntheticSampler, MonteCarloCovarianceAndMean) {
  const SyntheticSpec spec{2, {0.5, 0.25}, {}};
  const SyntheticSampler sampler(spec, {{0.5, 0.5}, {1.0, std::sqrt(0.5)}});
  Rng rng(31);
  const int n = 1000000;
  double m[2] = {0, 0}, c[2][2] = {{0, 0}, {0, 0}};
  std::vector<double> x(2);
  for (int t = 0; t < n; ++t) {
    sampler.sample(rng, x);
    ASSERT_LE(x[0] * x[0] + x[1] * x[1], 1.0);
    for (int i = 0; i < 2; ++i) {
      m[i] += x[i];
      for (int j = 0; j < 2; ++j) c[i][j] += x[i] * x[j];
    }
  }
  const double expected[2][2] = {{0.5, 0.0}, {0.0, 0.25}};
  for (int i = 0; i < 2; ++i) {
    EXPECT_LE(std::abs(m[i] / n), 0.005);
    for (int j = 0; j < 2; ++j) EXPECT_LE(std::abs(c[i][j] / n - expected[i][j]), 0.01);
  }
}

TEST(SyntheticSampler, RotatedCovarianceConverges) {
  const SyntheticSpec spec{4, {0.4, 0.3, 0.2, 0.1}, 99};
  const SyntheticSampler sampler(spec);
  EXPECT_LE(orthonormality_defect(sampler.basis()), 1e-13);
  // not axis aligned
  EXPECT_LT(max_abs(sampler.basis()), 0.999);

  Rng rng(7);
  const int n = 1000000;
  DenseMatrix acc(4, 4);
  std::vector<double> x(4);
  for (int t = 0; t < n; ++t) {
    sampler.sample(rng, x);
    for (std::size_t j = 0; j < 4; ++j)
      for (std::size_t i = 0; i < 4; ++i) acc(i, j) += x[i] * x[j];
  }
  const DenseMatrix exact = sampler.covariance_times(DenseMatrix::identity(4, 4));
  for (std::size_t j = 0; j < 4; ++j) {
    for (std::size_t i = 0; i < 4; ++i) {
      EXPECT_LE(std::abs(acc(i, j) / n - exact(i, j)), 5.0 / std::sqrt(double(n)));
    }
  }
}

TEST(SyntheticSampler, EveryPointHasNormAtMostOne) {
  const SyntheticSpec spec{50, std::vector<double>(50, 0.02), 5};
  const SyntheticSampler sampler(spec);
  Rng rng(3);
  std::vector<double> x(50);
  for (int t = 0; t < 20000; ++t) {
    sampler.sample(rng, x);
    double sq = 0.0;
    for (double v : x) sq += v * v;
    ASSERT_LE(sq, 1.0);
  }
}

TEST(BagOfWords, ParsesAndNormalizesTheDocumentedExample) {
  const Dataset d = parse("2\n3\n2\n1 1 4\n2 3 2\n");
  ASSERT_EQ(d.size(), 2u);
  EXPECT_EQ(d.dimension(), 3u);
  EXPECT_EQ(value_at(d.point(0), 0), 1.0);
  EXPECT_EQ(value_at(d.point(1), 2), 1.0);
  EXPECT_LE(d.point(0).squared_norm(), 1.0);
  EXPECT_LE(d.point(1).squared_norm(), 1.0);
}

TEST(BagOfWords, PerFeatureMaxThenNormClamp) {
  // word 1 max 4, word 2 max 2; doc 1 = (2/4, 2/2) has norm > 1 and is scaled
  const Dataset d = parse("3\n2\n4\n1 1 2\n1 2 2\n2 1 4\n3 2 1\n");
  const PointView p = d.point(0);
  const double a = 0.5, b = 1.0, norm = std::sqrt(a * a + b * b);
  EXPECT_NEAR(value_at(p, 0), a / norm, 1e-15);
  EXPECT_NEAR(value_at(p, 1), b / norm, 1e-15);
  EXPECT_NEAR(p.squared_norm(), 1.0, 1e-15);
  EXPECT_EQ(value_at(d.point(1), 0), 1.0);
  EXPECT_EQ(value_at(d.point(2), 1), 0.5);
}

TEST(BagOfWords, NormalizedPointsNeverExceedUnitNorm) {
  // dividing by |x| can round to an ulp above 1 without the guard
  Rng rng(12);
  std::string body;
  std::size_t nnz = 0;
  for (std::size_t doc = 1; doc <= 3000; ++doc)
    for (std::size_t w = 1; w <= 60; ++w)
      if (rng.uniform() < 0.3) {
        body += std::to_string(doc) + " " + std::to_string(w) + " " +
                std::to_string(1 + rng.bounded(200)) + "\n";
        ++nnz;
      }
  const Dataset data = parse("3000\n60\n" + std::to_string(nnz) + "\n" + body);
  std::size_t near_one = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double s = data.point(i).squared_norm();
    ASSERT_LE(s, 1.0) << "document " << i + 1;
    if (s > 1.0 - 1e-12) ++near_one;
  }
  EXPECT_GT(near_one, 2000u);
}

TEST(BagOfWords, EmptyDocumentsAndDuplicates) {
  const Dataset d = parse("3\n2\n3\n1 1 1\n1 1 3\n3 2 5\n");
  ASSERT_EQ(d.size(), 3u);
  EXPECT_EQ(d.point(1).values.size(), 0u);
  EXPECT_EQ(d.point(1).squared_norm(), 0.0);
  // duplicates summed to 4, which is the feature max
  EXPECT_EQ(value_at(d.point(0), 0), 1.0);
  EXPECT_EQ(d.nonzeros(), 2u);
}

TEST(BagOfWords, ZeroDocuments) {
  const Dataset d = parse("0\n5\n0\n");
  EXPECT_EQ(d.size(), 0u);
  EXPECT_TRUE(d.empty());
  EXPECT_EQ(d.dimension(), 5u);
}

TEST(BagOfWords, ErrorsCarryLineNumbers) {
  auto line_of = [](const std::string& text) -> std::size_t {
    try {
      parse(text);
    } catch (const ParseError& e) {
      return e.line();
    }
    return 999;
  };
  EXPECT_EQ(line_of("2\n3\n1\n1 5 2\n"), 4u);
  EXPECT_EQ(line_of("2\n3\n2\n1 1 1\n\n3 1 1\n"), 6u);
  EXPECT_EQ(line_of("2\nx\n1\n"), 2u);
  EXPECT_EQ(line_of(""), 1u);
  EXPECT_EQ(line_of("2\n3\n1\n1 1\n"), 4u);
  EXPECT_EQ(line_of("2\n3\n1\n1 1 0\n"), 4u);
  EXPECT_EQ(line_of("2\n3\n1\n1 1 1 1\n"), 4u);
  EXPECT_EQ(line_of("2\n0\n0\n"), 2u);
  try {
    parse("2\n3\n1\n1 5 2\n");
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("line 4"), std::string::npos);
  }
  // NNZ mismatch
  EXPECT_THROW(parse("2\n3\n3\n1 1 1\n2 2 2\n"), ParseError);
  EXPECT_THROW(parse("2\n3\n1\n1 1 1\n2 2 2\n"), ParseError);
}

TEST(BagOfWords, MissingFileIsAnIoError) {
  EXPECT_THROW(load_bag_of_words("/nonexistent/docword.txt"), std::system_error);
  const auto dir = testing_support::scratch_dir("bow");
  testing_support::write_text(dir / "docword.txt", "2\n3\n2\n1 1 4\n2 3 2\n");
  EXPECT_EQ(load_bag_of_words(dir / "docword.txt").size(), 2u);
}

TEST(StreamSource, SyntheticIsDeterministicInSeed) {
  StreamBacking backing;
  backing.synthetic = std::make_shared<const SyntheticSampler>(SyntheticSpec{5, {.3, .2, .1, .1, .05}, 4});
  StreamSource a = make_stream(backing, 11), b = make_stream(backing, 11), c = make_stream(backing, 12);
  int differ = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto pa = a.next();
    const std::vector<double> va(pa.values.begin(), pa.values.end());
    const auto pb = b.next();
    ASSERT_TRUE(std::equal(va.begin(), va.end(), pb.values.begin()));
    const auto pc = c.next();
    differ += !std::equal(va.begin(), va.end(), pc.values.begin());
  }
  EXPECT_GT(differ, 0);
  EXPECT_EQ(a.position(), 1000u);
  EXPECT_EQ(a.dimension(), 5u);
}

TEST(StreamSource, DatasetPassIsAPermutation) {
  StreamBacking backing;
  backing.dataset = numbered_dataset(5);
  StreamSource s = make_stream(backing, 1);
  for (int pass = 0; pass < 3; ++pass) {
    std::map<std::uint32_t, int> seen;
    for (int i = 0; i < 5; ++i) ++seen[point_id(s.next())];
    EXPECT_EQ(seen.size(), 5u);
    for (auto [id, count] : seen) EXPECT_EQ(count, 1);
  }
  EXPECT_EQ(s.passes_started(), 3u);
}

TEST(StreamSource, SeedsGiveDifferentPermutations) {
  StreamBacking backing;
  backing.dataset = numbered_dataset(100);
  int differ = 0;
  for (std::uint64_t pair = 0; pair < 20; ++pair) {
    StreamSource a = make_stream(backing, 2 * pair), b = make_stream(backing, 2 * pair + 1);
    bool same = true;
    for (int i = 0; i < 100; ++i) same &= point_id(a.next()) == point_id(b.next());
    differ += !same;
  }
  EXPECT_GE(differ, 19);
}

TEST(StreamSource, ReshufflesBetweenPasses) {
  StreamBacking backing;
  backing.dataset = numbered_dataset(100);
  StreamSource s = make_stream(backing, 5);
  std::vector<std::uint32_t> first, second;
  for (int i = 0; i < 100; ++i) first.push_back(point_id(s.next()));
  for (int i = 0; i < 100; ++i) second.push_back(point_id(s.next()));
  EXPECT_NE(first, second);
}

TEST(StreamSource, EmptyDatasetRejected) {
  StreamBacking backing;
  backing.dataset = std::make_shared<const Dataset>(parse("0\n4\n0\n"));
  EXPECT_THROW(make_stream(backing, 1), std::invalid_argument);
  EXPECT_THROW(make_stream(StreamBacking{}, 1), std::invalid_argument);
}
