#include "streampca/streams.hpp"

#include <algorithm>
#include <cerrno>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <string_view>
#include <system_error>

#include <fmt/format.h>

namespace streampca {

double PointView::squared_norm() const noexcept {
  double s = 0.0;
  for (double v : values) s += v * v;
  return s;
}

void validate(const SyntheticSpec& spec) {
  if (spec.dimension == 0) throw std::invalid_argument("synthetic spec: dimension must be >= 1");
  if (spec.eigenvalues.size() != spec.dimension) {
    throw std::invalid_argument(fmt::format("synthetic spec: {} eigenvalues for dimension {}",
                                            spec.eigenvalues.size(), spec.dimension));
  }
  double total = 0.0;
  for (std::size_t i = 0; i < spec.dimension; ++i) {
    const double l = spec.eigenvalues[i];
    if (!(l > 0.0 && l <= 1.0)) {
      throw std::invalid_argument(
          fmt::format("synthetic spec: eigenvalue {} = {} outside (0, 1]", i, l));
    }
    if (i > 0 && l > spec.eigenvalues[i - 1]) {
      throw std::invalid_argument(
          fmt::format("synthetic spec: eigenvalues must be nonincreasing (index {})", i));
    }
    total += l;
  }
  if (total > 1.0 + 1e-12) {
    throw std::invalid_argument(
        fmt::format("synthetic spec: eigenvalues sum to {} > 1, points could exceed unit norm",
                    total));
  }
}

SamplerDecomposition default_decomposition(const SyntheticSpec& spec) {
  const double total = std::accumulate(spec.eigenvalues.begin(), spec.eigenvalues.end(), 0.0);
  SamplerDecomposition out;
  out.probabilities.reserve(spec.eigenvalues.size());
  for (double l : spec.eigenvalues) out.probabilities.push_back(l / total);
  out.radii.assign(spec.eigenvalues.size(), std::min(1.0, std::sqrt(total)));
  return out;
}

SyntheticSampler::SyntheticSampler(SyntheticSpec spec)
    : SyntheticSampler(spec, default_decomposition(spec)) {}

SyntheticSampler::SyntheticSampler(SyntheticSpec spec, SamplerDecomposition decomposition)
    : spec_(std::move(spec)), decomposition_(std::move(decomposition)) {
  validate(spec_);
  const std::size_t d = spec_.dimension;
  if (decomposition_.probabilities.size() != d || decomposition_.radii.size() != d) {
    throw std::invalid_argument("sampler decomposition: sizes do not match dimension");
  }
  double mass = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    const double p = decomposition_.probabilities[i];
    const double r = decomposition_.radii[i];
    if (!(p >= 0.0) || !(r >= 0.0 && r <= 1.0)) {
      throw std::invalid_argument(
          fmt::format("sampler decomposition: direction {} has p={} r={}", i, p, r));
    }
    if (std::abs(p * r * r - spec_.eigenvalues[i]) > 1e-12) {
      throw std::invalid_argument(
          fmt::format("sampler decomposition: p*r^2 != lambda at direction {}", i));
    }
    mass += p;
    cumulative_.push_back(mass);
  }
  if (std::abs(mass - 1.0) > 1e-12) {
    throw std::invalid_argument("sampler decomposition: probabilities do not sum to 1");
  }
  cumulative_.back() = 1.0;

  if (spec_.rotation_seed) {
    Rng rng(*spec_.rotation_seed);
    DenseMatrix g = gaussian_matrix(d, d, rng);
    basis_ = qr_decompose(g).q;
  } else {
    basis_ = DenseMatrix::identity(d, d);
  }
  // largest radius not above r_i whose emitted point has |x|^2 <= 1 in floating point
  emit_radii_ = decomposition_.radii;
  for (std::size_t i = 0; i < d; ++i) {
    auto v = basis_.col(i);
    for (;;) {
      double sq = 0.0;
      for (double c : v) sq += (emit_radii_[i] * c) * (emit_radii_[i] * c);
      if (sq <= 1.0) break;
      emit_radii_[i] = std::nextafter(emit_radii_[i], 0.0);
    }
  }
}

void SyntheticSampler::sample(Rng& rng, std::span<double> out) const {
  const double u = rng.uniform();
  auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
  std::size_t i = std::min<std::size_t>(it - cumulative_.begin(), cumulative_.size() - 1);
  const bool negative = (rng.next_u64() >> 63) != 0;
  const double scale = negative ? -emit_radii_[i] : emit_radii_[i];
  auto v = basis_.col(i);
  for (std::size_t j = 0; j < out.size(); ++j) out[j] = scale * v[j];
}

std::vector<double> SyntheticSampler::sample(Rng& rng) const {
  std::vector<double> out(spec_.dimension);
  sample(rng, out);
  return out;
}

DenseMatrix SyntheticSampler::covariance_times(const DenseMatrix& q) const {
  DenseMatrix coeffs = transpose_multiply(basis_, q);  // V^T Q
  for (std::size_t j = 0; j < coeffs.cols(); ++j)
    for (std::size_t i = 0; i < coeffs.rows(); ++i) coeffs(i, j) *= spec_.eigenvalues[i];
  return multiply(basis_, coeffs);
}

Dataset::Dataset(std::size_t dimension, std::vector<std::size_t> offsets,
                 std::vector<std::uint32_t> indices, std::vector<double> values)
    : dimension_(dimension),
      offsets_(std::move(offsets)),
      indices_(std::move(indices)),
      values_(std::move(values)) {
  if (offsets_.empty() || offsets_.front() != 0 || offsets_.back() != values_.size() ||
      indices_.size() != values_.size()) {
    throw std::invalid_argument("Dataset: inconsistent CSR arrays");
  }
}

PointView Dataset::point(std::size_t i) const noexcept {
  const std::size_t begin = offsets_[i];
  const std::size_t len = offsets_[i + 1] - begin;
  return PointView{dimension_, std::span<const double>(values_).subspan(begin, len),
                   std::span<const std::uint32_t>(indices_).subspan(begin, len), true};
}

ParseError::ParseError(std::size_t line, const std::string& what)
    : std::runtime_error(line == 0 ? what : fmt::format("line {}: {}", line, what)), line_(line) {}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

bool parse_uint(std::string_view token, std::uint64_t& out) {
  if (token.empty()) return false;
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), out);
  return ec == std::errc() && ptr == token.data() + token.size();
}

std::uint64_t parse_header(std::istream& in, std::size_t line_no, const char* name) {
  std::string line;
  if (!std::getline(in, line)) {
    throw ParseError(line_no, line_no == 1 ? "empty file" : fmt::format("missing header {}", name));
  }
  std::uint64_t value = 0;
  if (!parse_uint(trim(line), value)) {
    throw ParseError(line_no, fmt::format("header {} is not a nonnegative integer: '{}'", name,
                                          std::string(trim(line))));
  }
  return value;
}

struct Triple {
  std::uint32_t doc;
  std::uint32_t word;
  std::uint64_t count;
};

}  // namespace

Dataset parse_bag_of_words(std::istream& in) {
  const std::uint64_t docs = parse_header(in, 1, "D");
  const std::uint64_t words = parse_header(in, 2, "W");
  const std::uint64_t nnz = parse_header(in, 3, "NNZ");
  if (words == 0) throw ParseError(2, "vocabulary size W must be >= 1");
  if (docs > 0xffffffffULL || words > 0xffffffffULL) {
    throw ParseError(1, "D and W must fit in 32 bits");
  }

  std::vector<Triple> triples;
  triples.reserve(static_cast<std::size_t>(std::min<std::uint64_t>(nnz, 1u << 26)));
  std::string line;
  std::size_t line_no = 3;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view rest = trim(line);
    if (rest.empty()) continue;
    std::uint64_t fields[3];
    int n = 0;
    while (!rest.empty()) {
      const std::size_t cut = rest.find_first_of(" \t");
      std::string_view token = rest.substr(0, cut);
      if (n == 3 || !parse_uint(token, fields[n])) {
        throw ParseError(line_no, fmt::format("expected 'docID wordID count', got '{}'",
                                              std::string(trim(line))));
      }
      ++n;
      rest = cut == std::string_view::npos ? std::string_view{} : trim(rest.substr(cut));
    }
    if (n != 3) {
      throw ParseError(line_no,
                       fmt::format("expected 'docID wordID count', got '{}'", std::string(trim(line))));
    }
    if (fields[0] < 1 || fields[0] > docs) {
      throw ParseError(line_no, fmt::format("docID {} outside [1, {}]", fields[0], docs));
    }
    if (fields[1] < 1 || fields[1] > words) {
      throw ParseError(line_no, fmt::format("wordID {} outside [1, {}]", fields[1], words));
    }
    if (fields[2] == 0) throw ParseError(line_no, "count must be positive");
    if (triples.size() == nnz) {
      throw ParseError(line_no, fmt::format("more entries than the declared NNZ = {}", nnz));
    }
    triples.push_back({static_cast<std::uint32_t>(fields[0] - 1),
                       static_cast<std::uint32_t>(fields[1] - 1), fields[2]});
  }
  if (triples.size() != nnz) {
    throw ParseError(0, fmt::format("declared NNZ = {} but found {} entries", nnz, triples.size()));
  }

  auto by_position = [](const Triple& a, const Triple& b) {
    return a.doc != b.doc ? a.doc < b.doc : a.word < b.word;
  };
  if (!std::is_sorted(triples.begin(), triples.end(), by_position)) {
    std::stable_sort(triples.begin(), triples.end(), by_position);
  }

  // merge duplicates
  std::size_t w = 0;
  for (std::size_t r = 0; r < triples.size(); ++r) {
    if (w > 0 && triples[w - 1].doc == triples[r].doc && triples[w - 1].word == triples[r].word) {
      triples[w - 1].count += triples[r].count;
    } else {
      triples[w++] = triples[r];
    }
  }
  triples.resize(w);

  std::vector<double> feature_max(words, 0.0);
  for (const auto& t : triples)
    feature_max[t.word] = std::max(feature_max[t.word], static_cast<double>(t.count));

  std::vector<std::size_t> offsets(docs + 1, 0);
  std::vector<std::uint32_t> indices(triples.size());
  std::vector<double> values(triples.size());
  for (std::size_t i = 0; i < triples.size(); ++i) {
    ++offsets[triples[i].doc + 1];
    indices[i] = triples[i].word;
    values[i] = static_cast<double>(triples[i].count) / feature_max[triples[i].word];
  }
  for (std::size_t d = 0; d < docs; ++d) offsets[d + 1] += offsets[d];

  for (std::size_t d = 0; d < docs; ++d) {
    double sq = 0.0;
    for (std::size_t i = offsets[d]; i < offsets[d + 1]; ++i) sq += values[i] * values[i];
    const double norm = std::sqrt(sq);
    if (norm > 1.0) {
      for (std::size_t i = offsets[d]; i < offsets[d + 1]; ++i) values[i] /= norm;
      // rounding can leave |x|^2 an ulp above 1; shrink until it is not
      auto squared = [&] {
        double s = 0.0;
        for (std::size_t i = offsets[d]; i < offsets[d + 1]; ++i) s += values[i] * values[i];
        return s;
      };
      while (squared() > 1.0) {
        for (std::size_t i = offsets[d]; i < offsets[d + 1]; ++i) values[i] *= 1.0 - 0x1p-50;
      }
    }
  }
  return Dataset(static_cast<std::size_t>(words), std::move(offsets), std::move(indices),
                 std::move(values));
}

Dataset load_bag_of_words(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::system_error(errno, std::generic_category(), path.string());
  return parse_bag_of_words(in);
}

std::size_t StreamBacking::dimension() const {
  if (synthetic) return synthetic->dimension();
  if (dataset) return dataset->dimension();
  throw std::invalid_argument("stream backing is empty");
}

StreamSource::StreamSource(StreamBacking backing, std::uint64_t order_seed)
    : backing_(std::move(backing)), rng_(order_seed), dimension_(backing_.dimension()) {
  if (backing_.synthetic) {
    buffer_.resize(dimension_);
  } else {
    if (backing_.dataset->empty()) throw std::invalid_argument("stream: dataset has no points");
    order_.resize(backing_.dataset->size());
    std::iota(order_.begin(), order_.end(), 0u);
    cursor_ = order_.size();
  }
}

void StreamSource::reshuffle() {
  // Fisher-Yates continuing from the previous pass's order
  for (std::size_t i = order_.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng_.bounded(i));
    std::swap(order_[i - 1], order_[j]);
  }
  cursor_ = 0;
  ++passes_;
}

PointView StreamSource::next() {
  ++position_;
  if (backing_.synthetic) {
    backing_.synthetic->sample(rng_, buffer_);
    return PointView{dimension_, buffer_, {}, false};
  }
  if (cursor_ == order_.size()) reshuffle();
  return backing_.dataset->point(order_[cursor_++]);
}

}  // namespace streampca
