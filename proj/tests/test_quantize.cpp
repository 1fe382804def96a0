#include <random>

#include <gtest/gtest.h>

#include "tdc/quantize.hpp"
#include "test_support.hpp"

using namespace tdc;
namespace tt = tdc::testing;

namespace {

AtomicDecomposition make(std::vector<std::size_t> idx, Eigen::MatrixXd c) { return {std::move(idx), std::move(c)}; }

std::vector<AtomicDecomposition> random_decomps(std::mt19937_64& rng, std::size_t q, std::size_t channels,
                                                std::size_t atoms) {
  std::uniform_int_distribution<std::size_t> count(0, 12);
  std::normal_distribution<double> g(0.0, 3.0);
  std::vector<AtomicDecomposition> out;
  for (std::size_t b = 0; b < q; ++b) {
    std::vector<std::size_t> all(atoms);
    std::iota(all.begin(), all.end(), 1);
    std::shuffle(all.begin(), all.end(), rng);
    const std::size_t k = count(rng);
    all.resize(k);
    Eigen::MatrixXd c(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(channels));
    for (Eigen::Index i = 0; i < c.size(); ++i) c.data()[i] = g(rng);
    out.push_back(make(all, c));
  }
  return out;
}

}  // namespace

TEST(Quantize, MagnitudeRoundsHalfUp) {
  EXPECT_EQ(quantize_magnitude(3.7, 1.0), 4u);
  EXPECT_EQ(quantize_magnitude(0.49, 1.0), 0u);
  EXPECT_EQ(quantize_magnitude(-2.3, 0.5), 5u);
  EXPECT_EQ(quantize_magnitude(0.5, 1.0), 1u);
  EXPECT_THROW(quantize_magnitude(1.0, 0.0), std::invalid_argument);
}

TEST(Quantize, NegativeCoefficientCarriesSignBit) {
  const auto q = serialize_decompositions(std::vector{make({4}, Eigen::MatrixXd::Constant(1, 1, -2.3))}, 1, 0.5);
  EXPECT_EQ(q.coeff_streams[0], std::vector<std::uint64_t>{5});
  EXPECT_EQ(q.sign_streams[0], std::vector<std::uint64_t>{1});
}

TEST(Quantize, Dequantize) {
  EXPECT_DOUBLE_EQ(dequantize_magnitude(4, 1.0), 4.0);
  EXPECT_DOUBLE_EQ(dequantize_magnitude(0, 0.25), 0.0);
}

TEST(Quantize, RoundTripErrorWithinHalfStep) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-100.0, 100.0);
  std::uniform_real_distribution<double> step(1e-3, 10.0);
  for (int i = 0; i < 10000; ++i) {
    const double c = u(rng), d = step(rng);
    EXPECT_LE(std::abs(dequantize_magnitude(quantize_magnitude(c, d), d) - std::abs(c)), d / 2 * (1 + 1e-12));
  }
}

TEST(Quantize, IndicesSortedAndDeltaCoded) {
  Eigen::MatrixXd c(3, 1);
  c << 1.0, -2.0, 3.0;
  const auto q = serialize_decompositions(std::vector{make({5, 2, 9}, c)}, 1, 1.0);
  EXPECT_EQ(q.index_stream, (std::vector<std::uint64_t>{2, 3, 4}));
  // coefficients follow the induced order 2, 5, 9
  EXPECT_EQ(q.coeff_streams[0], (std::vector<std::uint64_t>{2, 1, 3}));
  EXPECT_EQ(q.sign_streams[0], (std::vector<std::uint64_t>{1, 0, 0}));
}

TEST(Quantize, BlocksSeparatedByZero) {
  const auto q = serialize_decompositions(
      std::vector{make({1}, Eigen::MatrixXd::Ones(1, 2)), make({4, 3}, Eigen::MatrixXd::Ones(2, 2))}, 2, 1.0);
  EXPECT_EQ(q.index_stream, (std::vector<std::uint64_t>{1, 0, 3, 1}));
}

TEST(Quantize, ZeroMagnitudeKeepsSlotWithPositiveSign) {
  Eigen::MatrixXd c(2, 2);
  c << -0.1, 5.0, 2.0, -0.2;
  const auto q = serialize_decompositions(std::vector{make({7, 9}, c)}, 2, 1.0);
  EXPECT_EQ(q.coeff_streams[0], (std::vector<std::uint64_t>{0, 2}));
  EXPECT_EQ(q.sign_streams[0], (std::vector<std::uint64_t>{0, 0}));
  EXPECT_EQ(q.coeff_streams[1], (std::vector<std::uint64_t>{5, 0}));
  EXPECT_EQ(q.sign_streams[1], (std::vector<std::uint64_t>{0, 0}));
}

TEST(Quantize, DuplicateIndexRejected) {
  EXPECT_THROW(serialize_decompositions(std::vector{make({3, 3}, Eigen::MatrixXd::Ones(2, 1))}, 1, 1.0),
               std::invalid_argument);
}

TEST(Quantize, ParseCumulativeSums) {
  QuantizedBlockSet q;
  q.block_count = 1;
  q.channel_count = 1;
  q.index_stream = {2, 3, 4};
  q.coeff_streams = {{1, 2, 3}};
  q.sign_streams = {{0, 1, 0}};
  const auto blocks = parse_streams(q);
  ASSERT_EQ(blocks.size(), 1u);
  EXPECT_EQ(blocks[0].indices, (std::vector<std::size_t>{2, 5, 9}));
  EXPECT_EQ(blocks[0].quantized(1, 0), -2);
}

TEST(Quantize, EmptyBlockSegment) {
  QuantizedBlockSet q;
  q.block_count = 3;
  q.channel_count = 1;
  q.index_stream = {0, 4, 0};
  q.coeff_streams = {{7}};
  q.sign_streams = {{0}};
  const auto blocks = parse_streams(q);
  EXPECT_EQ(blocks[0].indices.size(), 0u);
  EXPECT_EQ(blocks[1].indices, std::vector<std::size_t>{4});
  EXPECT_EQ(blocks[2].indices.size(), 0u);
}

TEST(Quantize, MalformedStreamsReportPosition) {
  QuantizedBlockSet q;
  q.block_count = 2;
  q.channel_count = 1;
  q.index_stream = {1, 0, 2, 0};
  q.coeff_streams = {{1, 1}};
  q.sign_streams = {{0, 0}};
  try {
    parse_streams(q);
    FAIL() << "expected StreamFormatError";
  } catch (const StreamFormatError& e) {
    EXPECT_EQ(e.position(), 3u);
  }
  q.index_stream = {1, 0, 2};
  q.coeff_streams = {{1}};
  EXPECT_THROW(parse_streams(q), StreamFormatError);
  q.coeff_streams = {{1, 1}};
  q.sign_streams = {{0, 2}};
  EXPECT_THROW(parse_streams(q), StreamFormatError);
}

TEST(Quantize, SerializeParseRoundTripProperty) {
  std::mt19937_64 rng(2718);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t channels = 1 + trial % 3;
    const double delta = 0.01 + (trial % 17) * 0.1;
    const auto decs = random_decomps(rng, 1 + trial % 7, channels, 64);
    const auto q = serialize_decompositions(decs, channels, delta);

    // stream invariants
    std::size_t zeros = 0, total = 0;
    for (auto v : q.index_stream) zeros += v == 0;
    for (const auto& d : decs) total += d.size();
    EXPECT_EQ(zeros, decs.size() - 1);
    for (std::size_t j = 0; j < channels; ++j) {
      EXPECT_EQ(q.coeff_streams[j].size(), total);
      EXPECT_EQ(q.sign_streams[j].size(), total);
    }

    const auto parsed = parse_streams(q);
    ASSERT_EQ(parsed.size(), decs.size());
    for (std::size_t b = 0; b < decs.size(); ++b) {
      auto idx = decs[b].indices;
      std::vector<std::size_t> order(idx.size());
      std::iota(order.begin(), order.end(), 0);
      std::sort(order.begin(), order.end(), [&](auto x, auto y) { return idx[x] < idx[y]; });
      ASSERT_EQ(parsed[b].indices.size(), idx.size());
      for (std::size_t i = 0; i < idx.size(); ++i) {
        EXPECT_EQ(parsed[b].indices[i], idx[order[i]]);
        for (std::size_t j = 0; j < channels; ++j) {
          const double c = decs[b].coefficients(static_cast<Eigen::Index>(order[i]), static_cast<Eigen::Index>(j));
          const auto mag = static_cast<std::int64_t>(quantize_magnitude(c, delta));
          EXPECT_EQ(parsed[b].quantized(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)),
                    (c < 0 && mag != 0) ? -mag : mag);
        }
      }
    }
    // re-serializing the parsed blocks is the identity on streams
    std::vector<AtomicDecomposition> back;
    for (const auto& p : parsed) back.push_back(p.dequantize(delta));
    EXPECT_EQ(serialize_decompositions(back, channels, delta), q);
  }
}

// Quantization error of the synthesized signal is bounded by the per-
// coefficient error times the largest Gram eigenvalue of each block.
TEST(Quantize, DistortionBoundedThroughGramEigenvalue) {
  const std::size_t nb = 32;
  const auto dict = TrigDictionary::with_redundancy(nb);
  std::mt19937_64 rng(8);
  const auto blocks = tt::random_blocks(rng, 4, nb, 2);
  const auto res = hbw_pursuit(blocks, dict, 30);
  const double delta = 0.05;
  double realized = 0.0, bound = 0.0;
  std::size_t coefficients = 0;
  for (const auto& dec : res.decompositions) {
    if (dec.size() == 0) continue;
    const auto q = serialize_decompositions(std::vector{dec}, 2, delta);
    const auto rec = parse_streams(q)[0].dequantize(delta);
    const Eigen::MatrixXd a = tt::atom_matrix(nb, 2 * nb, rec.indices);
    Eigen::MatrixXd sorted_c(rec.coefficients.rows(), 2);
    for (std::size_t i = 0; i < rec.indices.size(); ++i) {
      const auto pos = std::find(dec.indices.begin(), dec.indices.end(), rec.indices[i]) - dec.indices.begin();
      sorted_c.row(static_cast<Eigen::Index>(i)) = dec.coefficients.row(pos);
    }
    const Eigen::MatrixXd e = sorted_c - rec.coefficients;
    EXPECT_LE(e.cwiseAbs().maxCoeff(), delta / 2 + 1e-15);
    const double lambda = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(a.transpose() * a).eigenvalues().maxCoeff();
    realized += (a * e).squaredNorm();
    bound += lambda * e.squaredNorm();
    coefficients += static_cast<std::size_t>(e.size());
  }
  EXPECT_LE(realized, bound * (1 + 1e-12));
  EXPECT_LE(realized, static_cast<double>(coefficients) * delta * delta / 4 * 4.0);
}
