#include <random>

#include <gtest/gtest.h>

#include "tdc/codec.hpp"
#include "test_support.hpp"

using namespace tdc;
namespace tt = tdc::testing;

namespace {

// Stereo clip where every block is a short sum of atoms plus optional noise.
MultichannelSignal sparse_clip(std::uint64_t seed, std::size_t nb, std::size_t q, std::size_t per_block,
                               double noise_rms, std::size_t length = 0) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(1, 4 * nb);
  std::uniform_real_distribution<double> amp(0.5, 1.5);
  std::normal_distribution<double> g;
  const double scale = 0.3 * std::sqrt(static_cast<double>(nb) / 2.0) / std::sqrt(static_cast<double>(per_block));
  MultichannelSignal s;
  s.samples = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(nb * q), 2);
  for (std::size_t b = 0; b < q; ++b) {
    for (std::size_t k = 0; k < per_block; ++k) {
      const Eigen::VectorXd d = tt::oracle_atom(nb, 2 * nb, pick(rng));
      for (Eigen::Index j = 0; j < 2; ++j) {
        const double a = scale * amp(rng) * ((rng() & 1) ? 1.0 : -1.0);
        s.samples.block(static_cast<Eigen::Index>(b * nb), j, static_cast<Eigen::Index>(nb), 1) += a * d;
      }
    }
  }
  for (Eigen::Index i = 0; i < s.samples.size(); ++i) s.samples.data()[i] += noise_rms * g(rng);
  if (length > 0) s.samples.conservativeResize(static_cast<Eigen::Index>(length), 2);
  s.samples = pcm16_rounded(s.samples);
  return s;
}

EncodeOptions opts(std::size_t nb) {
  EncodeOptions o;
  o.block_size = nb;
  return o;
}

}  // namespace

TEST(Codec, ErrorModelMatchesRealDecode) {
  const std::size_t nb = 64;
  const auto sig = sparse_clip(1, nb, 6, 5, 0.01);
  const auto dict = TrigDictionary::with_redundancy(nb);
  const auto part = partition(sig, nb);
  HbwPursuit p(part.blocks, dict);
  for (int i = 0; i < 60; ++i) p.step();
  const codec_detail::QuantizationErrorModel model(dict, p);
  const auto decomps = p.decompositions();
  for (double delta : {1e-4, 1e-3, 1e-2, 5e-2, 0.2}) {
    const auto bytes = write_tdc(geometry_of(sig, dict), serialize_decompositions(decomps, 2, delta));
    const double real = snr_db(sig.samples, decode_tdc(bytes).samples);
    EXPECT_NEAR(model.snr_db(delta), real, 1e-6) << delta;
  }
}

TEST(Codec, HitsTargetSnr) {
  const auto sig = sparse_clip(2, 256, 12, 5, 0.003, 256 * 12 - 100);
  for (double target : {15.0, 25.0, 33.0}) {
    auto o = opts(256);
    o.target_snr_db = target;
    const auto r = encode(sig, o);
    EXPECT_TRUE(r.target_reached) << target;
    EXPECT_NEAR(r.decoded_snr_db, target, 0.05) << target;
    EXPECT_NEAR(decoded_snr_db(sig, r.bytes), r.decoded_snr_db, 1e-12);
    EXPECT_GE(r.pursuit_snr_db, target + 3.0);
  }
}

TEST(Codec, ExactlySparseStereoAtHighTarget) {
  const std::size_t nb = 256, q = 4;
  MultichannelSignal sig;
  sig.samples = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(nb * q), 2);
  for (std::size_t b = 0; b < q; ++b) {
    const std::size_t a = 10 + 40 * b;
    const Eigen::VectorXd d1 = tt::oracle_atom(nb, 2 * nb, a);
    const Eigen::VectorXd d2 = tt::oracle_atom(nb, 2 * nb, 2 * nb + a + 60);
    auto blk = sig.samples.middleRows(static_cast<Eigen::Index>(b * nb), static_cast<Eigen::Index>(nb));
    blk.col(0) = 4.0 * d1 - 3.0 * d2;
    blk.col(1) = -2.0 * d1 + 5.0 * d2;
  }
  auto o = opts(nb);
  o.target_snr_db = 80.0;
  const auto r = encode(sig, o);
  EXPECT_EQ(r.total_atoms, 2 * q);
  EXPECT_TRUE(r.target_reached);
  EXPECT_GE(r.decoded_snr_db, 80.0 - 0.05);
  const auto f = read_tdc(r.bytes);
  const auto blocks = parse_streams(f.qset);
  for (std::size_t b = 0; b < q; ++b) {
    const std::size_t a = 10 + 40 * b;
    EXPECT_EQ(blocks[b].indices, (std::vector<std::size_t>{a, 2 * nb + a + 60}));
  }
}

TEST(Codec, FixedBudgetAndStepAreDeterministic) {
  const auto sig = sparse_clip(3, 128, 5, 4, 0.01);
  auto o = opts(128);
  o.atoms = 17;
  o.delta = 0.01;
  const auto a = encode(sig, o);
  const auto b = encode(sig, o);
  EXPECT_EQ(a.bytes, b.bytes);
  EXPECT_EQ(a.total_atoms, 17u);
  EXPECT_EQ(a.delta_evaluations, 0u);
  const auto h = read_tdc_header(a.bytes);
  EXPECT_EQ(h.total_atoms, 17u);
  EXPECT_EQ(h.delta, 0.01);
}

TEST(Codec, ThreadCountDoesNotChangeOutput) {
  const auto sig = sparse_clip(4, 128, 9, 6, 0.02);
  auto o = opts(128);
  o.target_snr_db = 20.0;
  const auto one = encode(sig, o);
  o.threads = 4;
  EXPECT_EQ(encode(sig, o).bytes, one.bytes);
}

TEST(Codec, SaturatedPursuitWithFineStepIsNearLossless) {
  const auto sig = sparse_clip(5, 16, 3, 3, 0.05, 40);
  auto o = opts(16);
  o.atoms = 10000;
  o.delta = 1e-8;
  const auto r = encode(sig, o);
  EXPECT_TRUE(r.pursuit_saturated);
  EXPECT_EQ(r.total_atoms, 3u * 16u);
  const auto dec = decode_tdc(r.bytes);
  EXPECT_EQ(dec.length(), 40u);
  EXPECT_LE((dec.samples - sig.samples).cwiseAbs().maxCoeff(), 1e-4);
}

TEST(Codec, SilenceEncodesWithoutAtoms) {
  MultichannelSignal sig;
  sig.samples = Eigen::MatrixXd::Zero(500, 2);
  auto o = opts(64);
  o.target_snr_db = 30.0;
  const auto r = encode(sig, o);
  EXPECT_EQ(r.total_atoms, 0u);
  const auto dec = decode_tdc(r.bytes);
  EXPECT_EQ(dec.length(), 500u);
  EXPECT_EQ(dec.samples.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Codec, RejectsConflictingOptions) {
  const auto sig = sparse_clip(6, 16, 2, 1, 0.0);
  auto o = opts(16);
  EXPECT_THROW(encode(sig, o), std::invalid_argument);
  o.atoms = 3;
  o.target_snr_db = 10.0;
  EXPECT_THROW(encode(sig, o), std::invalid_argument);
}

TEST(Codec, OutOfDictionaryIndexIsCorruptPayload) {
  QuantizedBlockSet s;
  s.delta = 1.0;
  s.block_count = 1;
  s.channel_count = 1;
  s.index_stream = {65};  // 2M = 64 atoms
  s.coeff_streams = {{1}};
  s.sign_streams = {{0}};
  const auto bytes = write_tdc({44100, 1, 16, 16, 32}, s);
  try {
    decode_tdc(bytes);
    FAIL();
  } catch (const TdcFormatError& e) {
    EXPECT_EQ(e.kind(), TdcErrorKind::CorruptPayload);
  }
}

TEST(Codec, MissingSeparatorsAreStreamLengthErrors) {
  QuantizedBlockSet s;
  s.delta = 1.0;
  s.block_count = 2;
  s.channel_count = 1;
  s.index_stream = {3, 4, 5};  // no separator for the second block
  s.coeff_streams = {{1, 1, 1}};
  s.sign_streams = {{0, 0, 0}};
  const auto bytes = write_tdc({44100, 1, 20, 16, 32}, s);
  try {
    decode_tdc(bytes);
    FAIL();
  } catch (const TdcFormatError& e) {
    EXPECT_EQ(e.kind(), TdcErrorKind::StreamLength);
  }
}

TEST(DeltaSearch, BisectsMonotoneCurve) {
  // snr falls 6.02 dB per doubling of the step
  auto f = [](double d) { return -20.0 * std::log10(d); };
  const auto r = codec_detail::search_delta(f, 1e-6, 10.0, 40.0, 0.05);
  EXPECT_TRUE(r.converged);
  EXPECT_NEAR(r.snr_db, 40.0, 0.05);
  EXPECT_LE(r.evaluations, 42u);
}

TEST(DeltaSearch, UnreachableTargetReportsBestEffort) {
  auto f = [](double d) { return std::min(30.0, -20.0 * std::log10(d)); };
  const auto r = codec_detail::search_delta(f, 1e-6, 10.0, 50.0, 0.05);
  EXPECT_FALSE(r.converged);
  EXPECT_EQ(r.snr_db, 30.0);
}

TEST(DeltaSearch, FallsBackWhenNotMonotone) {
  // a bump that breaks monotonicity on the first midpoint
  auto f = [](double d) {
    const double base = -20.0 * std::log10(d);
    return std::abs(std::log(d) - std::log(std::sqrt(1e-6 * 10.0))) < 0.5 ? base + 200.0 : base;
  };
  const auto r = codec_detail::search_delta(f, 1e-6, 10.0, 40.0, 0.05);
  EXPECT_TRUE(r.converged);
  EXPECT_NEAR(r.snr_db, 40.0, 0.05);
}
