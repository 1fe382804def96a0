#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "tdc/bytes.hpp"
#include "tdc/signal.hpp"

namespace tdc {

class WavError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace wav_detail {
inline constexpr std::uint16_t kFormatPcm = 0x0001;
inline constexpr std::uint16_t kFormatFloat = 0x0003;
inline constexpr std::uint16_t kFormatExtensible = 0xFFFE;

inline bool tag_is(std::span<const std::uint8_t> t, const char* s) {
  return t.size() == 4 && std::memcmp(t.data(), s, 4) == 0;
}
}  // namespace wav_detail

/// Parses RIFF/WAVE with 16-bit PCM or 32-bit float samples. PCM values map
/// to s / 32768.
inline MultichannelSignal parse_wav(std::span<const std::uint8_t> data) {
  using namespace wav_detail;
  ByteReader r(data);
  std::span<const std::uint8_t> tag;
  std::uint32_t riff_size = 0;
  if (!r.take_span(4, tag) || !tag_is(tag, "RIFF")) throw WavError("not a RIFF file");
  if (!r.take(riff_size)) throw WavError("truncated RIFF header");
  if (!r.take_span(4, tag) || !tag_is(tag, "WAVE")) throw WavError("RIFF form is not WAVE");

  bool have_fmt = false;
  std::uint16_t format = 0, channels = 0, bits = 0, block_align = 0;
  std::uint32_t rate = 0;
  std::span<const std::uint8_t> payload;
  bool have_data = false;

  while (r.remaining() >= 8 && !have_data) {
    std::uint32_t size = 0;
    r.take_span(4, tag);
    r.take(size);
    std::span<const std::uint8_t> body;
    if (!r.take_span(size, body)) throw WavError("chunk overruns file");
    if (size % 2 == 1) r.skip(1);

    if (tag_is(tag, "fmt ")) {
      ByteReader f(body);
      std::uint32_t byte_rate = 0;
      if (!f.take(format) || !f.take(channels) || !f.take(rate) || !f.take(byte_rate) ||
          !f.take(block_align) || !f.take(bits)) {
        throw WavError("malformed fmt chunk");
      }
      if (format == kFormatExtensible) {
        std::uint16_t cb = 0, valid = 0, sub = 0;
        std::uint32_t mask = 0;
        if (!f.take(cb) || !f.take(valid) || !f.take(mask) || !f.take(sub)) {
          throw WavError("malformed extensible fmt chunk");
        }
        format = sub;
      }
      have_fmt = true;
    } else if (tag_is(tag, "data")) {
      payload = body;
      have_data = true;
    }
  }
  if (!have_fmt) throw WavError("missing fmt chunk");
  if (!have_data) throw WavError("missing data chunk");
  if (channels == 0) throw WavError("zero channels");
  const bool pcm16 = format == kFormatPcm && bits == 16;
  const bool float32 = format == kFormatFloat && bits == 32;
  if (!pcm16 && !float32) {
    throw WavError("unsupported WAV encoding (format " + std::to_string(format) + ", " +
                   std::to_string(bits) + " bits)");
  }
  const std::size_t frame = static_cast<std::size_t>(channels) * (bits / 8);
  if (block_align != frame) throw WavError("inconsistent block alignment");
  const std::size_t frames = payload.size() / frame;

  MultichannelSignal sig;
  sig.sample_rate = rate;
  sig.samples.resize(static_cast<Eigen::Index>(frames), channels);
  ByteReader p(payload);
  for (std::size_t i = 0; i < frames; ++i) {
    for (std::uint16_t c = 0; c < channels; ++c) {
      double v = 0.0;
      if (pcm16) {
        std::uint16_t raw = 0;
        p.take(raw);
        v = static_cast<double>(static_cast<std::int16_t>(raw)) / 32768.0;
      } else {
        std::uint32_t raw = 0;
        p.take(raw);
        v = static_cast<double>(std::bit_cast<float>(raw));
      }
      sig.samples(static_cast<Eigen::Index>(i), c) = v;
    }
  }
  return sig;
}

inline MultichannelSignal read_wav(const std::filesystem::path& path) {
  return parse_wav(read_file(path));
}

/// Sample value as 16-bit PCM: round half away from zero, clip.
inline std::int16_t to_pcm16(double x) {
  const double s = std::round(x * 32768.0);
  return static_cast<std::int16_t>(std::clamp(s, -32768.0, 32767.0));
}

/// Signal as it comes back from a 16-bit PCM round trip.
inline Eigen::MatrixXd pcm16_rounded(const Eigen::MatrixXd& x) {
  return x.unaryExpr([](double v) { return static_cast<double>(to_pcm16(v)) / 32768.0; });
}

inline std::vector<std::uint8_t> encode_wav_pcm16(const MultichannelSignal& sig) {
  const auto channels = static_cast<std::uint16_t>(sig.channels());
  const std::uint64_t data_bytes = static_cast<std::uint64_t>(sig.length()) * channels * 2;
  if (data_bytes + 36 > std::numeric_limits<std::uint32_t>::max()) {
    throw WavError("signal too long for a RIFF file");
  }
  ByteWriter w;
  w.put_tag("RIFF");
  w.put(static_cast<std::uint32_t>(36 + data_bytes));
  w.put_tag("WAVE");
  w.put_tag("fmt ");
  w.put(std::uint32_t{16});
  w.put(wav_detail::kFormatPcm);
  w.put(channels);
  w.put(sig.sample_rate);
  w.put(static_cast<std::uint32_t>(sig.sample_rate * channels * 2u));
  w.put(static_cast<std::uint16_t>(channels * 2));
  w.put(std::uint16_t{16});
  w.put_tag("data");
  w.put(static_cast<std::uint32_t>(data_bytes));
  for (Eigen::Index i = 0; i < sig.samples.rows(); ++i) {
    for (Eigen::Index c = 0; c < sig.samples.cols(); ++c) {
      w.put(static_cast<std::uint16_t>(to_pcm16(sig.samples(i, c))));
    }
  }
  return std::move(w.bytes());
}

inline void write_wav(const std::filesystem::path& path, const MultichannelSignal& sig) {
  write_file(path, encode_wav_pcm16(sig));
}

}  // namespace tdc
