#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <boost/crc.hpp>

#include "tdc/bytes.hpp"
#include "tdc/entropy.hpp"
#include "tdc/quantize.hpp"

namespace tdc {

// .tdc layout, all integers little-endian:
//
//   "TDC1"            4 bytes
//   version           u16
//   sample_rate       u32
//   channels L        u16
//   length N          u64   samples per channel
//   block_size N_b    u32
//   half_size M       u32
//   block_count Q     u32
//   total_atoms K     u64
//   delta             f64   IEEE-754 binary64
//   1 + 2L stream records, in payload order st_ind, st_cf^1..L, st_sg^1..L:
//     alphabet_bound  u32
//     symbol_count    u64
//     byte_length     u64
//   header_crc        u32   CRC-32 of every byte above
//   payload_crc       u32   CRC-32 of the concatenated payloads
//   payloads          arithmetic-coded streams, back to back

inline constexpr std::uint16_t kTdcVersion = 1;
inline constexpr std::size_t kTdcFixedHeaderBytes = 4 + 2 + 4 + 2 + 8 + 4 + 4 + 4 + 8 + 8;
inline constexpr std::size_t kTdcStreamRecordBytes = 4 + 8 + 8;

enum class TdcErrorKind {
  Truncated,
  BadMagic,
  UnsupportedVersion,
  HeaderChecksum,
  PayloadChecksum,
  StreamLength,
  Geometry,
  CorruptPayload,
};

inline std::string_view to_string(TdcErrorKind k) {
  switch (k) {
    case TdcErrorKind::Truncated: return "truncated file";
    case TdcErrorKind::BadMagic: return "bad magic";
    case TdcErrorKind::UnsupportedVersion: return "unsupported version";
    case TdcErrorKind::HeaderChecksum: return "header checksum mismatch";
    case TdcErrorKind::PayloadChecksum: return "payload checksum mismatch";
    case TdcErrorKind::StreamLength: return "stream length inconsistency";
    case TdcErrorKind::Geometry: return "inconsistent geometry";
    case TdcErrorKind::CorruptPayload: return "corrupt payload";
  }
  return "unknown";
}

class TdcFormatError : public std::runtime_error {
 public:
  TdcFormatError(TdcErrorKind kind, const std::string& detail)
      : std::runtime_error(std::string(to_string(kind)) + (detail.empty() ? "" : ": " + detail)),
        kind_(kind) {}
  TdcErrorKind kind() const { return kind_; }

 private:
  TdcErrorKind kind_;
};

struct StreamRecord {
  std::uint32_t alphabet_bound = 1;
  std::uint64_t symbol_count = 0;
  std::uint64_t byte_length = 0;

  bool operator==(const StreamRecord&) const = default;
};

/// Signal geometry the encoder knows and the decoder needs.
struct TdcGeometry {
  std::uint32_t sample_rate = 44100;
  std::uint16_t channels = 0;
  std::uint64_t length = 0;
  std::uint32_t block_size = 0;
  std::uint32_t half_size = 0;
};

struct TdcHeader {
  std::uint16_t version = kTdcVersion;
  TdcGeometry geometry;
  std::uint32_t block_count = 0;
  std::uint64_t total_atoms = 0;
  double delta = 1.0;
  std::vector<StreamRecord> streams;
  std::uint32_t header_checksum = 0;
  std::uint32_t payload_checksum = 0;

  std::size_t encoded_size() const {
    return kTdcFixedHeaderBytes + streams.size() * kTdcStreamRecordBytes + 8;
  }
};

struct TdcFile {
  TdcHeader header;
  QuantizedBlockSet qset;
};

inline std::uint32_t crc32(std::span<const std::uint8_t> bytes) {
  boost::crc_32_type crc;
  crc.process_bytes(bytes.data(), bytes.size());
  return crc.checksum();
}

inline std::vector<std::uint8_t> write_tdc(const TdcGeometry& geometry, const QuantizedBlockSet& qset) {
  const std::size_t channels = geometry.channels;
  if (channels == 0) throw std::invalid_argument("tdc: zero channels");
  if (qset.channel_count != channels || qset.coeff_streams.size() != channels ||
      qset.sign_streams.size() != channels) {
    throw std::invalid_argument("tdc: channel count mismatch between geometry and streams");
  }
  if (geometry.block_size < 2 || geometry.half_size < geometry.block_size) {
    throw std::invalid_argument("tdc: invalid dictionary geometry");
  }
  const std::uint64_t nb = geometry.block_size;
  const std::uint64_t q = qset.block_count;
  if (!(q * nb >= geometry.length && geometry.length > (q - 1) * nb) || q == 0) {
    throw std::invalid_argument("tdc: block count does not cover the signal minimally");
  }
  for (std::size_t j = 0; j < channels; ++j) {
    if (qset.coeff_streams[j].size() != qset.total_atoms() ||
        qset.sign_streams[j].size() != qset.total_atoms()) {
      throw std::invalid_argument("tdc: channel streams differ in length");
    }
  }

  std::vector<std::span<const std::uint64_t>> streams;
  std::vector<std::uint64_t> bounds;
  streams.emplace_back(qset.index_stream);
  bounds.push_back(alphabet_bound_of(qset.index_stream));
  for (const auto& s : qset.coeff_streams) {
    streams.emplace_back(s);
    bounds.push_back(alphabet_bound_of(s));
  }
  for (const auto& s : qset.sign_streams) {
    streams.emplace_back(s);
    bounds.push_back(2);
  }

  std::vector<std::vector<std::uint8_t>> payloads;
  TdcHeader header;
  header.geometry = geometry;
  header.block_count = static_cast<std::uint32_t>(q);
  header.total_atoms = qset.total_atoms();
  header.delta = qset.delta;
  for (std::size_t i = 0; i < streams.size(); ++i) {
    if (bounds[i] > std::numeric_limits<std::uint32_t>::max()) {
      throw std::invalid_argument("tdc: symbol alphabet exceeds 32 bits (delta too small)");
    }
    payloads.push_back(arith_encode(streams[i], bounds[i]));
    header.streams.push_back(
        {static_cast<std::uint32_t>(bounds[i]), streams[i].size(), payloads.back().size()});
  }

  ByteWriter w;
  w.put_tag("TDC1");
  w.put(header.version);
  w.put(geometry.sample_rate);
  w.put(geometry.channels);
  w.put(geometry.length);
  w.put(geometry.block_size);
  w.put(geometry.half_size);
  w.put(header.block_count);
  w.put(header.total_atoms);
  w.put_f64(header.delta);
  for (const auto& r : header.streams) {
    w.put(r.alphabet_bound);
    w.put(r.symbol_count);
    w.put(r.byte_length);
  }
  w.put(crc32(w.bytes()));

  boost::crc_32_type payload_crc;
  for (const auto& p : payloads) payload_crc.process_bytes(p.data(), p.size());
  w.put(static_cast<std::uint32_t>(payload_crc.checksum()));
  for (const auto& p : payloads) w.put_bytes(p);
  return std::move(w.bytes());
}

/// Parses and validates the header only (checksum included), without
/// decoding payloads.
inline TdcHeader read_tdc_header(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  auto need = [](bool ok, const char* what) {
    if (!ok) throw TdcFormatError(TdcErrorKind::Truncated, what);
  };
  std::span<const std::uint8_t> magic;
  need(r.take_span(4, magic), "magic");
  if (std::string_view(reinterpret_cast<const char*>(magic.data()), 4) != "TDC1") {
    throw TdcFormatError(TdcErrorKind::BadMagic, "");
  }
  TdcHeader h;
  need(r.take(h.version), "version");
  if (h.version != kTdcVersion) {
    throw TdcFormatError(TdcErrorKind::UnsupportedVersion,
                         "file version " + std::to_string(h.version) + ", reader supports " +
                             std::to_string(kTdcVersion));
  }
  auto& g = h.geometry;
  need(r.take(g.sample_rate) && r.take(g.channels) && r.take(g.length) && r.take(g.block_size) &&
           r.take(g.half_size) && r.take(h.block_count) && r.take(h.total_atoms) &&
           r.take_f64(h.delta),
       "header fields");
  const std::size_t records = 1 + 2 * static_cast<std::size_t>(g.channels);
  if (r.remaining() < records * kTdcStreamRecordBytes + 8) {
    throw TdcFormatError(TdcErrorKind::Truncated, "stream records");
  }
  for (std::size_t i = 0; i < records; ++i) {
    StreamRecord s;
    r.take(s.alphabet_bound);
    r.take(s.symbol_count);
    r.take(s.byte_length);
    h.streams.push_back(s);
  }
  const std::size_t covered = r.position();
  r.take(h.header_checksum);
  r.take(h.payload_checksum);
  if (crc32(bytes.first(covered)) != h.header_checksum) {
    throw TdcFormatError(TdcErrorKind::HeaderChecksum, "");
  }

  const std::uint64_t nb = g.block_size;
  const std::uint64_t q = h.block_count;
  if (g.channels == 0 || nb < 2 || g.half_size < nb || q == 0 || g.length == 0 ||
      q * nb < g.length || g.length <= (q - 1) * nb || !(h.delta > 0.0)) {
    throw TdcFormatError(TdcErrorKind::Geometry, "");
  }
  return h;
}

inline TdcFile read_tdc(std::span<const std::uint8_t> bytes) {
  TdcFile file;
  file.header = read_tdc_header(bytes);
  const TdcHeader& h = file.header;
  const std::size_t channels = h.geometry.channels;

  std::span<const std::uint8_t> payload = bytes.subspan(h.encoded_size());
  std::uint64_t expected = 0;
  for (const auto& s : h.streams) expected += s.byte_length;
  if (payload.size() < expected) {
    throw TdcFormatError(TdcErrorKind::Truncated,
                         "payload has " + std::to_string(payload.size()) + " of " +
                             std::to_string(expected) + " bytes");
  }
  if (payload.size() > expected) {
    throw TdcFormatError(TdcErrorKind::StreamLength, "trailing bytes after payloads");
  }
  if (crc32(payload) != h.payload_checksum) {
    throw TdcFormatError(TdcErrorKind::PayloadChecksum, "");
  }
  for (std::size_t j = 0; j < 2 * channels; ++j) {
    if (h.streams[1 + j].symbol_count != h.total_atoms) {
      throw TdcFormatError(TdcErrorKind::StreamLength,
                           "stream " + std::to_string(1 + j) + " does not hold K symbols");
    }
  }
  if (h.streams[0].symbol_count < h.block_count - 1) {
    throw TdcFormatError(TdcErrorKind::StreamLength, "index stream shorter than separators");
  }

  std::vector<std::vector<std::uint64_t>> decoded;
  std::size_t offset = 0;
  for (std::size_t i = 0; i < h.streams.size(); ++i) {
    const auto& s = h.streams[i];
    try {
      decoded.push_back(arith_decode(payload.subspan(offset, s.byte_length), s.symbol_count,
                                     s.alphabet_bound));
    } catch (const EntropyError& e) {
      throw TdcFormatError(TdcErrorKind::CorruptPayload,
                           "stream " + std::to_string(i) + ": " + e.what());
    }
    offset += s.byte_length;
  }

  QuantizedBlockSet& qs = file.qset;
  qs.delta = h.delta;
  qs.block_count = h.block_count;
  qs.channel_count = channels;
  qs.index_stream = std::move(decoded[0]);
  for (std::size_t j = 0; j < channels; ++j) {
    qs.coeff_streams.push_back(std::move(decoded[1 + j]));
  }
  for (std::size_t j = 0; j < channels; ++j) {
    qs.sign_streams.push_back(std::move(decoded[1 + channels + j]));
  }
  return file;
}

}  // namespace tdc
