#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tdc/pursuit.hpp"

namespace tdc {

/// |c| / delta rounded half up.
inline std::uint64_t quantize_magnitude(double c, double delta) {
  if (!(delta > 0.0)) throw std::invalid_argument("quantization step must be positive");
  return static_cast<std::uint64_t>(std::floor(std::abs(c) / delta + 0.5));
}

inline double dequantize_magnitude(std::uint64_t v, double delta) {
  return delta * static_cast<double>(v);
}

/// The three symbol-stream families of an encoded partition.
///
/// index_stream holds, per block, the smallest atom index followed by the
/// gaps to the next larger ones; blocks are separated by a single 0. Each
/// channel has a stream of quantized magnitudes and a stream of sign bits
/// (0 = '+', 1 = '-') in the same ascending-index order.
struct QuantizedBlockSet {
  double delta = 1.0;
  std::size_t block_count = 0;
  std::size_t channel_count = 0;
  std::vector<std::uint64_t> index_stream;
  std::vector<std::vector<std::uint64_t>> coeff_streams;
  std::vector<std::vector<std::uint64_t>> sign_streams;

  std::size_t total_atoms() const { return coeff_streams.empty() ? 0 : coeff_streams[0].size(); }

  bool operator==(const QuantizedBlockSet&) const = default;
};

class StreamFormatError : public std::runtime_error {
 public:
  StreamFormatError(const std::string& what, std::size_t position)
      : std::runtime_error(what + " at stream position " + std::to_string(position)),
        position_(position) {}
  std::size_t position() const { return position_; }

 private:
  std::size_t position_;
};

inline QuantizedBlockSet serialize_decompositions(std::span<const AtomicDecomposition> decomps,
                                                  std::size_t channels, double delta) {
  if (!(delta > 0.0)) throw std::invalid_argument("quantization step must be positive");
  QuantizedBlockSet out;
  out.delta = delta;
  out.block_count = decomps.size();
  out.channel_count = channels;
  out.coeff_streams.resize(channels);
  out.sign_streams.resize(channels);

  for (std::size_t q = 0; q < decomps.size(); ++q) {
    const auto& dec = decomps[q];
    const std::size_t k = dec.indices.size();
    if (k > 0 && static_cast<std::size_t>(dec.coefficients.cols()) != channels) {
      throw std::invalid_argument("decomposition channel count mismatch");
    }
    std::vector<std::size_t> order(k);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return dec.indices[a] < dec.indices[b]; });

    if (q > 0) out.index_stream.push_back(0);
    std::size_t previous = 0;
    for (std::size_t i = 0; i < k; ++i) {
      const std::size_t idx = dec.indices[order[i]];
      if (idx == 0) throw std::invalid_argument("atom indices are 1-based");
      if (i > 0 && idx == previous) {
        throw std::invalid_argument("duplicate atom index " + std::to_string(idx) + " in block " +
                                    std::to_string(q));
      }
      out.index_stream.push_back(idx - previous);
      previous = idx;
      for (std::size_t j = 0; j < channels; ++j) {
        const double c = dec.coefficients(static_cast<Eigen::Index>(order[i]),
                                          static_cast<Eigen::Index>(j));
        const std::uint64_t mag = quantize_magnitude(c, delta);
        out.coeff_streams[j].push_back(mag);
        out.sign_streams[j].push_back(mag != 0 && c < 0.0 ? 1 : 0);
      }
    }
  }
  return out;
}

/// One block recovered from the streams: ascending indices and signed
/// quantized coefficients (k x L).
struct ParsedBlock {
  std::vector<std::size_t> indices;
  Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic> quantized;

  AtomicDecomposition dequantize(double delta) const {
    return {indices, quantized.cast<double>() * delta};
  }
};

inline std::vector<ParsedBlock> parse_streams(const QuantizedBlockSet& qset) {
  const std::size_t channels = qset.channel_count;
  if (qset.coeff_streams.size() != channels || qset.sign_streams.size() != channels) {
    throw StreamFormatError("channel stream count mismatch", 0);
  }
  if (qset.block_count == 0) {
    if (!qset.index_stream.empty()) throw StreamFormatError("index data with zero blocks", 0);
  }

  std::vector<std::vector<std::size_t>> indices(qset.block_count);
  std::size_t q = 0;
  std::size_t current = 0;
  for (std::size_t pos = 0; pos < qset.index_stream.size(); ++pos) {
    const std::uint64_t v = qset.index_stream[pos];
    if (v == 0) {
      ++q;
      current = 0;
      if (q >= qset.block_count) throw StreamFormatError("too many block separators", pos);
      continue;
    }
    current += static_cast<std::size_t>(v);
    indices[q].push_back(current);
  }
  if (qset.block_count > 0 && q + 1 != qset.block_count) {
    throw StreamFormatError("expected " + std::to_string(qset.block_count - 1) + " separators",
                            qset.index_stream.size());
  }

  std::size_t total = 0;
  for (const auto& b : indices) total += b.size();
  for (std::size_t j = 0; j < channels; ++j) {
    if (qset.coeff_streams[j].size() != total) {
      throw StreamFormatError("coefficient stream " + std::to_string(j) + " length mismatch",
                              qset.coeff_streams[j].size());
    }
    if (qset.sign_streams[j].size() != total) {
      throw StreamFormatError("sign stream " + std::to_string(j) + " length mismatch",
                              qset.sign_streams[j].size());
    }
  }

  std::vector<ParsedBlock> out(qset.block_count);
  std::size_t offset = 0;
  for (std::size_t b = 0; b < qset.block_count; ++b) {
    const std::size_t k = indices[b].size();
    out[b].indices = std::move(indices[b]);
    out[b].quantized.resize(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(channels));
    for (std::size_t i = 0; i < k; ++i) {
      for (std::size_t j = 0; j < channels; ++j) {
        const std::uint64_t sign = qset.sign_streams[j][offset + i];
        if (sign > 1) throw StreamFormatError("sign symbol out of range", offset + i);
        const auto mag = static_cast<std::int64_t>(qset.coeff_streams[j][offset + i]);
        out[b].quantized(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
            sign ? -mag : mag;
      }
    }
    offset += k;
  }
  return out;
}

}  // namespace tdc
