#pragma once

#include <algorithm>
#include <bit>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace tdc {

class EntropyError : public std::runtime_error {
 public:
  EntropyError(const std::string& what, std::size_t offset)
      : std::runtime_error(what + " at byte " + std::to_string(offset)), offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

namespace entropy_detail {

inline constexpr std::uint32_t kTop = 1u << 24;
inline constexpr std::uint32_t kMaxTotal = 1u << 16;
inline constexpr std::uint32_t kIncrement = 32;
inline constexpr std::uint64_t kDirectSymbols = 8192;
inline constexpr std::uint32_t kRawChunkBits = 16;

// Order-0 adaptive frequency table over a Fenwick tree. Counts start at 1
// and are halved (rounding up) once the total exceeds 2^16.
class FrequencyModel {
 public:
  explicit FrequencyModel(std::size_t symbols) : freq_(symbols, 1), tree_(symbols + 1, 0) {
    rebuild();
  }

  std::size_t size() const { return freq_.size(); }
  std::uint32_t total() const { return total_; }
  std::uint32_t frequency(std::size_t s) const { return freq_[s]; }

  /// Sum of frequencies of symbols < s.
  std::uint32_t cumulative(std::size_t s) const {
    std::uint32_t acc = 0;
    for (std::size_t i = s; i > 0; i -= i & (~i + 1)) acc += tree_[i];
    return acc;
  }

  /// Symbol whose cumulative range contains `target` (< total).
  std::size_t find(std::uint32_t target) const {
    std::size_t pos = 0;
    std::size_t step = std::bit_floor(freq_.size());
    for (; step > 0; step >>= 1) {
      const std::size_t next = pos + step;
      if (next <= freq_.size() && tree_[next] <= target) {
        pos = next;
        target -= tree_[next];
      }
    }
    return pos;
  }

  void update(std::size_t s) {
    freq_[s] += kIncrement;
    total_ += kIncrement;
    for (std::size_t i = s + 1; i < tree_.size(); i += i & (~i + 1)) tree_[i] += kIncrement;
    if (total_ > kMaxTotal) {
      for (auto& f : freq_) f = (f + 1) / 2;
      rebuild();
    }
  }

 private:
  void rebuild() {
    std::fill(tree_.begin(), tree_.end(), 0);
    total_ = 0;
    for (std::size_t i = 0; i < freq_.size(); ++i) {
      total_ += freq_[i];
      for (std::size_t k = i + 1; k < tree_.size(); k += k & (~k + 1)) tree_[k] += freq_[i];
    }
  }

  std::vector<std::uint32_t> freq_;
  std::vector<std::uint32_t> tree_;
  std::uint32_t total_ = 0;
};

// 32-bit range coder with carry propagation through a cached byte.
class RangeEncoder {
 public:
  void encode(std::uint32_t start, std::uint32_t size, std::uint32_t total) {
    const std::uint32_t r = range_ / total;
    low_ += static_cast<std::uint64_t>(r) * start;
    range_ = r * size;
    while (range_ < kTop) {
      range_ <<= 8;
      shift_low();
    }
  }

  std::vector<std::uint8_t> finish() {
    for (int i = 0; i < 5; ++i) shift_low();
    return std::move(out_);
  }

 private:
  void shift_low() {
    if (static_cast<std::uint32_t>(low_) < 0xFF000000u || (low_ >> 32) != 0) {
      const auto carry = static_cast<std::uint8_t>(low_ >> 32);
      std::uint8_t temp = cache_;
      do {
        out_.push_back(static_cast<std::uint8_t>(temp + carry));
        temp = 0xFF;
      } while (--cache_size_ != 0);
      cache_ = static_cast<std::uint8_t>(static_cast<std::uint32_t>(low_) >> 24);
    }
    ++cache_size_;
    low_ = static_cast<std::uint64_t>(static_cast<std::uint32_t>(low_) << 8);
  }

  std::uint64_t low_ = 0;
  std::uint32_t range_ = 0xFFFFFFFFu;
  std::uint8_t cache_ = 0;
  std::uint64_t cache_size_ = 1;
  std::vector<std::uint8_t> out_;
};

class RangeDecoder {
 public:
  explicit RangeDecoder(std::span<const std::uint8_t> in) : in_(in) {
    if (next_byte() != 0) throw EntropyError("range decoder: bad leading byte", 0);
    for (int i = 0; i < 4; ++i) code_ = (code_ << 8) | next_byte();
  }

  std::uint32_t decode_target(std::uint32_t total) {
    step_ = range_ / total;
    const std::uint32_t v = code_ / step_;
    if (v >= total) throw EntropyError("range decoder state violation", pos_);
    return v;
  }

  void consume(std::uint32_t start, std::uint32_t size) {
    code_ -= step_ * start;
    range_ = step_ * size;
    if (code_ >= range_) throw EntropyError("range decoder state violation", pos_);
    while (range_ < kTop) {
      code_ = (code_ << 8) | next_byte();
      range_ <<= 8;
    }
  }

  std::size_t position() const { return pos_; }

 private:
  std::uint32_t next_byte() {
    if (pos_ >= in_.size()) throw EntropyError("truncated entropy payload", pos_);
    return in_[pos_++];
  }

  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
  std::uint32_t code_ = 0;
  std::uint32_t range_ = 0xFFFFFFFFu;
  std::uint32_t step_ = 1;
};

// Symbols at or above kDirectSymbols are sent as an escape, then their bit
// length through a second adaptive model, then the bits below the leading
// one as raw equiprobable chunks.
struct SymbolCoder {
  explicit SymbolCoder(std::uint64_t alphabet_bound)
      : direct(std::min(alphabet_bound, kDirectSymbols)),
        escaped(alphabet_bound > kDirectSymbols),
        main(static_cast<std::size_t>(direct + (escaped ? 1 : 0))),
        lengths(65) {}

  void encode(RangeEncoder& enc, std::uint64_t s) {
    if (s < direct) {
      put(enc, main, static_cast<std::size_t>(s));
      return;
    }
    put(enc, main, static_cast<std::size_t>(direct));
    const std::uint64_t v = s - direct;
    const auto bits = static_cast<std::size_t>(std::bit_width(v));
    put(enc, lengths, bits);
    if (bits <= 1) return;
    std::size_t remaining = bits - 1;
    while (remaining > 0) {
      const std::size_t chunk = std::min<std::size_t>(remaining, kRawChunkBits);
      remaining -= chunk;
      const auto value = static_cast<std::uint32_t>((v >> remaining) & ((1u << chunk) - 1));
      enc.encode(value, 1, 1u << chunk);
    }
  }

  std::uint64_t decode(RangeDecoder& dec) {
    const std::size_t s = get(dec, main);
    if (s < direct) return s;
    const std::size_t bits = get(dec, lengths);
    if (bits == 0) return direct;
    std::uint64_t v = 1;
    std::size_t remaining = bits - 1;
    while (remaining > 0) {
      const std::size_t chunk = std::min<std::size_t>(remaining, kRawChunkBits);
      remaining -= chunk;
      const std::uint32_t value = dec.decode_target(1u << chunk);
      dec.consume(value, 1);
      v = (v << chunk) | value;
    }
    return direct + v;
  }

  static void put(RangeEncoder& enc, FrequencyModel& m, std::size_t s) {
    enc.encode(m.cumulative(s), m.frequency(s), m.total());
    m.update(s);
  }

  static std::size_t get(RangeDecoder& dec, FrequencyModel& m) {
    const std::uint32_t target = dec.decode_target(m.total());
    const std::size_t s = m.find(target);
    if (s >= m.size()) throw EntropyError("symbol outside model", dec.position());
    dec.consume(m.cumulative(s), m.frequency(s));
    m.update(s);
    return s;
  }

  std::uint64_t direct;
  bool escaped;
  FrequencyModel main;
  FrequencyModel lengths;
};

}  // namespace entropy_detail

/// Adaptive arithmetic coding of one symbol stream. Output is empty for an
/// empty stream and otherwise depends only on the symbols and the bound.
inline std::vector<std::uint8_t> arith_encode(std::span<const std::uint64_t> symbols,
                                              std::uint64_t alphabet_bound) {
  if (alphabet_bound < 1) throw std::invalid_argument("alphabet bound must be >= 1");
  if (symbols.empty()) return {};
  entropy_detail::SymbolCoder coder(alphabet_bound);
  entropy_detail::RangeEncoder enc;
  for (std::size_t i = 0; i < symbols.size(); ++i) {
    if (symbols[i] >= alphabet_bound) {
      throw std::invalid_argument("symbol " + std::to_string(symbols[i]) + " at position " +
                                  std::to_string(i) + " exceeds alphabet bound " +
                                  std::to_string(alphabet_bound));
    }
    coder.encode(enc, symbols[i]);
  }
  return enc.finish();
}

inline std::vector<std::uint64_t> arith_decode(std::span<const std::uint8_t> bytes,
                                               std::size_t length, std::uint64_t alphabet_bound) {
  if (alphabet_bound < 1) throw std::invalid_argument("alphabet bound must be >= 1");
  std::vector<std::uint64_t> out;
  if (length == 0) {
    if (!bytes.empty()) throw EntropyError("payload present for empty stream", 0);
    return out;
  }
  out.reserve(length);
  entropy_detail::SymbolCoder coder(alphabet_bound);
  entropy_detail::RangeDecoder dec(bytes);
  for (std::size_t i = 0; i < length; ++i) {
    const std::uint64_t s = coder.decode(dec);
    if (s >= alphabet_bound) throw EntropyError("decoded symbol exceeds alphabet", dec.position());
    out.push_back(s);
  }
  if (dec.position() != bytes.size()) {
    throw EntropyError("trailing bytes after entropy payload", dec.position());
  }
  return out;
}

/// max symbol + 1 (at least 1).
inline std::uint64_t alphabet_bound_of(std::span<const std::uint64_t> symbols) {
  std::uint64_t m = 0;
  for (auto s : symbols) m = std::max(m, s);
  return m + 1;
}

}  // namespace tdc
