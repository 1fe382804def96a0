#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/FFT>

namespace tdc {

// Mixed cosine/sine dictionary over blocks of `block_size` samples.
//
// Atoms are addressed with 1-based indices n = 1..2M. Indices 1..M are the
// cosine family
//     d_n(i) = cos(pi (2i-1)(n-1) / 2M) / w_cos(n),       i = 1..N_b
// and indices M+1..2M the sine family, sine index s = n - M:
//     d_n(i) = sin(pi (2i-1) s / 2M) / w_sin(s).
// With M = 2 N_b the redundancy 2M / N_b is four.
//
// Inner products against every atom come from a single length-2M FFT of the
// zero-padded block: writing Y(k) = sum_j y_j exp(-2 pi i j k / 2M) with
// 0-based j, the cosine sums are Re(exp(-i pi k / 2M) Y(k)) at k = n-1 and the
// sine sums are -Im(exp(-i pi k / 2M) Y(k)) at k = s.
class TrigDictionary {
 public:
  TrigDictionary(std::size_t block_size, std::size_t half_size)
      : block_size_(block_size), half_size_(half_size) {
    if (block_size < 2) {
      throw std::invalid_argument("dictionary block size must be >= 2");
    }
    if (half_size < block_size) {
      throw std::invalid_argument("dictionary half size must be >= block size");
    }
    const double nb = static_cast<double>(block_size);
    const double m = static_cast<double>(half_size);
    const double pi = std::numbers::pi;

    w_cos_.resize(half_size);
    w_sin_.resize(half_size);
    for (std::size_t n = 1; n <= half_size; ++n) {
      if (n == 1) {
        w_cos_[0] = std::sqrt(nb);
      } else {
        const double k = static_cast<double>(n - 1);
        // 1 - cos(2x) = 2 sin^2(x), avoids cancellation for small k/M
        const double half = std::sin(pi * k / m);
        const double denom = 2.0 * (2.0 * half * half);
        w_cos_[n - 1] =
            std::sqrt(nb / 2.0 + std::sin(pi * k / m) * std::sin(2.0 * pi * k * nb / m) / denom);
      }
      if (n == half_size) {
        // closed form is 0/0 here
        w_sin_[n - 1] = std::sqrt(direct_sine_energy(n));
      } else {
        const double k = static_cast<double>(n);
        const double half = std::sin(pi * k / m);
        const double denom = 2.0 * (2.0 * half * half);
        w_sin_[n - 1] =
            std::sqrt(nb / 2.0 - std::sin(pi * k / m) * std::sin(2.0 * pi * k * nb / m) / denom);
      }
    }

    const std::size_t bins = half_size + 1;
    rotation_.resize(bins);
    for (std::size_t k = 0; k < bins; ++k) {
      rotation_[k] = std::polar(1.0, -pi * static_cast<double>(k) / (2.0 * m));
    }
  }

  /// Dictionary with the default half size M = 2 N_b.
  static TrigDictionary with_redundancy(std::size_t block_size, std::size_t redundancy = 4) {
    if (redundancy < 2 || redundancy % 2 != 0) {
      throw std::invalid_argument("redundancy must be an even integer >= 2");
    }
    return TrigDictionary(block_size, block_size * redundancy / 2);
  }

  std::size_t block_size() const { return block_size_; }
  std::size_t half_size() const { return half_size_; }
  std::size_t atom_count() const { return 2 * half_size_; }
  double redundancy() const {
    return static_cast<double>(atom_count()) / static_cast<double>(block_size_);
  }

  /// Normalization w_cos(n), 1-based n in 1..M.
  double w_cos(std::size_t n) const { return w_cos_.at(n - 1); }
  /// Normalization w_sin(n), 1-based n in 1..M.
  double w_sin(std::size_t n) const { return w_sin_.at(n - 1); }

  bool is_cosine(std::size_t n) const { return n <= half_size_; }

  /// Atom n (1-based) sampled over the block.
  Eigen::VectorXd atom(std::size_t n) const {
    check_index(n);
    Eigen::VectorXd d(static_cast<Eigen::Index>(block_size_));
    const double pi = std::numbers::pi;
    const double two_m = 2.0 * static_cast<double>(half_size_);
    if (is_cosine(n)) {
      const double k = static_cast<double>(n - 1);
      const double scale = 1.0 / w_cos_[n - 1];
      for (std::size_t i = 0; i < block_size_; ++i) {
        d[static_cast<Eigen::Index>(i)] =
            scale * std::cos(pi * static_cast<double>(2 * i + 1) * k / two_m);
      }
    } else {
      const std::size_t s = n - half_size_;
      const double k = static_cast<double>(s);
      const double scale = 1.0 / w_sin_[s - 1];
      for (std::size_t i = 0; i < block_size_; ++i) {
        d[static_cast<Eigen::Index>(i)] =
            scale * std::sin(pi * static_cast<double>(2 * i + 1) * k / two_m);
      }
    }
    return d;
  }

  /// <d_n, y> for n = 1..2M (entry n-1), cosine family first.
  Eigen::VectorXd all_inner_products(const Eigen::Ref<const Eigen::VectorXd>& y) const {
    Eigen::VectorXd out(static_cast<Eigen::Index>(atom_count()));
    all_inner_products(y, out);
    return out;
  }

  void all_inner_products(const Eigen::Ref<const Eigen::VectorXd>& y,
                          Eigen::Ref<Eigen::VectorXd> out) const {
    if (static_cast<std::size_t>(y.size()) != block_size_) {
      throw std::invalid_argument("inner product input length " + std::to_string(y.size()) +
                                  " != block size " + std::to_string(block_size_));
    }
    if (static_cast<std::size_t>(out.size()) != atom_count()) {
      throw std::invalid_argument("inner product output has wrong length");
    }
    const std::size_t nfft = 2 * half_size_;
    thread_local Workspace ws;
    ws.padded.assign(nfft, 0.0);
    for (std::size_t i = 0; i < block_size_; ++i) ws.padded[i] = y[static_cast<Eigen::Index>(i)];
    ws.spectrum.resize(half_size_ + 1);
    ws.fft.fwd(ws.spectrum.data(), ws.padded.data(), static_cast<Eigen::Index>(nfft));

    const auto m = static_cast<Eigen::Index>(half_size_);
    for (Eigen::Index n = 0; n < m; ++n) {
      out[n] = (rotation_[n] * ws.spectrum[n]).real() / w_cos_[n];
    }
    for (Eigen::Index s = 1; s <= m; ++s) {
      out[m + s - 1] = -(rotation_[s] * ws.spectrum[s]).imag() / w_sin_[s - 1];
    }
  }

  /// Same values as all_inner_products by explicit O(M N_b) summation.
  Eigen::VectorXd direct_inner_products(const Eigen::Ref<const Eigen::VectorXd>& y) const {
    if (static_cast<std::size_t>(y.size()) != block_size_) {
      throw std::invalid_argument("inner product input has wrong length");
    }
    Eigen::VectorXd out(static_cast<Eigen::Index>(atom_count()));
    for (std::size_t n = 1; n <= atom_count(); ++n) {
      out[static_cast<Eigen::Index>(n - 1)] = atom(n).dot(y);
    }
    return out;
  }

 private:
  struct Workspace {
    Workspace() { fft.SetFlag(Eigen::FFT<double>::HalfSpectrum); }
    Eigen::FFT<double> fft;
    std::vector<double> padded;
    std::vector<std::complex<double>> spectrum;
  };

  void check_index(std::size_t n) const {
    if (n < 1 || n > atom_count()) {
      throw std::out_of_range("atom index " + std::to_string(n) + " outside 1.." +
                              std::to_string(atom_count()));
    }
  }

  double direct_sine_energy(std::size_t s) const {
    const double pi = std::numbers::pi;
    const double two_m = 2.0 * static_cast<double>(half_size_);
    double acc = 0.0;
    for (std::size_t i = 0; i < block_size_; ++i) {
      const double v = std::sin(pi * static_cast<double>(2 * i + 1) * static_cast<double>(s) / two_m);
      acc += v * v;
    }
    return acc;
  }

  std::size_t block_size_;
  std::size_t half_size_;
  std::vector<double> w_cos_;
  std::vector<double> w_sin_;
  std::vector<std::complex<double>> rotation_;
};

}  // namespace tdc
