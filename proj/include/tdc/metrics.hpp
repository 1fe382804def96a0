#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>

#include "tdc/signal.hpp"

namespace tdc {

/// SNR reported when the residual energy is at or below 1e-20 of the signal
/// energy ("lossless at tolerance").
inline constexpr double kSnrCapDb = 200.0;
inline constexpr double kLosslessEnergyRatio = 1e-20;

inline bool is_lossless_snr(double snr_db) { return snr_db >= kSnrCapDb; }

/// 10 log10(signal / residual), capped at kSnrCapDb.
inline double snr_from_energies(double signal_energy, double residual_energy) {
  if (residual_energy <= kLosslessEnergyRatio * signal_energy) return kSnrCapDb;
  return 10.0 * std::log10(signal_energy / residual_energy);
}

inline double snr_db(const Eigen::Ref<const Eigen::MatrixXd>& original,
                     const Eigen::Ref<const Eigen::MatrixXd>& recovered) {
  if (original.rows() != recovered.rows() || original.cols() != recovered.cols()) {
    throw std::invalid_argument("snr: signals differ in shape");
  }
  const double energy = original.squaredNorm();
  if (energy == 0.0) throw std::invalid_argument("snr: original signal is all zeros");
  return snr_from_energies(energy, (original - recovered).squaredNorm());
}

inline double snr_db(const MultichannelSignal& original, const MultichannelSignal& recovered) {
  return snr_db(original.samples, recovered.samples);
}

struct QualityReport {
  double snr_db = 0.0;
  std::uint64_t file_bytes = 0;
  double duration_s = 0.0;
  double kbps = 0.0;
};

/// Rate of a file of `file_bytes` holding `length` samples per channel.
inline QualityReport rate_report(std::uint64_t file_bytes, std::uint32_t sample_rate,
                                 std::uint64_t length) {
  if (sample_rate == 0 || length == 0) {
    throw std::invalid_argument("rate_report: sample rate and length must be positive");
  }
  QualityReport r;
  r.file_bytes = file_bytes;
  r.duration_s = static_cast<double>(length) / static_cast<double>(sample_rate);
  r.kbps = 8.0 * static_cast<double>(file_bytes) / 1000.0 / r.duration_s;
  return r;
}

}  // namespace tdc
