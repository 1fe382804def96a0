#pragma once

#include <cstddef>
#include <cstdint>

#include <Eigen/Dense>

namespace tdc {

/// Multichannel audio: one column per channel, one row per sample.
struct MultichannelSignal {
  Eigen::MatrixXd samples;
  std::uint32_t sample_rate = 44100;

  std::size_t length() const { return static_cast<std::size_t>(samples.rows()); }
  std::size_t channels() const { return static_cast<std::size_t>(samples.cols()); }
  double duration_seconds() const {
    return sample_rate == 0 ? 0.0 : static_cast<double>(length()) / sample_rate;
  }
};

}  // namespace tdc
