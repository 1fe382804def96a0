#pragma once

#include <algorithm>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "tdc/signal.hpp"

namespace tdc {

/// Disjoint N_b x L pieces of a signal; the last one is zero-padded.
struct PartitionedSignal {
  std::vector<Eigen::MatrixXd> blocks;
  std::size_t length = 0;  // true samples per channel
  std::size_t pad_length = 0;
};

inline PartitionedSignal partition(const Eigen::Ref<const Eigen::MatrixXd>& samples,
                                   std::size_t block_size) {
  if (block_size < 2) throw std::invalid_argument("block size must be >= 2");
  const auto n = static_cast<std::size_t>(samples.rows());
  if (n == 0 || samples.cols() == 0) throw std::invalid_argument("cannot partition an empty signal");
  const std::size_t q = (n + block_size - 1) / block_size;

  PartitionedSignal out;
  out.length = n;
  out.pad_length = q * block_size - n;
  out.blocks.reserve(q);
  const auto nb = static_cast<Eigen::Index>(block_size);
  for (std::size_t b = 0; b < q; ++b) {
    Eigen::MatrixXd block = Eigen::MatrixXd::Zero(nb, samples.cols());
    const auto start = static_cast<Eigen::Index>(b * block_size);
    const Eigen::Index rows = std::min<Eigen::Index>(nb, samples.rows() - start);
    block.topRows(rows) = samples.middleRows(start, rows);
    out.blocks.push_back(std::move(block));
  }
  return out;
}

inline PartitionedSignal partition(const MultichannelSignal& sig, std::size_t block_size) {
  return partition(sig.samples, block_size);
}

/// Stacks blocks back into one signal and drops samples past `length`.
inline Eigen::MatrixXd assemble(const std::vector<Eigen::MatrixXd>& blocks, std::size_t length) {
  if (blocks.empty()) throw std::invalid_argument("no blocks to assemble");
  const Eigen::Index nb = blocks.front().rows();
  const Eigen::Index channels = blocks.front().cols();
  if (static_cast<std::size_t>(nb) * blocks.size() < length) {
    throw std::invalid_argument("blocks shorter than requested length");
  }
  Eigen::MatrixXd out(static_cast<Eigen::Index>(length), channels);
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    const auto start = static_cast<Eigen::Index>(b) * nb;
    if (start >= out.rows()) break;
    const Eigen::Index rows = std::min<Eigen::Index>(nb, out.rows() - start);
    out.middleRows(start, rows) = blocks[b].topRows(rows);
  }
  return out;
}

inline Eigen::MatrixXd assemble(const PartitionedSignal& p) { return assemble(p.blocks, p.length); }

}  // namespace tdc
