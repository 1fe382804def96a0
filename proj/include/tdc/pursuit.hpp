#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string_view>
#include <thread>
#include <vector>

#include <Eigen/Dense>

#include "tdc/dictionary.hpp"
#include "tdc/metrics.hpp"

namespace tdc {

enum class SelectionCriterion {
  Somp,    // max sum_j |<d_n, r_j>|
  MmvOmp,  // max sum_j |<d_n, r_j>|^2
  Oompml,  // max sum_j |<d_n, r_j>|^2 / (1 - S_n)
};

inline std::string_view to_string(SelectionCriterion c) {
  switch (c) {
    case SelectionCriterion::Somp: return "somp";
    case SelectionCriterion::MmvOmp: return "omp";
    case SelectionCriterion::Oompml: return "oomp";
  }
  return "?";
}

inline SelectionCriterion parse_criterion(std::string_view s) {
  if (s == "oomp" || s == "oompml") return SelectionCriterion::Oompml;
  if (s == "omp" || s == "mmv-omp") return SelectionCriterion::MmvOmp;
  if (s == "somp") return SelectionCriterion::Somp;
  throw std::invalid_argument("unknown criterion: " + std::string(s));
}

/// Atoms of one block shared by every channel, with per-channel coefficients.
struct AtomicDecomposition {
  std::vector<std::size_t> indices;  // 1-based atom indices, selection order
  Eigen::MatrixXd coefficients;      // indices.size() x L

  std::size_t size() const { return indices.size(); }

  /// sum_n c(n, j) d_{indices[n]} for every channel j.
  Eigen::MatrixXd synthesize(const TrigDictionary& dict, Eigen::Index channels) const {
    Eigen::MatrixXd out =
        Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(dict.block_size()), channels);
    for (std::size_t n = 0; n < indices.size(); ++n) {
      const Eigen::VectorXd d = dict.atom(indices[n]);
      out.noalias() += d * coefficients.row(static_cast<Eigen::Index>(n));
    }
    return out;
  }
};

struct Candidate {
  std::size_t index = 0;  // 1-based
  Eigen::VectorXd w;      // d - P_V d
  double w_norm2 = 0.0;
  double gain = 0.0;  // sum_j <w, f_j>^2 / |w|^2
};

namespace detail {
inline constexpr double kDenominatorFloor = 1e-10;
inline constexpr double kDependentNorm = 1e-10;
inline constexpr double kOrthogonalityTol = 1e-10;
inline constexpr double kResidualFloor = 1e-24;
inline constexpr std::size_t kRefreshInterval = 32;
// Scores within this relative distance of the maximum count as ties and go to
// the smallest index, so rounding noise never decides between equal atoms.
inline constexpr double kTieRelative = 1e-9;

inline bool within_tie(double value, double best) { return value >= best * (1.0 - kTieRelative); }
}  // namespace detail

/// Pursuit state of one N_b x L block.
class BlockState {
 public:
  BlockState(const TrigDictionary& dict, Eigen::MatrixXd block)
      : block_(std::move(block)), residual_(block_) {
    if (static_cast<std::size_t>(block_.rows()) != dict.block_size()) {
      throw std::invalid_argument("block rows != dictionary block size");
    }
    const auto atoms = static_cast<Eigen::Index>(dict.atom_count());
    energy_ = block_.squaredNorm();
    residual_energy_ = energy_;
    excluded_.assign(dict.atom_count(), 0);
    denom_sums_ = Eigen::VectorXd::Zero(atoms);
    residual_ip_.resize(atoms, block_.cols());
    if (energy_ == 0.0) {
      saturated_ = true;
      residual_ip_.setZero();
      return;
    }
    refresh_panels(dict);
  }

  const Eigen::MatrixXd& block() const { return block_; }
  const Eigen::MatrixXd& residual() const { return residual_; }
  const Eigen::MatrixXd& residual_inner_products() const { return residual_ip_; }
  const Eigen::VectorXd& denom_sums() const { return denom_sums_; }
  const std::vector<std::size_t>& selected() const { return selected_; }
  const std::vector<Eigen::VectorXd>& ortho_set() const { return ortho_; }
  const std::vector<Eigen::VectorXd>& biortho_set() const { return biortho_; }
  const std::optional<Candidate>& candidate() const { return candidate_; }
  bool saturated() const { return saturated_; }
  std::size_t atom_count() const { return selected_.size(); }
  double energy() const { return energy_; }
  double residual_energy() const { return residual_energy_; }

  /// Chooses the next atom for this block under `criterion` and prepares its
  /// orthogonalized vector. Marks the block saturated if nothing is selectable.
  void select_candidate(const TrigDictionary& dict, SelectionCriterion criterion) {
    candidate_.reset();
    while (!saturated_) {
      if (selected_.size() >= dict.block_size() ||
          residual_energy_ <= detail::kResidualFloor * energy_) {
        saturated_ = true;
        return;
      }
      const std::optional<std::size_t> best = best_index(criterion);
      if (!best) {
        saturated_ = true;
        return;
      }
      const std::size_t n = *best;
      Eigen::VectorXd w = orthogonalize(dict.atom(n));
      const double norm2 = w.squaredNorm();
      if (std::sqrt(norm2) <= detail::kDependentNorm) {
        excluded_[n - 1] = 1;
        continue;
      }
      double acc = 0.0;
      for (Eigen::Index j = 0; j < block_.cols(); ++j) {
        const double p = w.dot(block_.col(j));
        acc += p * p;
      }
      candidate_ = Candidate{n, std::move(w), norm2, acc / norm2};
      return;
    }
  }

  /// Appends the candidate atom and updates the orthogonal, biorthogonal,
  /// denominator and residual state.
  void accept_candidate(const TrigDictionary& dict) {
    if (!candidate_) throw std::logic_error("accept_candidate without a candidate");
    Candidate c = std::move(*candidate_);
    candidate_.reset();

    const Eigen::VectorXd d = dict.atom(c.index);
    Eigen::VectorXd b_new = c.w / c.w_norm2;
    for (auto& b : biortho_) {
      b -= b_new * d.dot(b);
    }
    biortho_.push_back(std::move(b_new));

    const Eigen::VectorXd w_unit = c.w / std::sqrt(c.w_norm2);
    ortho_.push_back(std::move(c.w));
    ortho_norm2_.push_back(c.w_norm2);
    selected_.push_back(c.index);
    excluded_[c.index - 1] = 1;

    const Eigen::VectorXd panel = dict.all_inner_products(w_unit);
    denom_sums_.array() += panel.array().square();
    for (Eigen::Index j = 0; j < residual_.cols(); ++j) {
      const double a = w_unit.dot(residual_.col(j));
      residual_.col(j) -= a * w_unit;
      residual_ip_.col(j) -= a * panel;
    }
    residual_energy_ = residual_.squaredNorm();

    if (++since_refresh_ >= detail::kRefreshInterval) {
      refresh_panels(dict);
    }
  }

  /// c(n, j) = <b_n, f_j>.
  Eigen::MatrixXd compute_coefficients() const {
    Eigen::MatrixXd c(static_cast<Eigen::Index>(selected_.size()), block_.cols());
    for (std::size_t n = 0; n < biortho_.size(); ++n) {
      c.row(static_cast<Eigen::Index>(n)) = biortho_[n].transpose() * block_;
    }
    return c;
  }

  AtomicDecomposition decomposition() const { return {selected_, compute_coefficients()}; }

 private:
  void refresh_panels(const TrigDictionary& dict) {
    for (Eigen::Index j = 0; j < residual_.cols(); ++j) {
      dict.all_inner_products(residual_.col(j), residual_ip_.col(j));
    }
    since_refresh_ = 0;
  }

  std::optional<std::size_t> best_index(SelectionCriterion criterion) {
    const Eigen::Index atoms = residual_ip_.rows();
    scores_.resize(atoms);
    double best_value = -1.0;
    for (Eigen::Index n = 0; n < atoms; ++n) {
      scores_[n] = -1.0;
      if (excluded_[static_cast<std::size_t>(n)]) continue;
      double value = 0.0;
      switch (criterion) {
        case SelectionCriterion::Somp:
          value = residual_ip_.row(n).cwiseAbs().sum();
          break;
        case SelectionCriterion::MmvOmp:
          value = residual_ip_.row(n).squaredNorm();
          break;
        case SelectionCriterion::Oompml: {
          const double denom = 1.0 - denom_sums_[n];
          if (denom <= detail::kDenominatorFloor) {
            excluded_[static_cast<std::size_t>(n)] = 1;
            continue;
          }
          value = residual_ip_.row(n).squaredNorm() / denom;
          break;
        }
      }
      scores_[n] = value;
      best_value = std::max(best_value, value);
    }
    if (best_value < 0.0) return std::nullopt;
    for (Eigen::Index n = 0; n < atoms; ++n) {
      if (scores_[n] >= 0.0 && detail::within_tie(scores_[n], best_value)) return static_cast<std::size_t>(n) + 1;
    }
    return std::nullopt;
  }

  // Gram-Schmidt against the current orthogonal set plus one
  // re-orthogonalization; a second pass only if still not orthogonal.
  Eigen::VectorXd orthogonalize(Eigen::VectorXd v) const {
    auto pass = [&](Eigen::VectorXd& x) {
      for (std::size_t i = 0; i < ortho_.size(); ++i) {
        x -= ortho_[i] * (ortho_[i].dot(x) / ortho_norm2_[i]);
      }
    };
    pass(v);
    pass(v);
    const double vn = v.norm();
    if (vn > 0.0) {
      for (std::size_t i = 0; i < ortho_.size(); ++i) {
        if (std::abs(ortho_[i].dot(v)) > detail::kOrthogonalityTol * std::sqrt(ortho_norm2_[i]) * vn) {
          pass(v);
          break;
        }
      }
    }
    return v;
  }

  Eigen::MatrixXd block_;
  Eigen::MatrixXd residual_;
  Eigen::MatrixXd residual_ip_;
  Eigen::VectorXd denom_sums_;
  Eigen::VectorXd scores_;
  std::vector<char> excluded_;
  std::vector<std::size_t> selected_;
  std::vector<Eigen::VectorXd> ortho_;
  std::vector<double> ortho_norm2_;
  std::vector<Eigen::VectorXd> biortho_;
  std::optional<Candidate> candidate_;
  double energy_ = 0.0;
  double residual_energy_ = 0.0;
  std::size_t since_refresh_ = 0;
  bool saturated_ = false;
};

/// Block whose candidate most reduces the total residual; ties go to the
/// smallest block index. nullopt when every block is saturated.
inline std::optional<std::size_t> rank_blocks(std::span<const BlockState> states) {
  double best_gain = -1.0;
  for (const auto& s : states) {
    if (!s.saturated() && s.candidate()) best_gain = std::max(best_gain, s.candidate()->gain);
  }
  if (best_gain < 0.0) return std::nullopt;
  for (std::size_t q = 0; q < states.size(); ++q) {
    const auto& s = states[q];
    if (!s.saturated() && s.candidate() && detail::within_tie(s.candidate()->gain, best_gain)) return q;
  }
  return std::nullopt;
}

struct PursuitResult {
  std::vector<AtomicDecomposition> decompositions;
  std::size_t total_atoms = 0;
  bool saturated = false;
  double snr_db = 0.0;  // before quantization
};

/// Hierarchized block-wise pursuit over a partition: each step upgrades the
/// single block whose candidate yields the largest drop in total residual.
class HbwPursuit {
 public:
  HbwPursuit(std::span<const Eigen::MatrixXd> blocks, const TrigDictionary& dict,
             SelectionCriterion criterion = SelectionCriterion::Oompml, unsigned threads = 1)
      : dict_(&dict), criterion_(criterion) {
    states_.reserve(blocks.size());
    for (const auto& b : blocks) {
      states_.emplace_back(dict, b);
      signal_energy_ += states_.back().energy();
    }
    for_each_block(threads, [&](std::size_t q) { states_[q].select_candidate(dict, criterion); });
    saturated_ = !rank_blocks(states_).has_value();
  }

  /// One HBW iteration. Returns false (and flags saturation) when no block
  /// can be upgraded.
  bool step() {
    const auto q = rank_blocks(states_);
    if (!q) {
      saturated_ = true;
      return false;
    }
    auto& s = states_[*q];
    last_gain_ = s.candidate()->gain;
    s.accept_candidate(*dict_);
    s.select_candidate(*dict_, criterion_);
    ++total_atoms_;
    last_block_ = *q;
    last_atom_ = s.selected().back();
    return true;
  }

  std::size_t total_atoms() const { return total_atoms_; }
  bool saturated() const { return saturated_; }
  double signal_energy() const { return signal_energy_; }
  /// Sum of the blocks' residual energies, each read from its residual.
  double residual_energy() const {
    double acc = 0.0;
    for (const auto& s : states_) acc += s.residual_energy();
    return acc;
  }
  double last_gain() const { return last_gain_; }
  std::size_t last_block() const { return last_block_; }
  std::size_t last_atom() const { return last_atom_; }
  std::span<const BlockState> blocks() const { return states_; }

  double snr_db() const {
    if (signal_energy_ == 0.0) return kSnrCapDb;
    return snr_from_energies(signal_energy_, residual_energy());
  }

  std::vector<AtomicDecomposition> decompositions() const {
    std::vector<AtomicDecomposition> out;
    out.reserve(states_.size());
    for (const auto& s : states_) out.push_back(s.decomposition());
    return out;
  }

  PursuitResult result() const { return {decompositions(), total_atoms_, saturated_, snr_db()}; }

 private:
  template <typename Fn>
  void for_each_block(unsigned threads, Fn&& fn) {
    const std::size_t q = states_.size();
    threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(q, 1))));
    if (threads == 1) {
      for (std::size_t i = 0; i < q; ++i) fn(i);
      return;
    }
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (unsigned t = 0; t < threads; ++t) {
      pool.emplace_back([&, t] {
        for (std::size_t i = t; i < q; i += threads) fn(i);
      });
    }
  }

  const TrigDictionary* dict_;
  SelectionCriterion criterion_;
  std::vector<BlockState> states_;
  double signal_energy_ = 0.0;
  double last_gain_ = 0.0;
  std::size_t total_atoms_ = 0;
  std::size_t last_block_ = 0;
  std::size_t last_atom_ = 0;
  bool saturated_ = false;
};

/// Runs the pursuit until `budget` atoms are placed or every block saturates.
inline PursuitResult hbw_pursuit(std::span<const Eigen::MatrixXd> blocks, const TrigDictionary& dict,
                                 std::size_t budget,
                                 SelectionCriterion criterion = SelectionCriterion::Oompml,
                                 unsigned threads = 1) {
  HbwPursuit p(blocks, dict, criterion, threads);
  while (p.total_atoms() < budget && p.step()) {
  }
  return p.result();
}

/// Runs the pursuit until the approximation SNR reaches `target_snr_db`.
/// `saturated` is set if every block saturated first.
inline PursuitResult pursuit_to_snr(std::span<const Eigen::MatrixXd> blocks,
                                    const TrigDictionary& dict, double target_snr_db,
                                    SelectionCriterion criterion = SelectionCriterion::Oompml,
                                    unsigned threads = 1) {
  if (!std::isfinite(target_snr_db)) throw std::invalid_argument("target SNR must be finite");
  HbwPursuit p(blocks, dict, criterion, threads);
  while (p.snr_db() < target_snr_db && p.step()) {
  }
  return p.result();
}

}  // namespace tdc
