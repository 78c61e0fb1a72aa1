#pragma once

#include <cstdint>
#include <vector>

#include "tendon/core/rng.hpp"
#include "tendon/g2p/babble.hpp"
#include "tendon/nets/mlp.hpp"
#include "tendon/nets/train.hpp"

namespace tendon::g2p {

/// Learned map from desired kinematics (6) to activations (3).
struct InverseMap {
  nets::MlpModel model;
  nets::TrainHistory history;
  double source_stiffness = 0.0;
};

inline const std::vector<int>& inverse_map_layers() {
  static const std::vector<int> sizes{6, 15, 3};
  return sizes;
}

/// Every (realized kinematics -> issued activation) pair gathered so far.
/// Rows are only ever appended.
class Experience {
public:
  void add(const RowMatrix& kinematics, const RowMatrix& activations) {
    if (kinematics.rows() != activations.rows())
      throw LengthMismatch("kinematics and activations must be time-aligned");
    chunks_.push_back({kinematics, activations});
    rows_ += kinematics.rows();
  }
  void add(const BabbleLog& log) { add(log.kinematics, log.activations); }

  Eigen::Index rows() const noexcept { return rows_; }
  std::size_t chunks() const noexcept { return chunks_.size(); }

  nets::Dataset dataset() const {
    nets::Dataset d;
    d.inputs.resize(rows_, tasks::kKinematicsWidth);
    d.targets.resize(rows_, 3);
    Eigen::Index at = 0;
    for (const auto& c : chunks_) {
      d.inputs.middleRows(at, c.kinematics.rows()) = c.kinematics;
      d.targets.middleRows(at, c.kinematics.rows()) = c.activations;
      at += c.kinematics.rows();
    }
    return d;
  }

private:
  struct Chunk {
    RowMatrix kinematics;
    RowMatrix activations;
  };
  std::vector<Chunk> chunks_;
  Eigen::Index rows_ = 0;
};

inline nets::Dataset babble_dataset(const BabbleLog& log) {
  return {log.kinematics, log.activations};
}

/// Fresh [6, 15, 3] network (tanh hidden, logistic output) trained on the
/// babbling pairs.
inline InverseMap build_inverse_map(const BabbleLog& log, std::uint64_t seed,
                                    const nets::TrainOptions& options = {}) {
  if (log.size() == 0) throw std::invalid_argument("empty babbling log");
  InverseMap map;
  map.source_stiffness = log.stiffness;
  map.model = nets::init_mlp(inverse_map_layers(), nets::Activation::logistic, derive_seed(seed, 1));
  map.history = nets::train(map.model, babble_dataset(log), options, derive_seed(seed, 2));
  return map;
}

/// Continues training the current map on the whole cumulative experience.
/// Input standardization stays as fixed at construction.
inline InverseMap refine(const InverseMap& map, const Experience& experience, std::uint64_t seed,
                         const nets::TrainOptions& options = {}) {
  if (experience.rows() == 0) throw std::invalid_argument("refinement needs data");
  InverseMap out = map;
  out.history = nets::train(out.model, experience.dataset(), options, seed);
  return out;
}

/// Open-loop activation commands for every sample of a desired trajectory,
/// clamped to [0, 1].
inline RowMatrix predict_activations(const InverseMap& map, const RowMatrix& desired) {
  RowMatrix a = nets::forward_batch(map.model, desired.transpose()).transpose();
  return a.cwiseMax(0.0).cwiseMin(1.0);
}

}  // namespace tendon::g2p
