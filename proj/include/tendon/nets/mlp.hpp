#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "tendon/core/errors.hpp"
#include "tendon/core/rng.hpp"

namespace tendon::nets {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class Activation { tanh, logistic, identity };

inline std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::tanh: return "tanh";
    case Activation::logistic: return "logistic";
    case Activation::identity: return "identity";
  }
  return "identity";
}

inline Activation activation_from_string(std::string_view s) {
  if (s == "tanh") return Activation::tanh;
  if (s == "logistic") return Activation::logistic;
  if (s == "identity") return Activation::identity;
  throw InvalidArchitecture("unknown activation tag: " + std::string(s));
}

/// Fully connected network. All weights and biases live in one flat vector,
/// layer by layer: W_l (out x in, column-major) followed by b_l. Optional
/// input standardization statistics are stored alongside and are not
/// trainable parameters.
class MlpModel {
public:
  MlpModel() = default;

  MlpModel(std::vector<int> layer_sizes, Activation hidden, Activation output)
      : sizes_(std::move(layer_sizes)), hidden_(hidden), output_(output) {
    if (sizes_.size() < 2) throw InvalidArchitecture("an MLP needs at least two layers");
    for (int w : sizes_)
      if (w < 1) throw InvalidArchitecture("layer widths must be >= 1");
    offsets_.reserve(sizes_.size());
    std::size_t off = 0;
    for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
      offsets_.push_back(off);
      off += static_cast<std::size_t>(sizes_[l + 1]) * (sizes_[l] + 1);
    }
    offsets_.push_back(off);
    params_ = VectorXd::Zero(static_cast<Eigen::Index>(off));
  }

  const std::vector<int>& layer_sizes() const noexcept { return sizes_; }
  std::size_t num_layers() const noexcept { return sizes_.size() - 1; }
  int input_size() const noexcept { return sizes_.front(); }
  int output_size() const noexcept { return sizes_.back(); }
  Activation hidden_activation() const noexcept { return hidden_; }
  Activation output_activation() const noexcept { return output_; }
  Activation activation_of(std::size_t layer) const noexcept {
    return layer + 1 == num_layers() ? output_ : hidden_;
  }

  VectorXd& params() noexcept { return params_; }
  const VectorXd& params() const noexcept { return params_; }
  std::size_t parameter_count() const noexcept { return static_cast<std::size_t>(params_.size()); }

  Eigen::Map<MatrixXd> weight(std::size_t l) {
    return {params_.data() + offsets_[l], sizes_[l + 1], sizes_[l]};
  }
  Eigen::Map<const MatrixXd> weight(std::size_t l) const {
    return {params_.data() + offsets_[l], sizes_[l + 1], sizes_[l]};
  }
  Eigen::Map<VectorXd> bias(std::size_t l) {
    return {params_.data() + offsets_[l] + sizes_[l + 1] * sizes_[l], sizes_[l + 1]};
  }
  Eigen::Map<const VectorXd> bias(std::size_t l) const {
    return {params_.data() + offsets_[l] + sizes_[l + 1] * sizes_[l], sizes_[l + 1]};
  }
  std::size_t layer_offset(std::size_t l) const noexcept { return offsets_[l]; }

  bool has_standardization() const noexcept { return input_mean_.size() > 0; }
  const VectorXd& input_mean() const noexcept { return input_mean_; }
  const VectorXd& input_scale() const noexcept { return input_scale_; }
  void set_standardization(VectorXd mean, VectorXd scale) {
    if (mean.size() != input_size() || scale.size() != input_size())
      throw InvalidArchitecture("standardization statistics must match the input width");
    input_mean_ = std::move(mean);
    input_scale_ = std::move(scale);
  }
  void clear_standardization() {
    input_mean_.resize(0);
    input_scale_.resize(0);
  }

  /// Bitwise equality of architecture, parameters and statistics.
  friend bool operator==(const MlpModel& a, const MlpModel& b) {
    auto same = [](const VectorXd& u, const VectorXd& v) {
      return u.size() == v.size() && std::equal(u.data(), u.data() + u.size(), v.data());
    };
    return a.sizes_ == b.sizes_ && a.hidden_ == b.hidden_ && a.output_ == b.output_ &&
           same(a.params_, b.params_) && same(a.input_mean_, b.input_mean_) &&
           same(a.input_scale_, b.input_scale_);
  }

private:
  std::vector<int> sizes_;
  Activation hidden_ = Activation::tanh;
  Activation output_ = Activation::identity;
  std::vector<std::size_t> offsets_;
  VectorXd params_;
  VectorXd input_mean_;
  VectorXd input_scale_;
};

/// Glorot-uniform weights, zero biases. Deterministic in `seed`.
inline MlpModel init_mlp(std::vector<int> layer_sizes, Activation output, std::uint64_t seed,
                         Activation hidden = Activation::tanh) {
  MlpModel model(std::move(layer_sizes), hidden, output);
  Rng rng(seed);
  for (std::size_t l = 0; l < model.num_layers(); ++l) {
    auto w = model.weight(l);
    const double limit = std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
    for (Eigen::Index c = 0; c < w.cols(); ++c)
      for (Eigen::Index r = 0; r < w.rows(); ++r) w(r, c) = rng.uniform(-limit, limit);
  }
  return model;
}

namespace detail {

inline void apply_activation(Activation a, MatrixXd& z) {
  switch (a) {
    case Activation::tanh: {
      // Written through exp, which Eigen vectorizes; libm tanh dominated
      // training time.
      const Eigen::ArrayXXd e = (-2.0 * z.array().abs()).exp();
      z = z.array().sign() * (1.0 - e) / (1.0 + e);
      break;
    }
    case Activation::logistic: z = (1.0 + (-z.array()).exp()).inverse(); break;
    case Activation::identity: break;
  }
}

/// Multiplies `grad` (dL/dy) in place by dy/dz, given the activated output y.
inline void apply_activation_derivative(Activation a, const MatrixXd& y, MatrixXd& grad) {
  switch (a) {
    case Activation::tanh: grad.array() *= 1.0 - y.array().square(); break;
    case Activation::logistic: grad.array() *= y.array() * (1.0 - y.array()); break;
    case Activation::identity: break;
  }
}

}  // namespace detail

/// Layer outputs of a batched forward pass; samples are columns.
struct ForwardCache {
  std::vector<MatrixXd> layers;  // layers[0] = (standardized) input, back() = output

  const MatrixXd& output() const { return layers.back(); }
};

inline MatrixXd standardize(const MlpModel& model, const Eigen::Ref<const MatrixXd>& x) {
  if (!model.has_standardization()) return x;
  return (x.colwise() - model.input_mean()).array().colwise() / model.input_scale().array();
}

inline ForwardCache forward_cached(const MlpModel& model, const Eigen::Ref<const MatrixXd>& x) {
  if (x.rows() != model.input_size()) throw LengthMismatch("input width does not match the model");
  ForwardCache cache;
  cache.layers.reserve(model.num_layers() + 1);
  cache.layers.push_back(standardize(model, x));
  for (std::size_t l = 0; l < model.num_layers(); ++l) {
    MatrixXd z = model.weight(l) * cache.layers.back();
    z.colwise() += model.bias(l);
    detail::apply_activation(model.activation_of(l), z);
    cache.layers.push_back(std::move(z));
  }
  return cache;
}

/// Batched forward pass, one sample per column.
inline MatrixXd forward_batch(const MlpModel& model, const Eigen::Ref<const MatrixXd>& x) {
  return forward_cached(model, x).output();
}

inline VectorXd forward(const MlpModel& model, const Eigen::Ref<const VectorXd>& x) {
  return forward_batch(model, x);
}

/// Gradient of a scalar loss with respect to all parameters, given
/// dL/d(output) for each column of the cached batch.
inline VectorXd backward(const MlpModel& model, const ForwardCache& cache, MatrixXd grad_out) {
  VectorXd grad = VectorXd::Zero(static_cast<Eigen::Index>(model.parameter_count()));
  MatrixXd delta = std::move(grad_out);
  for (std::size_t l = model.num_layers(); l-- > 0;) {
    detail::apply_activation_derivative(model.activation_of(l), cache.layers[l + 1], delta);
    const MatrixXd& input = cache.layers[l];
    const auto rows = model.weight(l).rows(), cols = model.weight(l).cols();
    Eigen::Map<MatrixXd>(grad.data() + model.layer_offset(l), rows, cols).noalias() =
        delta * input.transpose();
    Eigen::Map<VectorXd>(grad.data() + model.layer_offset(l) + rows * cols, rows) =
        delta.rowwise().sum();
    if (l > 0) delta = model.weight(l).transpose() * delta;
  }
  return grad;
}

/// Supervised pairs, one sample per row.
struct Dataset {
  RowMatrix inputs;
  RowMatrix targets;

  Eigen::Index size() const noexcept { return inputs.rows(); }
};

struct LossAndGradient {
  double loss = 0.0;
  VectorXd gradient;
};

/// Mean squared error over samples and output components, and its gradient.
/// Samples are columns of `x` and `t`.
inline LossAndGradient mse_loss_and_gradient(const MlpModel& model,
                                             const Eigen::Ref<const MatrixXd>& x,
                                             const Eigen::Ref<const MatrixXd>& t) {
  const ForwardCache cache = forward_cached(model, x);
  const MatrixXd err = cache.output() - t;
  const double denom = static_cast<double>(err.size());
  LossAndGradient out;
  out.loss = err.squaredNorm() / denom;
  out.gradient = backward(model, cache, (2.0 / denom) * err);
  return out;
}

inline LossAndGradient backprop(const MlpModel& model, const Dataset& batch) {
  if (batch.size() == 0) throw std::invalid_argument("backprop needs a nonempty batch");
  return mse_loss_and_gradient(model, batch.inputs.transpose(), batch.targets.transpose());
}

inline double mse(const MlpModel& model, const Dataset& data) {
  if (data.size() == 0) return 0.0;
  const MatrixXd err = forward_batch(model, data.inputs.transpose()) - data.targets.transpose();
  return err.squaredNorm() / static_cast<double>(err.size());
}

}  // namespace tendon::nets
