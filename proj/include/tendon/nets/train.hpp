#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "tendon/core/rng.hpp"
#include "tendon/nets/adam.hpp"
#include "tendon/nets/mlp.hpp"

namespace tendon::nets {

struct TrainOptions {
  int epochs = 20;
  double validation_fraction = 0.2;
  int batch_size = 128;
  double learning_rate = 1e-3;
  bool standardize_inputs = false;
};

/// Per-epoch losses, both evaluated with the weights at the end of the epoch:
/// MSE over the training split and over the held-out validation split.
struct TrainHistory {
  std::vector<double> train_mse;
  std::vector<double> val_mse;
};

/// Row subset of a dataset.
inline Dataset take_rows(const Dataset& data, const std::vector<Eigen::Index>& rows) {
  Dataset out;
  out.inputs.resize(static_cast<Eigen::Index>(rows.size()), data.inputs.cols());
  out.targets.resize(static_cast<Eigen::Index>(rows.size()), data.targets.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.inputs.row(static_cast<Eigen::Index>(i)) = data.inputs.row(rows[i]);
    out.targets.row(static_cast<Eigen::Index>(i)) = data.targets.row(rows[i]);
  }
  return out;
}

/// Column means and standard deviations; degenerate columns get unit scale.
inline std::pair<VectorXd, VectorXd> column_statistics(const RowMatrix& x) {
  const double n = static_cast<double>(x.rows());
  VectorXd mean = x.colwise().sum().transpose() / n;
  VectorXd scale(x.cols());
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    const double var = (x.col(c).array() - mean[c]).square().sum() / n;
    scale[c] = var > 1e-16 ? std::sqrt(var) : 1.0;
  }
  return {std::move(mean), std::move(scale)};
}

/// Minibatch ADAM on mean squared error with a seeded train/validation split
/// and per-epoch reshuffling. If the model has no standardization statistics
/// yet, they are taken from the training split.
inline TrainHistory train(MlpModel& model, const Dataset& data, const TrainOptions& options,
                          std::uint64_t seed) {
  if (data.inputs.rows() != data.targets.rows())
    throw LengthMismatch("dataset inputs and targets must have equal row counts");
  if (data.inputs.cols() != model.input_size() || data.targets.cols() != model.output_size())
    throw LengthMismatch("dataset widths do not match the model");
  if (data.size() < 10) throw std::invalid_argument("training needs at least 10 rows");
  TrainHistory history;
  if (options.epochs <= 0) return history;

  Rng rng(seed);
  std::vector<Eigen::Index> order(static_cast<std::size_t>(data.size()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  rng.shuffle(order);
  const auto n_val = static_cast<std::size_t>(
      std::floor(options.validation_fraction * static_cast<double>(order.size())));
  std::vector<Eigen::Index> train_rows(order.begin(), order.end() - static_cast<std::ptrdiff_t>(n_val));
  const std::vector<Eigen::Index> val_rows(order.end() - static_cast<std::ptrdiff_t>(n_val), order.end());
  const Dataset val = take_rows(data, val_rows);
  const Dataset fit = take_rows(data, train_rows);

  if (options.standardize_inputs && !model.has_standardization()) {
    auto [mean, scale] = column_statistics(fit.inputs);
    model.set_standardization(std::move(mean), std::move(scale));
  }

  AdamState adam = AdamState::for_size(model.params().size(), options.learning_rate);
  const auto batch = static_cast<std::size_t>(std::max(1, options.batch_size));
  MatrixXd xb, tb;
  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    rng.shuffle(train_rows);
    for (std::size_t start = 0; start < train_rows.size(); start += batch) {
      const std::size_t count = std::min(batch, train_rows.size() - start);
      xb.resize(data.inputs.cols(), static_cast<Eigen::Index>(count));
      tb.resize(data.targets.cols(), static_cast<Eigen::Index>(count));
      for (std::size_t i = 0; i < count; ++i) {
        xb.col(static_cast<Eigen::Index>(i)) = data.inputs.row(train_rows[start + i]).transpose();
        tb.col(static_cast<Eigen::Index>(i)) = data.targets.row(train_rows[start + i]).transpose();
      }
      const LossAndGradient lg = mse_loss_and_gradient(model, xb, tb);
      adam_update(model.params(), adam, lg.gradient);
    }
    history.train_mse.push_back(mse(model, fit));
    history.val_mse.push_back(val.size() > 0 ? mse(model, val)
                                             : std::numeric_limits<double>::quiet_NaN());
  }
  return history;
}

}  // namespace tendon::nets
