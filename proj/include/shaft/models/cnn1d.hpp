#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "shaft/matrix.hpp"
#include "shaft/models/logreg.hpp"
#include "shaft/models/training.hpp"

namespace shaft::models {

struct CnnArch {
  std::size_t input_length = 4096;
  std::size_t n_conv = 2;
  std::size_t kernel = 9;          // odd; same padding
  std::size_t base_channels = 16;  // doubled in each further block
  std::size_t pool = 4;
  std::size_t fc_width = 64;
  double negative_slope = 0.01;
};

/// conv1d (no bias; batch norm absorbs it) -> batch norm -> LeakyReLU -> max pool
struct ConvBlock {
  std::size_t c_in = 0;
  std::size_t c_out = 0;
  std::size_t length = 0;  // input length of this block
  std::vector<double> weight;  // c_out x c_in x kernel
  std::vector<double> gamma, beta;
  std::vector<double> running_mean, running_var;
};

struct Cnn1dModel {
  CnnArch arch;
  std::vector<ConvBlock> blocks;
  std::vector<double> fc_w, fc_b;    // flat x fc_width, fc_width
  std::vector<double> out_w, out_b;  // fc_width x 1, 1
  double bn_eps = 1e-5;
  double bn_momentum = 0.1;

  [[nodiscard]] std::size_t flat_size() const;
  /// Inference-mode logit (batch norm uses running statistics).
  [[nodiscard]] double logit(std::span<const double> x) const;
  [[nodiscard]] double forward(std::span<const double> x) const { return sigmoid(logit(x)); }
  [[nodiscard]] std::vector<double> logits(const Matrix& X) const;
};

Cnn1dModel cnn_init(const CnnArch& arch, std::uint64_t seed);

struct CnnGradients {
  struct Block {
    std::vector<double> weight, gamma, beta;
    std::vector<double> batch_mean, batch_var;  // statistics seen in this pass
  };
  std::vector<Block> blocks;
  std::vector<double> fc_w, fc_b, out_w, out_b;
};

/// Training-mode pass (batch statistics) over all rows: mean cross-entropy
/// and its gradient. Does not touch running statistics.
double cnn_loss_and_grad(const Cnn1dModel& m, const Matrix& X, std::span<const int> y, CnnGradients& grad);
/// Inference-mode mean cross-entropy.
double cnn_loss(const Cnn1dModel& m, const Matrix& X, std::span<const int> y);

inline double cnn_forward(const Cnn1dModel& m, std::span<const double> x) { return m.forward(x); }

struct CnnOptions {
  CnnArch arch;
  NetTrainOptions train;
};

/// Same protocol as `mlp_train`: Adam on the training split, keep the
/// snapshot with the lowest test-split loss.
Cnn1dModel cnn_train(const Matrix& train_x, std::span<const int> train_y, const Matrix& test_x,
                     std::span<const int> test_y, std::size_t n_conv, std::uint64_t seed, const CnnOptions& opts = {},
                     TrainLog* log = nullptr);

}  // namespace shaft::models
