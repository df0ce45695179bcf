#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "shaft/matrix.hpp"
#include "shaft/models/logreg.hpp"
#include "shaft/models/training.hpp"

namespace shaft::models {

/// Fully-connected net: LeakyReLU hidden layers, one sigmoid output. With no
/// hidden layers it is exactly logistic regression.
struct MlpModel {
  std::vector<std::size_t> layer_sizes;       // [in, h1, ..., hN, 1]
  std::vector<std::vector<double>> weights;   // layer l: in_l x out_l, row-major
  std::vector<std::vector<double>> biases;
  double negative_slope = 0.01;

  [[nodiscard]] std::size_t n_hidden() const noexcept { return layer_sizes.size() - 2; }
  [[nodiscard]] double logit(std::span<const double> x) const;
  [[nodiscard]] double forward(std::span<const double> x) const { return sigmoid(logit(x)); }
  /// Logit of every row.
  [[nodiscard]] std::vector<double> logits(const Matrix& X) const;
};

struct MlpOptions {
  std::size_t hidden_width = 64;
  double negative_slope = 0.01;
  NetTrainOptions train;
};

/// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights, zero biases.
MlpModel mlp_init(std::vector<std::size_t> layer_sizes, std::uint64_t seed, double negative_slope = 0.01);

inline MlpModel mlp_from_logreg(const LogRegModel& lr) {
  MlpModel m;
  m.layer_sizes = {lr.weights.size(), 1};
  m.weights = {lr.weights};
  m.biases = {{lr.bias}};
  return m;
}

struct MlpGradients {
  std::vector<std::vector<double>> weights;
  std::vector<std::vector<double>> biases;
};

/// Mean binary cross-entropy over the rows of X and its gradient.
double mlp_loss_and_grad(const MlpModel& m, const Matrix& X, std::span<const int> y, MlpGradients& grad);
double mlp_loss(const MlpModel& m, const Matrix& X, std::span<const int> y);

inline double mlp_forward(const MlpModel& m, std::span<const double> x) { return m.forward(x); }

/// Adam on mini-batches of the training split; after every epoch the test
/// split loss is measured and the lowest-loss snapshot is returned.
MlpModel mlp_train(const Matrix& train_x, std::span<const int> train_y, const Matrix& test_x,
                   std::span<const int> test_y, std::size_t n_hidden, std::uint64_t seed,
                   const MlpOptions& opts = {}, TrainLog* log = nullptr);

}  // namespace shaft::models
