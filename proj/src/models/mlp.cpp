#include "shaft/models/mlp.hpp"

#include <algorithm>
#include <numeric>
#include <random>

#include "shaft/error.hpp"
#include "shaft/kernels/kernels.hpp"
#include "shaft/rng.hpp"

namespace shaft::models {

namespace k = shaft::kernels::parallel;

namespace {

constexpr std::size_t kEvalChunk = 256;

void check_input(const MlpModel& m, std::size_t width) {
  if (width != m.layer_sizes.front())
    fail(ErrorCode::ShapeMismatch, "MLP expects " + std::to_string(m.layer_sizes.front()) + " inputs, got " +
                                       std::to_string(width));
}

// Pre-activations of every layer for a batch; layer 0 entry is the input.
struct Activations {
  std::vector<std::vector<double>> pre;   // z_l, size batch*out_l
  std::vector<std::vector<double>> post;  // a_l, post[0] = input
};

void forward_batch(const MlpModel& m, std::span<const double> x, std::size_t batch, Activations& act) {
  const std::size_t layers = m.weights.size();
  act.pre.resize(layers);
  act.post.resize(layers + 1);
  act.post[0].assign(x.begin(), x.end());
  for (std::size_t l = 0; l < layers; ++l) {
    const kernels::DenseShape s{batch, m.layer_sizes[l], m.layer_sizes[l + 1]};
    act.pre[l].resize(batch * s.out);
    k::dense_forward(act.post[l], m.weights[l], m.biases[l], act.pre[l], s);
    act.post[l + 1] = act.pre[l];
    if (l + 1 < layers)
      for (auto& v : act.post[l + 1]) v = leaky_relu(v, m.negative_slope);
  }
}

}  // namespace

double MlpModel::logit(std::span<const double> x) const {
  check_input(*this, x.size());
  Activations act;
  forward_batch(*this, x, 1, act);
  return act.pre.back()[0];
}

std::vector<double> MlpModel::logits(const Matrix& X) const {
  check_input(*this, X.cols);
  std::vector<double> out(X.rows);
  Activations act;
  for (std::size_t first = 0; first < X.rows; first += kEvalChunk) {
    const std::size_t n = std::min(kEvalChunk, X.rows - first);
    forward_batch(*this, {X.data.data() + first * X.cols, n * X.cols}, n, act);
    std::copy(act.pre.back().begin(), act.pre.back().end(), out.begin() + static_cast<std::ptrdiff_t>(first));
  }
  return out;
}

MlpModel mlp_init(std::vector<std::size_t> layer_sizes, std::uint64_t seed, double negative_slope) {
  if (layer_sizes.size() < 2 || layer_sizes.back() != 1)
    fail(ErrorCode::ShapeMismatch, "MLP layer sizes must end in a single output");
  MlpModel m;
  m.layer_sizes = std::move(layer_sizes);
  m.negative_slope = negative_slope;
  Engine eng(derive_seed(seed, "mlp-init"));
  for (std::size_t l = 0; l + 1 < m.layer_sizes.size(); ++l) {
    const std::size_t in = m.layer_sizes[l], out = m.layer_sizes[l + 1];
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    std::vector<double> w(in * out);
    for (auto& v : w) v = dist(eng);
    m.weights.push_back(std::move(w));
    m.biases.emplace_back(out, 0.0);
  }
  return m;
}

double mlp_loss_and_grad(const MlpModel& m, const Matrix& X, std::span<const int> y, MlpGradients& grad) {
  check_input(m, X.cols);
  if (y.size() != X.rows || X.rows == 0) fail(ErrorCode::ShapeMismatch, "MLP needs one label per row");
  const std::size_t batch = X.rows;
  const std::size_t layers = m.weights.size();
  Activations act;
  forward_batch(m, X.data, batch, act);

  const double inv_n = 1.0 / static_cast<double>(batch);
  double loss = 0.0;
  std::vector<double> delta(batch);
  for (std::size_t b = 0; b < batch; ++b) {
    const double z = act.pre.back()[b];
    loss += bce_from_logit(z, y[b]);
    delta[b] = (sigmoid(z) - (y[b] != 0 ? 1.0 : 0.0)) * inv_n;
  }

  grad.weights.resize(layers);
  grad.biases.resize(layers);
  for (std::size_t l = layers; l-- > 0;) {
    const kernels::DenseShape s{batch, m.layer_sizes[l], m.layer_sizes[l + 1]};
    grad.weights[l].resize(s.in * s.out);
    grad.biases[l].resize(s.out);
    k::dense_backward_weights(act.post[l], delta, grad.weights[l], grad.biases[l], s);
    if (l == 0) break;
    std::vector<double> prev(batch * s.in);
    k::dense_backward_input(delta, m.weights[l], prev, s);
    const auto& z = act.pre[l - 1];
    for (std::size_t i = 0; i < prev.size(); ++i)
      if (z[i] <= 0.0) prev[i] *= m.negative_slope;
    delta = std::move(prev);
  }
  return loss * inv_n;
}

double mlp_loss(const MlpModel& m, const Matrix& X, std::span<const int> y) {
  const auto z = m.logits(X);
  double loss = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) loss += bce_from_logit(z[i], y[i]);
  return loss / static_cast<double>(z.size());
}

MlpModel mlp_train(const Matrix& train_x, std::span<const int> train_y, const Matrix& test_x,
                   std::span<const int> test_y, std::size_t n_hidden, std::uint64_t seed, const MlpOptions& opts,
                   TrainLog* log) {
  if (n_hidden > 4) fail(ErrorCode::BadParams, "MLP supports 0..4 hidden layers");
  if (train_x.rows == 0 || test_x.rows == 0) fail(ErrorCode::TooFew, "MLP needs non-empty train and test splits");
  if (test_x.cols != train_x.cols) fail(ErrorCode::ShapeMismatch, "train/test width differ");
  require_finite(train_x, "MLP training input");
  require_finite(test_x, "MLP test input");

  std::vector<std::size_t> sizes{train_x.cols};
  for (std::size_t h = 0; h < n_hidden; ++h) sizes.push_back(opts.hidden_width);
  sizes.push_back(1);
  MlpModel model = mlp_init(sizes, seed, opts.negative_slope);
  MlpModel best = model;

  Adam adam(opts.train.learning_rate);
  Engine shuffle_eng(derive_seed(seed, "mlp-shuffle"));
  std::vector<std::size_t> order(train_x.rows);
  std::iota(order.begin(), order.end(), 0);

  TrainLog local;
  TrainLog& out = log ? *log : local;
  out = {};
  double best_loss = std::numeric_limits<double>::infinity();
  int since_best = 0;
  MlpGradients grad;
  Matrix batch_x;
  std::vector<int> batch_y;

  for (int epoch = 0; epoch < opts.train.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_eng);
    double epoch_loss = 0.0;
    std::size_t n_batches = 0;
    for (std::size_t first = 0; first < order.size(); first += opts.train.batch_size) {
      const std::size_t n = std::min(opts.train.batch_size, order.size() - first);
      batch_x = take_rows(train_x, std::span(order).subspan(first, n));
      batch_y.resize(n);
      for (std::size_t i = 0; i < n; ++i) batch_y[i] = train_y[order[first + i]];
      const double loss = mlp_loss_and_grad(model, batch_x, batch_y, grad);
      if (!std::isfinite(loss)) fail(ErrorCode::DivergedLoss, "MLP training loss diverged");
      epoch_loss += loss;
      ++n_batches;

      std::vector<std::span<double>> params;
      std::vector<std::span<const double>> grads;
      for (std::size_t l = 0; l < model.weights.size(); ++l) {
        params.emplace_back(model.weights[l]);
        params.emplace_back(model.biases[l]);
        grads.emplace_back(grad.weights[l]);
        grads.emplace_back(grad.biases[l]);
      }
      adam.step(params, grads);
    }
    const double test_loss = mlp_loss(model, test_x, test_y);
    out.train_loss.push_back(epoch_loss / static_cast<double>(n_batches));
    out.test_loss.push_back(test_loss);
    if (test_loss < best_loss) {
      best_loss = test_loss;
      best = model;
      out.best_epoch = epoch;
      out.best_test_loss = test_loss;
      since_best = 0;
    } else if (opts.train.patience > 0 && ++since_best >= opts.train.patience) {
      break;
    }
  }
  return best;
}

}  // namespace shaft::models
