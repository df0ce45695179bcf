#include "shaft/models/cnn1d.hpp"

#include <algorithm>
#include <numeric>
#include <random>

#include "shaft/error.hpp"
#include "shaft/kernels/kernels.hpp"
#include "shaft/rng.hpp"

namespace shaft::models {

namespace k = shaft::kernels::parallel;

namespace {

constexpr std::size_t kEvalChunk = 32;

struct BlockCache {
  std::vector<double> input;   // batch x c_in x len
  std::vector<double> xhat;    // batch x c_out x len
  std::vector<double> pre;     // gamma*xhat + beta, before activation
  std::vector<std::uint32_t> argmax;  // per pooled output, index into len
  std::vector<double> mean, var, invstd;
};

struct Cache {
  std::vector<BlockCache> blocks;
  std::vector<double> flat;    // batch x flat
  std::vector<double> fc_pre;  // batch x fc_width
  std::vector<double> fc_act;
  std::vector<double> logits;
};

void check_input(const Cnn1dModel& m, std::size_t width) {
  if (width != m.arch.input_length)
    fail(ErrorCode::ShapeMismatch, "CNN expects " + std::to_string(m.arch.input_length) + " inputs, got " +
                                       std::to_string(width));
}

void run_forward(const Cnn1dModel& m, std::span<const double> x, std::size_t batch, bool training, Cache& c) {
  const double slope = m.arch.negative_slope;
  const std::size_t kernel = m.arch.kernel, pool = m.arch.pool;
  c.blocks.resize(m.blocks.size());
  std::vector<double> current(x.begin(), x.end());

  for (std::size_t l = 0; l < m.blocks.size(); ++l) {
    const auto& blk = m.blocks[l];
    auto& bc = c.blocks[l];
    const std::size_t len = blk.length, out_len = len / pool, co = blk.c_out;
    bc.input = std::move(current);

    std::vector<double> conv(batch * co * len);
    const std::vector<double> zero_bias(co, 0.0);
    k::conv1d_forward(bc.input, blk.weight, zero_bias, conv, {batch, blk.c_in, co, len, kernel});

    bc.mean.assign(co, 0.0);
    bc.var.assign(co, 0.0);
    bc.invstd.assign(co, 0.0);
    const double count = static_cast<double>(batch * len);
    for (std::size_t ch = 0; ch < co; ++ch) {
      double mu, var;
      if (training) {
        double s = 0.0;
        for (std::size_t b = 0; b < batch; ++b) {
          const double* r = conv.data() + (b * co + ch) * len;
          for (std::size_t t = 0; t < len; ++t) s += r[t];
        }
        mu = s / count;
        double v = 0.0;
        for (std::size_t b = 0; b < batch; ++b) {
          const double* r = conv.data() + (b * co + ch) * len;
          for (std::size_t t = 0; t < len; ++t) v += (r[t] - mu) * (r[t] - mu);
        }
        var = v / count;
      } else {
        mu = blk.running_mean[ch];
        var = blk.running_var[ch];
      }
      bc.mean[ch] = mu;
      bc.var[ch] = var;
      bc.invstd[ch] = 1.0 / std::sqrt(var + m.bn_eps);
    }

    bc.xhat.resize(conv.size());
    bc.pre.resize(conv.size());
    bc.argmax.resize(batch * co * out_len);
    current.assign(batch * co * out_len, 0.0);
    for (std::size_t b = 0; b < batch; ++b)
      for (std::size_t ch = 0; ch < co; ++ch) {
        const std::size_t base = (b * co + ch) * len;
        for (std::size_t t = 0; t < len; ++t) {
          const double xh = (conv[base + t] - bc.mean[ch]) * bc.invstd[ch];
          bc.xhat[base + t] = xh;
          bc.pre[base + t] = blk.gamma[ch] * xh + blk.beta[ch];
        }
        const std::size_t obase = (b * co + ch) * out_len;
        for (std::size_t o = 0; o < out_len; ++o) {
          std::size_t arg = o * pool;
          double best = leaky_relu(bc.pre[base + arg], slope);
          for (std::size_t j = 1; j < pool; ++j) {
            const double v = leaky_relu(bc.pre[base + o * pool + j], slope);
            if (v > best) {
              best = v;
              arg = o * pool + j;
            }
          }
          current[obase + o] = best;
          bc.argmax[obase + o] = static_cast<std::uint32_t>(arg);
        }
      }
  }

  const std::size_t flat = m.flat_size(), fw = m.arch.fc_width;
  c.flat = std::move(current);
  c.fc_pre.resize(batch * fw);
  k::dense_forward(c.flat, m.fc_w, m.fc_b, c.fc_pre, {batch, flat, fw});
  c.fc_act = c.fc_pre;
  for (auto& v : c.fc_act) v = leaky_relu(v, slope);
  c.logits.resize(batch);
  k::dense_forward(c.fc_act, m.out_w, m.out_b, c.logits, {batch, fw, 1});
}

}  // namespace

std::size_t Cnn1dModel::flat_size() const {
  if (blocks.empty()) return arch.input_length;
  return blocks.back().c_out * (blocks.back().length / arch.pool);
}

double Cnn1dModel::logit(std::span<const double> x) const {
  check_input(*this, x.size());
  Cache c;
  run_forward(*this, x, 1, false, c);
  return c.logits[0];
}

std::vector<double> Cnn1dModel::logits(const Matrix& X) const {
  check_input(*this, X.cols);
  std::vector<double> out(X.rows);
  Cache c;
  for (std::size_t first = 0; first < X.rows; first += kEvalChunk) {
    const std::size_t n = std::min(kEvalChunk, X.rows - first);
    run_forward(*this, {X.data.data() + first * X.cols, n * X.cols}, n, false, c);
    std::copy(c.logits.begin(), c.logits.end(), out.begin() + static_cast<std::ptrdiff_t>(first));
  }
  return out;
}

Cnn1dModel cnn_init(const CnnArch& arch, std::uint64_t seed) {
  if (arch.kernel % 2 == 0 || arch.pool == 0 || arch.base_channels == 0 || arch.fc_width == 0)
    fail(ErrorCode::BadParams, "CNN needs an odd kernel and non-zero pool/channels/width");
  Cnn1dModel m;
  m.arch = arch;
  Engine eng(derive_seed(seed, "cnn-init"));
  auto uniform_fill = [&eng](std::vector<double>& v, std::size_t n, std::size_t fan_in) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    v.resize(n);
    for (auto& x : v) x = dist(eng);
  };

  std::size_t len = arch.input_length, c_in = 1, c_out = arch.base_channels;
  for (std::size_t l = 0; l < arch.n_conv; ++l) {
    if (len / arch.pool == 0) fail(ErrorCode::BadParams, "too many conv blocks for the input length");
    ConvBlock b;
    b.c_in = c_in;
    b.c_out = c_out;
    b.length = len;
    uniform_fill(b.weight, c_out * c_in * arch.kernel, c_in * arch.kernel);
    b.gamma.assign(c_out, 1.0);
    b.beta.assign(c_out, 0.0);
    b.running_mean.assign(c_out, 0.0);
    b.running_var.assign(c_out, 1.0);
    m.blocks.push_back(std::move(b));
    len /= arch.pool;
    c_in = c_out;
    c_out *= 2;
  }
  const std::size_t flat = m.flat_size();
  uniform_fill(m.fc_w, flat * arch.fc_width, flat);
  m.fc_b.assign(arch.fc_width, 0.0);
  uniform_fill(m.out_w, arch.fc_width, arch.fc_width);
  m.out_b.assign(1, 0.0);
  return m;
}

double cnn_loss_and_grad(const Cnn1dModel& m, const Matrix& X, std::span<const int> y, CnnGradients& grad) {
  check_input(m, X.cols);
  if (y.size() != X.rows || X.rows == 0) fail(ErrorCode::ShapeMismatch, "CNN needs one label per row");
  const std::size_t batch = X.rows;
  const double slope = m.arch.negative_slope;
  Cache c;
  run_forward(m, X.data, batch, true, c);

  const double inv_n = 1.0 / static_cast<double>(batch);
  double loss = 0.0;
  std::vector<double> dlogit(batch);
  for (std::size_t b = 0; b < batch; ++b) {
    loss += bce_from_logit(c.logits[b], y[b]);
    dlogit[b] = (sigmoid(c.logits[b]) - (y[b] != 0 ? 1.0 : 0.0)) * inv_n;
  }

  const std::size_t flat = m.flat_size(), fw = m.arch.fc_width;
  grad.out_w.resize(fw);
  grad.out_b.resize(1);
  k::dense_backward_weights(c.fc_act, dlogit, grad.out_w, grad.out_b, {batch, fw, 1});
  std::vector<double> dfc(batch * fw);
  k::dense_backward_input(dlogit, m.out_w, dfc, {batch, fw, 1});
  for (std::size_t i = 0; i < dfc.size(); ++i)
    if (c.fc_pre[i] <= 0.0) dfc[i] *= slope;
  grad.fc_w.resize(flat * fw);
  grad.fc_b.resize(fw);
  k::dense_backward_weights(c.flat, dfc, grad.fc_w, grad.fc_b, {batch, flat, fw});
  std::vector<double> dout(batch * flat);
  k::dense_backward_input(dfc, m.fc_w, dout, {batch, flat, fw});

  grad.blocks.resize(m.blocks.size());
  for (std::size_t l = m.blocks.size(); l-- > 0;) {
    const auto& blk = m.blocks[l];
    const auto& bc = c.blocks[l];
    auto& g = grad.blocks[l];
    const std::size_t len = blk.length, out_len = len / m.arch.pool, co = blk.c_out;
    const double count = static_cast<double>(batch * len);

    // un-pool and activation derivative
    std::vector<double> dpre(batch * co * len, 0.0);
    for (std::size_t i = 0; i < batch * co; ++i)
      for (std::size_t o = 0; o < out_len; ++o) {
        const std::size_t pos = i * len + bc.argmax[i * out_len + o];
        dpre[pos] += dout[i * out_len + o] * (bc.pre[pos] > 0.0 ? 1.0 : slope);
      }

    g.gamma.assign(co, 0.0);
    g.beta.assign(co, 0.0);
    g.batch_mean = bc.mean;
    g.batch_var = bc.var;
    std::vector<double> dconv(dpre.size());
    for (std::size_t ch = 0; ch < co; ++ch) {
      double sum_dy = 0.0, sum_dy_xhat = 0.0;
      for (std::size_t b = 0; b < batch; ++b) {
        const std::size_t base = (b * co + ch) * len;
        for (std::size_t t = 0; t < len; ++t) {
          sum_dy += dpre[base + t];
          sum_dy_xhat += dpre[base + t] * bc.xhat[base + t];
        }
      }
      g.gamma[ch] = sum_dy_xhat;
      g.beta[ch] = sum_dy;
      // d(conv) = gamma*invstd/N * (N dy - sum dy - xhat sum(dy xhat))
      const double scale = blk.gamma[ch] * bc.invstd[ch] / count;
      for (std::size_t b = 0; b < batch; ++b) {
        const std::size_t base = (b * co + ch) * len;
        for (std::size_t t = 0; t < len; ++t)
          dconv[base + t] = scale * (count * dpre[base + t] - sum_dy - bc.xhat[base + t] * sum_dy_xhat);
      }
    }

    const kernels::ConvShape s{batch, blk.c_in, co, len, m.arch.kernel};
    g.weight.resize(blk.weight.size());
    std::vector<double> unused_bias(co);
    k::conv1d_backward_weights(bc.input, dconv, g.weight, unused_bias, s);
    if (l == 0) break;
    dout.assign(batch * blk.c_in * len, 0.0);
    k::conv1d_backward_input(dconv, blk.weight, dout, s);
  }
  return loss * inv_n;
}

double cnn_loss(const Cnn1dModel& m, const Matrix& X, std::span<const int> y) {
  const auto z = m.logits(X);
  double loss = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) loss += bce_from_logit(z[i], y[i]);
  return loss / static_cast<double>(z.size());
}

Cnn1dModel cnn_train(const Matrix& train_x, std::span<const int> train_y, const Matrix& test_x,
                     std::span<const int> test_y, std::size_t n_conv, std::uint64_t seed, const CnnOptions& opts,
                     TrainLog* log) {
  if (train_x.rows == 0 || test_x.rows == 0) fail(ErrorCode::TooFew, "CNN needs non-empty train and test splits");
  require_finite(train_x, "CNN training input");
  require_finite(test_x, "CNN test input");
  CnnArch arch = opts.arch;
  arch.n_conv = n_conv;
  arch.input_length = train_x.cols;
  Cnn1dModel model = cnn_init(arch, seed);
  Cnn1dModel best = model;

  Adam adam(opts.train.learning_rate);
  Engine shuffle_eng(derive_seed(seed, "cnn-shuffle"));
  std::vector<std::size_t> order(train_x.rows);
  std::iota(order.begin(), order.end(), 0);

  TrainLog local;
  TrainLog& out = log ? *log : local;
  out = {};
  double best_loss = std::numeric_limits<double>::infinity();
  int since_best = 0;
  CnnGradients grad;
  std::vector<int> batch_y;

  for (int epoch = 0; epoch < opts.train.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_eng);
    double epoch_loss = 0.0;
    std::size_t n_batches = 0;
    for (std::size_t first = 0; first < order.size(); first += opts.train.batch_size) {
      const std::size_t n = std::min(opts.train.batch_size, order.size() - first);
      // batch statistics of a single row are degenerate
      if (n < 2 && n_batches > 0) continue;
      const Matrix batch_x = take_rows(train_x, std::span(order).subspan(first, n));
      batch_y.resize(n);
      for (std::size_t i = 0; i < n; ++i) batch_y[i] = train_y[order[first + i]];
      const double loss = cnn_loss_and_grad(model, batch_x, batch_y, grad);
      if (!std::isfinite(loss)) fail(ErrorCode::DivergedLoss, "CNN training loss diverged");
      epoch_loss += loss;
      ++n_batches;

      std::vector<std::span<double>> params;
      std::vector<std::span<const double>> grads;
      for (std::size_t l = 0; l < model.blocks.size(); ++l) {
        params.emplace_back(model.blocks[l].weight);
        params.emplace_back(model.blocks[l].gamma);
        params.emplace_back(model.blocks[l].beta);
        grads.emplace_back(grad.blocks[l].weight);
        grads.emplace_back(grad.blocks[l].gamma);
        grads.emplace_back(grad.blocks[l].beta);
      }
      params.emplace_back(model.fc_w);
      params.emplace_back(model.fc_b);
      params.emplace_back(model.out_w);
      params.emplace_back(model.out_b);
      grads.emplace_back(grad.fc_w);
      grads.emplace_back(grad.fc_b);
      grads.emplace_back(grad.out_w);
      grads.emplace_back(grad.out_b);
      adam.step(params, grads);

      const double mom = model.bn_momentum;
      for (std::size_t l = 0; l < model.blocks.size(); ++l) {
        auto& blk = model.blocks[l];
        const double count = static_cast<double>(n * blk.length);
        const double unbias = count > 1.0 ? count / (count - 1.0) : 1.0;
        for (std::size_t ch = 0; ch < blk.c_out; ++ch) {
          blk.running_mean[ch] = (1.0 - mom) * blk.running_mean[ch] + mom * grad.blocks[l].batch_mean[ch];
          blk.running_var[ch] = (1.0 - mom) * blk.running_var[ch] + mom * grad.blocks[l].batch_var[ch] * unbias;
        }
      }
    }
    const double test_loss = cnn_loss(model, test_x, test_y);
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
