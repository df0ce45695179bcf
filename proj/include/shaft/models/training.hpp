#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "shaft/error.hpp"
#include "shaft/matrix.hpp"

namespace shaft::models {

/// Mini-batch settings shared by the MLP and the CNN.
struct NetTrainOptions {
  std::size_t batch_size = 64;
  double learning_rate = 1e-3;
  int max_epochs = 100;
  /// Stop after this many epochs without a new best test loss; 0 disables.
  int patience = 0;
};

struct TrainLog {
  std::vector<double> train_loss;  // mean mini-batch loss per epoch
  std::vector<double> test_loss;   // full test-split loss after each epoch
  int best_epoch = -1;             // 0-based epoch whose snapshot was kept
  double best_test_loss = 0.0;
};

/// Adam with bias correction. Parameter arrays are registered positionally;
/// every call to `step` must pass them in the same order.
class Adam {
 public:
  explicit Adam(double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  void step(std::span<const std::span<double>> params, std::span<const std::span<const double>> grads) {
    if (m_.empty()) {
      for (const auto& p : params) {
        m_.emplace_back(p.size(), 0.0);
        v_.emplace_back(p.size(), 0.0);
      }
    }
    ++t_;
    const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (std::size_t a = 0; a < params.size(); ++a) {
      auto p = params[a];
      auto g = grads[a];
      auto& m = m_[a];
      auto& v = v_[a];
      for (std::size_t i = 0; i < p.size(); ++i) {
        m[i] = beta1_ * m[i] + (1.0 - beta1_) * g[i];
        v[i] = beta2_ * v[i] + (1.0 - beta2_) * g[i] * g[i];
        p[i] -= lr_ * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps_);
      }
    }
  }

 private:
  double lr_, beta1_, beta2_, eps_;
  std::int64_t t_ = 0;
  std::vector<std::vector<double>> m_, v_;
};

inline void require_finite(const Matrix& m, const char* what) {
  for (double v : m.data)
    if (!std::isfinite(v)) fail(ErrorCode::NonFinite, std::string(what) + " contains a non-finite value");
}

inline double leaky_relu(double x, double slope) { return x > 0.0 ? x : slope * x; }

}  // namespace shaft::models
