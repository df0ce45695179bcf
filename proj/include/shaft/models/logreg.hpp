#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "shaft/matrix.hpp"

namespace shaft::models {

inline double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

/// log(1 + exp(z)) without overflow.
inline double softplus(double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

/// Binary cross-entropy of logit z against label y, computed from the logit.
inline double bce_from_logit(double z, int y) { return softplus(z) - (y != 0 ? z : 0.0); }

struct LogRegModel {
  std::vector<double> weights;
  double bias = 0.0;
  double reg = 0.0;

  [[nodiscard]] double logit(std::span<const double> x) const;
  [[nodiscard]] double predict_proba(std::span<const double> x) const { return sigmoid(logit(x)); }
};

struct LogRegOptions {
  double grad_tol = 1e-9;
  int max_iter = 100;
};

/// Mean cross-entropy plus reg/2 |w|^2 (bias is not penalized).
double logreg_objective(const LogRegModel& m, const Matrix& X, std::span<const int> y);
/// Gradient of `logreg_objective`; last entry is the bias component.
std::vector<double> logreg_gradient(const LogRegModel& m, const Matrix& X, std::span<const int> y);

/// Damped Newton iterations until the gradient norm falls below the
/// tolerance. Throws SingleClass / NonFinite.
LogRegModel logreg_train(const Matrix& X, std::span<const int> y, double reg, const LogRegOptions& opts = {});

inline double logreg_predict(const LogRegModel& m, std::span<const double> x) { return m.predict_proba(x); }

}  // namespace shaft::models
