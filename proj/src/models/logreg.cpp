#include "shaft/models/logreg.hpp"

#include <Eigen/Dense>

#include "shaft/error.hpp"

namespace shaft::models {

double LogRegModel::logit(std::span<const double> x) const {
  if (x.size() != weights.size()) fail(ErrorCode::ShapeMismatch, "logistic regression input width mismatch");
  double z = bias;
  for (std::size_t j = 0; j < x.size(); ++j) z += weights[j] * x[j];
  return z;
}

double logreg_objective(const LogRegModel& m, const Matrix& X, std::span<const int> y) {
  double loss = 0.0;
  for (std::size_t i = 0; i < X.rows; ++i) loss += bce_from_logit(m.logit(X.row(i)), y[i]);
  loss /= static_cast<double>(X.rows);
  double w2 = 0.0;
  for (double w : m.weights) w2 += w * w;
  return loss + 0.5 * m.reg * w2;
}

std::vector<double> logreg_gradient(const LogRegModel& m, const Matrix& X, std::span<const int> y) {
  const std::size_t d = X.cols;
  std::vector<double> g(d + 1, 0.0);
  for (std::size_t i = 0; i < X.rows; ++i) {
    const auto x = X.row(i);
    const double r = sigmoid(m.logit(x)) - (y[i] != 0 ? 1.0 : 0.0);
    for (std::size_t j = 0; j < d; ++j) g[j] += r * x[j];
    g[d] += r;
  }
  for (auto& v : g) v /= static_cast<double>(X.rows);
  for (std::size_t j = 0; j < d; ++j) g[j] += m.reg * m.weights[j];
  return g;
}

LogRegModel logreg_train(const Matrix& X, std::span<const int> y, double reg, const LogRegOptions& opts) {
  if (X.rows == 0 || y.size() != X.rows) fail(ErrorCode::ShapeMismatch, "logistic regression needs one label per row");
  bool has0 = false, has1 = false;
  for (int v : y) (v != 0 ? has1 : has0) = true;
  if (!has0 || !has1) fail(ErrorCode::SingleClass, "logistic regression needs both classes");
  for (double v : X.data)
    if (!std::isfinite(v)) fail(ErrorCode::NonFinite, "logistic regression input is not finite");

  const std::size_t d = X.cols;
  LogRegModel m;
  m.weights.assign(d, 0.0);
  m.reg = reg;
  const double n = static_cast<double>(X.rows);

  double objective = logreg_objective(m, X, y);
  for (int iter = 0; iter < opts.max_iter; ++iter) {
    const auto g = logreg_gradient(m, X, y);
    Eigen::Map<const Eigen::VectorXd> grad(g.data(), static_cast<Eigen::Index>(d + 1));
    if (grad.norm() < opts.grad_tol) break;

    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(d + 1), static_cast<Eigen::Index>(d + 1));
    Eigen::VectorXd xi(static_cast<Eigen::Index>(d + 1));
    for (std::size_t i = 0; i < X.rows; ++i) {
      const auto x = X.row(i);
      for (std::size_t j = 0; j < d; ++j) xi[static_cast<Eigen::Index>(j)] = x[j];
      xi[static_cast<Eigen::Index>(d)] = 1.0;
      const double p = sigmoid(m.logit(x));
      H.selfadjointView<Eigen::Lower>().rankUpdate(xi, p * (1.0 - p) / n);
    }
    H = H.selfadjointView<Eigen::Lower>();
    for (std::size_t j = 0; j < d; ++j) H(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(j)) += reg;
    H.diagonal().array() += 1e-12;
    const Eigen::VectorXd step = H.ldlt().solve(grad);
    if (!step.allFinite()) break;

    // backtracking keeps the objective monotone on (near-)separable data
    double t = 1.0;
    LogRegModel trial = m;
    bool improved = false;
    for (int ls = 0; ls < 40; ++ls, t *= 0.5) {
      for (std::size_t j = 0; j < d; ++j) trial.weights[j] = m.weights[j] - t * step[static_cast<Eigen::Index>(j)];
      trial.bias = m.bias - t * step[static_cast<Eigen::Index>(d)];
      const double obj = logreg_objective(trial, X, y);
      if (obj <= objective - 1e-4 * t * grad.dot(step) || obj < objective) {
        objective = obj;
        improved = true;
        break;
      }
    }
    if (!improved) break;
    m = trial;
  }
  return m;
}

}  // namespace shaft::models
