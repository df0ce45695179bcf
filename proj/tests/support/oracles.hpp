#pragma once

// Independent reference computations the fast code is checked against.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <random>
#include <span>
#include <vector>

#include "shaft/matrix.hpp"
#include "shaft/models/cnn1d.hpp"
#include "shaft/models/hmm.hpp"
#include "shaft/models/mlp.hpp"
#include "shaft/rng.hpp"

namespace oracle {

inline std::vector<std::complex<long double>> naive_dft(std::span<const double> x) {
  const std::size_t n = x.size();
  std::vector<std::complex<long double>> out(n / 2 + 1);
  for (std::size_t k = 0; k < out.size(); ++k) {
    std::complex<long double> acc = 0;
    for (std::size_t t = 0; t < n; ++t) {
      const long double ang = -2.0L * std::numbers::pi_v<long double> * static_cast<long double>((k * t) % n) /
                              static_cast<long double>(n);
      acc += static_cast<long double>(x[t]) * std::complex<long double>(std::cos(ang), std::sin(ang));
    }
    out[k] = acc;
  }
  return out;
}

inline std::vector<double> gaussian(std::size_t n, std::uint64_t seed, double sd = 1.0) {
  shaft::Engine eng(seed);
  std::normal_distribution<double> nd(0.0, sd);
  std::vector<double> x(n);
  for (auto& v : x) v = nd(eng);
  return x;
}

inline shaft::Matrix gaussian_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed, double sd = 1.0) {
  shaft::Matrix m(rows, cols);
  m.data = gaussian(rows * cols, seed, sd);
  return m;
}

/// |a - b| / max(|a| + |b|, floor); the floor keeps near-zero entries from
/// dominating through rounding alone.
inline double rel_err(double a, double b, double floor = 1e-6) {
  return std::abs(a - b) / std::max(std::abs(a) + std::abs(b), floor);
}

/// Central differences of `loss` over every entry of each parameter array,
/// compared with the analytic gradient. Returns the largest relative error.
inline double max_fd_error(const std::vector<std::span<double>>& params,
                           const std::vector<std::span<const double>>& analytic, const std::function<double()>& loss,
                           double eps = 1e-5) {
  double worst = 0.0;
  for (std::size_t a = 0; a < params.size(); ++a)
    for (std::size_t i = 0; i < params[a].size(); ++i) {
      double& p = params[a][i];
      const double keep = p;
      p = keep + eps;
      const double up = loss();
      p = keep - eps;
      const double down = loss();
      p = keep;
      worst = std::max(worst, rel_err(analytic[a][i], (up - down) / (2.0 * eps)));
    }
  return worst;
}

inline double mlp_gradient_error(shaft::models::MlpModel m, const shaft::Matrix& X, std::span<const int> y) {
  shaft::models::MlpGradients g;
  shaft::models::mlp_loss_and_grad(m, X, y, g);
  std::vector<std::span<double>> params;
  std::vector<std::span<const double>> grads;
  for (std::size_t l = 0; l < m.weights.size(); ++l) {
    params.emplace_back(m.weights[l]);
    grads.emplace_back(g.weights[l]);
    params.emplace_back(m.biases[l]);
    grads.emplace_back(g.biases[l]);
  }
  return max_fd_error(params, grads, [&] { return shaft::models::mlp_loss(m, X, y); });
}

inline double cnn_gradient_error(shaft::models::Cnn1dModel m, const shaft::Matrix& X, std::span<const int> y) {
  using namespace shaft::models;
  CnnGradients g;
  cnn_loss_and_grad(m, X, y, g);
  std::vector<std::span<double>> params;
  std::vector<std::span<const double>> grads;
  for (std::size_t l = 0; l < m.blocks.size(); ++l) {
    params.emplace_back(m.blocks[l].weight);
    grads.emplace_back(g.blocks[l].weight);
    params.emplace_back(m.blocks[l].gamma);
    grads.emplace_back(g.blocks[l].gamma);
    params.emplace_back(m.blocks[l].beta);
    grads.emplace_back(g.blocks[l].beta);
  }
  params.emplace_back(m.fc_w);
  grads.emplace_back(g.fc_w);
  params.emplace_back(m.fc_b);
  grads.emplace_back(g.fc_b);
  params.emplace_back(m.out_w);
  grads.emplace_back(g.out_w);
  params.emplace_back(m.out_b);
  grads.emplace_back(g.out_b);
  CnnGradients scratch;
  // training-mode loss, the function whose gradient is reported
  return max_fd_error(params, grads, [&] { return cnn_loss_and_grad(m, X, y, scratch); });
}

/// log sum over every state path of p(path, x), enumerated explicitly.
inline double hmm_path_sum(const shaft::models::GaussianHmm& h, const shaft::Matrix& x) {
  const std::size_t n = h.n_states, T = x.rows;
  std::vector<std::size_t> path(T, 0);
  std::vector<long double> terms;
  while (true) {
    long double lp = std::log(static_cast<long double>(h.initial[path[0]])) + h.log_emission(path[0], x.row(0));
    for (std::size_t t = 1; t < T; ++t)
      lp += std::log(static_cast<long double>(h.transition(path[t - 1], path[t]))) + h.log_emission(path[t], x.row(t));
    terms.push_back(lp);
    std::size_t t = 0;
    while (t < T && ++path[t] == n) path[t++] = 0;
    if (t == T) break;
  }
  const long double top = *std::max_element(terms.begin(), terms.end());
  long double acc = 0.0L;
  for (long double v : terms) acc += std::exp(v - top);
  return static_cast<double>(top + std::log(acc));
}

/// Random stochastic HMM with spread-out means.
inline shaft::models::GaussianHmm random_hmm(std::size_t n_states, std::size_t dim, std::uint64_t seed) {
  shaft::Engine eng(seed);
  std::uniform_real_distribution<double> u(0.1, 1.0);
  std::normal_distribution<double> nd(0.0, 1.0);
  shaft::models::GaussianHmm h;
  h.n_states = n_states;
  h.dim = dim;
  h.initial.resize(n_states);
  h.transition = shaft::Matrix(n_states, n_states);
  h.means = shaft::Matrix(n_states, dim);
  h.variances = shaft::Matrix(n_states, dim);
  h.variance_floor.assign(dim, 1e-6);
  double s = 0.0;
  for (auto& v : h.initial) s += (v = u(eng));
  for (auto& v : h.initial) v /= s;
  for (std::size_t i = 0; i < n_states; ++i) {
    double r = 0.0;
    for (std::size_t j = 0; j < n_states; ++j) r += (h.transition(i, j) = u(eng));
    for (std::size_t j = 0; j < n_states; ++j) h.transition(i, j) /= r;
    for (std::size_t d = 0; d < dim; ++d) {
      h.means(i, d) = 2.0 * nd(eng);
      h.variances(i, d) = u(eng) + 0.2;
    }
  }
  return h;
}

/// Samples a sequence from `h`.
inline shaft::Matrix hmm_sample(const shaft::models::GaussianHmm& h, std::size_t T, std::uint64_t seed) {
  shaft::Engine eng(seed);
  std::normal_distribution<double> nd(0.0, 1.0);
  auto draw = [&](std::span<const double> p) {
    std::discrete_distribution<std::size_t> dd(p.begin(), p.end());
    return dd(eng);
  };
  shaft::Matrix x(T, h.dim);
  std::size_t s = draw(h.initial);
  for (std::size_t t = 0; t < T; ++t) {
    if (t > 0) s = draw(h.transition.row(s));
    for (std::size_t d = 0; d < h.dim; ++d) x(t, d) = h.means(s, d) + std::sqrt(h.variances(s, d)) * nd(eng);
  }
  return x;
}

}  // namespace oracle
