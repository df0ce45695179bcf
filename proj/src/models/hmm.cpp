#include "shaft/models/hmm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <set>

#include "shaft/error.hpp"
#include "shaft/rng.hpp"

namespace shaft::models {

namespace {

constexpr double kLogFloor = -1e300;
constexpr double kProbFloor = 1e-300;

double safe_log(double p) { return std::log(std::max(p, kProbFloor)); }

double log_sum_exp(std::span<const double> v) {
  const double m = *std::max_element(v.begin(), v.end());
  if (m <= kLogFloor) return m;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

struct SequencePosterior {
  Matrix gamma;       // T x S
  Matrix xi_sum;      // S x S, summed over t
  double loglik = 0.0;
};

// log-space forward-backward over one sequence
SequencePosterior posterior(const GaussianHmm& h, const Matrix& seq) {
  const std::size_t T = seq.rows, S = h.n_states;
  Matrix logb(T, S), alpha(T, S), beta(T, S);
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t j = 0; j < S; ++j) logb(t, j) = h.log_emission(j, seq.row(t));
  Matrix loga(S, S);
  for (std::size_t i = 0; i < S; ++i)
    for (std::size_t j = 0; j < S; ++j) loga(i, j) = safe_log(h.transition(i, j));

  std::vector<double> tmp(S);
  for (std::size_t j = 0; j < S; ++j) alpha(0, j) = safe_log(h.initial[j]) + logb(0, j);
  for (std::size_t t = 1; t < T; ++t)
    for (std::size_t j = 0; j < S; ++j) {
      for (std::size_t i = 0; i < S; ++i) tmp[i] = alpha(t - 1, i) + loga(i, j);
      alpha(t, j) = log_sum_exp(tmp) + logb(t, j);
    }
  for (std::size_t j = 0; j < S; ++j) beta(T - 1, j) = 0.0;
  for (std::size_t t = T - 1; t-- > 0;)
    for (std::size_t i = 0; i < S; ++i) {
      for (std::size_t j = 0; j < S; ++j) tmp[j] = loga(i, j) + logb(t + 1, j) + beta(t + 1, j);
      beta(t, i) = log_sum_exp(tmp);
    }

  SequencePosterior p;
  p.loglik = log_sum_exp(alpha.row(T - 1));
  p.gamma = Matrix(T, S);
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t j = 0; j < S; ++j) tmp[j] = alpha(t, j) + beta(t, j);
    const double norm = log_sum_exp(tmp);
    for (std::size_t j = 0; j < S; ++j) p.gamma(t, j) = std::exp(tmp[j] - norm);
  }
  p.xi_sum = Matrix(S, S);
  for (std::size_t t = 0; t + 1 < T; ++t)
    for (std::size_t i = 0; i < S; ++i)
      for (std::size_t j = 0; j < S; ++j)
        p.xi_sum(i, j) += std::exp(alpha(t, i) + loga(i, j) + logb(t + 1, j) + beta(t + 1, j) - p.loglik);
  return p;
}

}  // namespace

double GaussianHmm::log_emission(std::size_t state, std::span<const double> frame) const {
  if (frame.size() != dim) fail(ErrorCode::ShapeMismatch, "HMM frame width mismatch");
  double s = 0.0;
  for (std::size_t d = 0; d < dim; ++d) {
    const double var = variances(state, d);
    const double diff = frame[d] - means(state, d);
    s += std::log(2.0 * std::numbers::pi * var) + diff * diff / var;
  }
  return std::max(-0.5 * s, kLogFloor);
}

double hmm_log_likelihood(const GaussianHmm& hmm, const Matrix& sequence) {
  if (sequence.rows == 0) fail(ErrorCode::EmptySequence, "log-likelihood of an empty sequence");
  const std::size_t S = hmm.n_states;
  std::vector<double> alpha(S), next(S), tmp(S);
  for (std::size_t j = 0; j < S; ++j) alpha[j] = safe_log(hmm.initial[j]) + hmm.log_emission(j, sequence.row(0));
  for (std::size_t t = 1; t < sequence.rows; ++t) {
    for (std::size_t j = 0; j < S; ++j) {
      for (std::size_t i = 0; i < S; ++i) tmp[i] = alpha[i] + safe_log(hmm.transition(i, j));
      next[j] = log_sum_exp(tmp) + hmm.log_emission(j, sequence.row(t));
    }
    std::swap(alpha, next);
  }
  return std::max(log_sum_exp(alpha), kLogFloor);
}

double hmm_loglik(const GaussianHmm& hmm, const Matrix& sequence) {
  return hmm_log_likelihood(hmm, sequence) / static_cast<double>(sequence.rows);
}

HmmFitResult hmm_fit(const std::vector<Matrix>& sequences, std::size_t n_states, std::uint64_t seed,
                     const HmmFitOptions& opts) {
  if (sequences.empty()) fail(ErrorCode::EmptyInput, "HMM fit needs at least one sequence");
  if (n_states == 0) fail(ErrorCode::BadParams, "HMM needs at least one state");
  const std::size_t dim = sequences.front().cols;
  std::size_t frames = 0;
  for (const auto& s : sequences) {
    if (s.rows == 0) fail(ErrorCode::EmptyInput, "HMM fit got an empty sequence");
    if (s.cols != dim) fail(ErrorCode::ShapeMismatch, "HMM sequences differ in width");
    frames += s.rows;
  }
  if (frames < n_states) fail(ErrorCode::BadParams, "fewer frames than HMM states");

  GaussianHmm h;
  h.n_states = n_states;
  h.dim = dim;
  h.initial.assign(n_states, 1.0 / static_cast<double>(n_states));
  h.transition = Matrix(n_states, n_states, 1.0 / static_cast<double>(n_states));

  // pooled moments
  std::vector<double> mu(dim, 0.0), var(dim, 0.0);
  for (const auto& s : sequences)
    for (std::size_t t = 0; t < s.rows; ++t)
      for (std::size_t d = 0; d < dim; ++d) mu[d] += s(t, d);
  for (auto& m : mu) m /= static_cast<double>(frames);
  for (const auto& s : sequences)
    for (std::size_t t = 0; t < s.rows; ++t)
      for (std::size_t d = 0; d < dim; ++d) var[d] += (s(t, d) - mu[d]) * (s(t, d) - mu[d]);
  h.variance_floor.resize(dim);
  for (std::size_t d = 0; d < dim; ++d) {
    var[d] /= static_cast<double>(frames);
    h.variance_floor[d] = std::max(opts.variance_floor_fraction * var[d], 1e-12);
  }

  h.means = Matrix(n_states, dim);
  h.variances = Matrix(n_states, dim);
  {
    Engine eng(derive_seed(seed, "hmm-init"));
    std::uniform_int_distribution<std::size_t> pick(0, frames - 1);
    std::set<std::size_t> chosen;
    while (chosen.size() < n_states) chosen.insert(pick(eng));
    std::size_t j = 0;
    for (std::size_t flat : chosen) {
      std::size_t si = 0;
      while (flat >= sequences[si].rows) flat -= sequences[si++].rows;
      for (std::size_t d = 0; d < dim; ++d) {
        h.means(j, d) = sequences[si](flat, d);
        h.variances(j, d) = std::max(var[d], h.variance_floor[d]);
      }
      ++j;
    }
  }

  HmmFitResult result;
  std::vector<SequencePosterior> post(sequences.size());
  double prev = -std::numeric_limits<double>::infinity();
  for (int iter = 0; iter < opts.max_iter; ++iter) {
    const auto n_seq = static_cast<long>(sequences.size());
#pragma omp parallel for schedule(dynamic)
    for (long si = 0; si < n_seq; ++si)
      post[static_cast<std::size_t>(si)] = posterior(h, sequences[static_cast<std::size_t>(si)]);
    double ll = 0.0;
    for (const auto& p : post) ll += p.loglik;
    result.loglik_history.push_back(ll);
    result.iterations = iter;
    if (iter > 0 && (ll - prev) / static_cast<double>(frames) < opts.tol) {
      result.converged = true;
      break;
    }
    prev = ll;

    // M-step
    std::vector<double> pi(n_states, 0.0), occupancy(n_states, 0.0), trans_from(n_states, 0.0);
    Matrix xi(n_states, n_states), mean_acc(n_states, dim), var_acc(n_states, dim);
    for (std::size_t si = 0; si < sequences.size(); ++si) {
      const auto& p = post[si];
      const auto& s = sequences[si];
      for (std::size_t j = 0; j < n_states; ++j) pi[j] += p.gamma(0, j);
      for (std::size_t t = 0; t < s.rows; ++t)
        for (std::size_t j = 0; j < n_states; ++j) {
          const double g = p.gamma(t, j);
          occupancy[j] += g;
          if (t + 1 < s.rows) trans_from[j] += g;
          for (std::size_t d = 0; d < dim; ++d) mean_acc(j, d) += g * s(t, d);
        }
      for (std::size_t i = 0; i < n_states; ++i)
        for (std::size_t j = 0; j < n_states; ++j) xi(i, j) += p.xi_sum(i, j);
    }
    const double pi_total = static_cast<double>(sequences.size());
    for (std::size_t j = 0; j < n_states; ++j) h.initial[j] = pi[j] / pi_total;
    for (std::size_t i = 0; i < n_states; ++i) {
      double row = 0.0;
      for (std::size_t j = 0; j < n_states; ++j) row += xi(i, j);
      if (row > 0.0)
        for (std::size_t j = 0; j < n_states; ++j) h.transition(i, j) = xi(i, j) / row;
    }
    for (std::size_t j = 0; j < n_states; ++j) {
      if (!(occupancy[j] > 0.0)) continue;
      for (std::size_t d = 0; d < dim; ++d) h.means(j, d) = mean_acc(j, d) / occupancy[j];
    }
    for (std::size_t si = 0; si < sequences.size(); ++si) {
      const auto& p = post[si];
      const auto& s = sequences[si];
      for (std::size_t t = 0; t < s.rows; ++t)
        for (std::size_t j = 0; j < n_states; ++j)
          for (std::size_t d = 0; d < dim; ++d) {
            const double diff = s(t, d) - h.means(j, d);
            var_acc(j, d) += p.gamma(t, j) * diff * diff;
          }
    }
    for (std::size_t j = 0; j < n_states; ++j) {
      if (!(occupancy[j] > 0.0)) continue;
      for (std::size_t d = 0; d < dim; ++d) {
        double v = var_acc(j, d) / occupancy[j];
        if (v < h.variance_floor[d]) {
          v = h.variance_floor[d];
          h.variance_clamped = true;
        }
        h.variances(j, d) = v;
      }
    }
  }
  result.hmm = std::move(h);
  return result;
}

Matrix HmmDetector::features(const dsp::MfccExtractor& ex, std::span<const double> window) const {
  Matrix seq = ex.sequence(window);
  for (std::size_t t = 0; t < seq.rows; ++t) scaler1.apply_inplace(seq.row(t));
  return seq;
}

double HmmDetector::score(const dsp::MfccExtractor& ex, std::span<const double> window) const {
  return hmm_loglik(hmm, features(ex, window));
}

double HmmDetector::predict_proba(const dsp::MfccExtractor& ex, std::span<const double> window) const {
  std::vector<double> z{score(ex, window)};
  scaler2.apply_inplace(z);
  return head.predict_proba(z);
}

double HmmDetector::predict_proba(std::span<const double> window) const {
  return predict_proba(dsp::MfccExtractor(mfcc), window);
}

}  // namespace shaft::models
