#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "shaft/dsp.hpp"
#include "shaft/matrix.hpp"
#include "shaft/models/logreg.hpp"

namespace shaft::models {

/// HMM with diagonal-Gaussian emissions. A sequence is a Matrix whose rows
/// are frames.
struct GaussianHmm {
  std::size_t n_states = 0;
  std::size_t dim = 0;
  std::vector<double> initial;  // pi
  Matrix transition;            // A, rows sum to 1
  Matrix means;                 // n_states x dim
  Matrix variances;             // n_states x dim
  std::vector<double> variance_floor;  // per dim
  bool variance_clamped = false;       // some variance hit the floor during fitting

  [[nodiscard]] double log_emission(std::size_t state, std::span<const double> frame) const;
};

struct HmmFitOptions {
  int max_iter = 200;
  /// Stop once the mean per-frame log-likelihood improves by less than this.
  double tol = 1e-6;
  /// Variance floor as a fraction of each feature's overall variance.
  double variance_floor_fraction = 1e-6;
};

struct HmmFitResult {
  GaussianHmm hmm;
  std::vector<double> loglik_history;  // total log-likelihood before each M-step
  int iterations = 0;
  bool converged = false;
};

/// Baum-Welch in log space. Means start at distinct random frames, variances
/// at the pooled variance, pi and A uniform.
HmmFitResult hmm_fit(const std::vector<Matrix>& sequences, std::size_t n_states, std::uint64_t seed,
                     const HmmFitOptions& opts = {});

/// Forward-algorithm log-likelihood of the whole sequence.
double hmm_log_likelihood(const GaussianHmm& hmm, const Matrix& sequence);

/// Length-normalized log-likelihood (per frame).
double hmm_loglik(const GaussianHmm& hmm, const Matrix& sequence);

/// Detector for one speed interval: MFCC sequence -> scaler 1 -> HMM
/// per-frame log-likelihood -> scaler 2 -> logistic regression.
struct HmmDetector {
  double rpm_lo = 0.0;
  double rpm_hi = 0.0;
  dsp::MfccConfig mfcc;
  dsp::StandardScaler scaler1;
  GaussianHmm hmm;
  dsp::StandardScaler scaler2;
  LogRegModel head;

  [[nodiscard]] bool covers(double rpm) const noexcept { return rpm >= rpm_lo && rpm < rpm_hi; }
  /// Scaled MFCC sequence of one window.
  [[nodiscard]] Matrix features(const dsp::MfccExtractor& ex, std::span<const double> window) const;
  [[nodiscard]] double score(const dsp::MfccExtractor& ex, std::span<const double> window) const;
  [[nodiscard]] double predict_proba(const dsp::MfccExtractor& ex, std::span<const double> window) const;
  [[nodiscard]] double predict_proba(std::span<const double> window) const;
};

}  // namespace shaft::models
