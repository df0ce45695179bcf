#include <doctest.h>

#include <cmath>
#include <numbers>

#include "oracles.hpp"
#include "shaft/error.hpp"
#include "shaft/models/hmm.hpp"

using namespace shaft;
using namespace shaft::models;

namespace {

double gauss_logpdf(std::span<const double> x, std::span<const double> mu, std::span<const double> var) {
  double lp = 0.0;
  for (std::size_t d = 0; d < x.size(); ++d)
    lp += -0.5 * (std::log(2.0 * std::numbers::pi * var[d]) + (x[d] - mu[d]) * (x[d] - mu[d]) / var[d]);
  return lp;
}

void check_stochastic(const GaussianHmm& h) {
  double s = 0.0;
  for (double v : h.initial) {
    CHECK(v >= 0.0);
    s += v;
  }
  CHECK(std::abs(s - 1.0) < 1e-12);
  for (std::size_t i = 0; i < h.n_states; ++i) {
    double r = 0.0;
    for (std::size_t j = 0; j < h.n_states; ++j) {
      CHECK(h.transition(i, j) >= 0.0);
      r += h.transition(i, j);
    }
    CHECK(std::abs(r - 1.0) < 1e-12);
  }
}

std::vector<Matrix> training_set(const GaussianHmm& truth, std::uint64_t seed) {
  std::vector<Matrix> seqs;
  for (std::uint64_t k = 0; k < 6; ++k) seqs.push_back(oracle::hmm_sample(truth, 40, derive_seed(seed, k)));
  return seqs;
}

}  // namespace

TEST_CASE("forward algorithm equals the exhaustive path sum") {
  for (std::size_t n = 1; n <= 3; ++n)
    for (std::size_t T = 1; T <= 4; ++T)
      for (std::uint64_t s = 0; s < 5; ++s) {
        const auto h = oracle::random_hmm(n, 2, 100 * n + 10 * T + s);
        const auto x = oracle::hmm_sample(h, T, s);
        const double fwd = hmm_log_likelihood(h, x);
        const double ref = oracle::hmm_path_sum(h, x);
        CHECK(std::abs(fwd - ref) < 1e-9);
      }
}

TEST_CASE("Baum-Welch never decreases the likelihood and keeps A and pi stochastic") {
  HmmFitOptions opts;
  opts.max_iter = 25;
  opts.tol = -1e300;  // run every iteration
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto truth = oracle::random_hmm(3, 2, 500 + seed);
    const auto seqs = training_set(truth, seed);
    const auto fit = hmm_fit(seqs, 3, seed, opts);
    REQUIRE(fit.loglik_history.size() == 25);
    for (std::size_t i = 1; i < fit.loglik_history.size(); ++i)
      CHECK(fit.loglik_history[i] >= fit.loglik_history[i - 1] - 1e-9 * std::abs(fit.loglik_history[i - 1]));
    check_stochastic(fit.hmm);
  }
  // after every single step
  const auto truth = oracle::random_hmm(2, 3, 9);
  const auto seqs = training_set(truth, 9);
  for (int k = 1; k <= 8; ++k) {
    HmmFitOptions o = opts;
    o.max_iter = k;
    check_stochastic(hmm_fit(seqs, 2, 1, o).hmm);
  }
}

TEST_CASE("single state reduces to the closed-form Gaussian") {
  const auto truth = oracle::random_hmm(2, 2, 4);
  const auto seqs = training_set(truth, 4);
  const auto fit = hmm_fit(seqs, 1, 3);
  CHECK(fit.converged);
  std::vector<double> mu(2, 0.0), var(2, 0.0);
  double n = 0;
  for (const auto& s : seqs)
    for (std::size_t t = 0; t < s.rows; ++t, ++n)
      for (std::size_t d = 0; d < 2; ++d) mu[d] += s(t, d);
  for (auto& m : mu) m /= n;
  for (const auto& s : seqs)
    for (std::size_t t = 0; t < s.rows; ++t)
      for (std::size_t d = 0; d < 2; ++d) var[d] += (s(t, d) - mu[d]) * (s(t, d) - mu[d]);
  for (auto& v : var) v /= n;
  for (std::size_t d = 0; d < 2; ++d) {
    CHECK(fit.hmm.means(0, d) == doctest::Approx(mu[d]).epsilon(1e-12));
    CHECK(fit.hmm.variances(0, d) == doctest::Approx(var[d]).epsilon(1e-12));
  }
  double direct = 0.0;
  for (std::size_t t = 0; t < seqs[0].rows; ++t) direct += gauss_logpdf(seqs[0].row(t), mu, var);
  CHECK(hmm_log_likelihood(fit.hmm, seqs[0]) == doctest::Approx(direct).epsilon(1e-10));

  Matrix one(1, 2);
  one.data = {0.3, -0.2};
  CHECK(hmm_loglik(fit.hmm, one) == doctest::Approx(gauss_logpdf(one.row(0), mu, var)).epsilon(1e-10));
}

TEST_CASE("per-frame log-likelihood contracts") {
  const auto h = oracle::random_hmm(3, 2, 21);
  CHECK_THROWS_AS(hmm_loglik(h, Matrix(0, 2)), Error);
  try {
    hmm_loglik(h, Matrix(0, 2));
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::EmptySequence);
  }

  const auto x = oracle::hmm_sample(h, 300, 5);
  Matrix twice(600, 2);
  std::copy(x.data.begin(), x.data.end(), twice.data.begin());
  std::copy(x.data.begin(), x.data.end(), twice.data.begin() + 600);
  const double a = hmm_loglik(h, x), b = hmm_loglik(h, twice);
  CHECK(std::abs(b - a) < 0.1 * std::abs(a));

  Matrix far(3, 2, 1e150);
  const double v = hmm_loglik(h, far);
  CHECK(std::isfinite(v));
}

TEST_CASE("fit errors and determinism") {
  try {
    hmm_fit({}, 2, 1);
    FAIL("expected EmptyInput");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::EmptyInput);
  }
  const auto truth = oracle::random_hmm(2, 2, 8);
  const auto seqs = training_set(truth, 8);
  const auto a = hmm_fit(seqs, 2, 5), b = hmm_fit(seqs, 2, 5);
  CHECK(a.hmm.means == b.hmm.means);
  CHECK(a.hmm.transition == b.hmm.transition);
  CHECK(a.loglik_history == b.loglik_history);

  // a constant feature hits the variance floor and is flagged
  auto flat = seqs;
  for (auto& s : flat)
    for (std::size_t t = 0; t < s.rows; ++t) s(t, 1) = 2.0;
  const auto c = hmm_fit(flat, 2, 5);
  for (std::size_t j = 0; j < 2; ++j) CHECK(c.hmm.variances(j, 1) > 0.0);
  CHECK(std::isfinite(c.loglik_history.back()));
}

TEST_CASE("EM recovers well-separated states") {
  auto truth = oracle::random_hmm(2, 1, 3);
  truth.means(0, 0) = -5.0;
  truth.means(1, 0) = 5.0;
  truth.variances(0, 0) = truth.variances(1, 0) = 1.0;
  std::vector<Matrix> seqs;
  for (std::uint64_t k = 0; k < 10; ++k) seqs.push_back(oracle::hmm_sample(truth, 200, k));
  const auto fit = hmm_fit(seqs, 2, 2);
  const double lo = std::min(fit.hmm.means(0, 0), fit.hmm.means(1, 0));
  const double hi = std::max(fit.hmm.means(0, 0), fit.hmm.means(1, 0));
  CHECK(lo == doctest::Approx(-5.0).epsilon(0.05));
  CHECK(hi == doctest::Approx(5.0).epsilon(0.05));
}
