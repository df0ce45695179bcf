#include <algorithm>
#include <cmath>

#include "shaft/dsp.hpp"
#include "shaft/error.hpp"

namespace shaft::dsp {

double quantile_sorted(std::span<const double> sorted, double p) {
  if (sorted.empty()) fail(ErrorCode::EmptyInput, "quantile of an empty sample");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = h - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

RobustScaler fit_robust_scaler(const Matrix& train, double epsilon) {
  if (train.rows < 2) fail(ErrorCode::TooFewRows, "robust scaler needs at least 2 rows");
  RobustScaler s;
  s.epsilon = epsilon;
  s.median.resize(train.cols);
  s.iqr.resize(train.cols);
  const auto cols = static_cast<long>(train.cols);
#pragma omp parallel for schedule(static)
  for (long jj = 0; jj < cols; ++jj) {
    const auto j = static_cast<std::size_t>(jj);
    std::vector<double> col(train.rows);
    for (std::size_t i = 0; i < train.rows; ++i) col[i] = train(i, j);
    std::sort(col.begin(), col.end());
    s.median[j] = quantile_sorted(col, 0.5);
    s.iqr[j] = quantile_sorted(col, 0.95) - quantile_sorted(col, 0.05);
  }
  return s;
}

void RobustScaler::apply_inplace(std::span<double> x) const {
  if (x.size() != median.size())
    fail(ErrorCode::BadLength, "scaler expects " + std::to_string(median.size()) + " values, got " +
                                   std::to_string(x.size()));
  for (std::size_t j = 0; j < x.size(); ++j) x[j] = (x[j] - median[j]) / std::max(iqr[j], epsilon);
}

std::vector<double> RobustScaler::apply(std::span<const double> x) const {
  std::vector<double> out(x.begin(), x.end());
  apply_inplace(out);
  return out;
}

void RobustScaler::apply_inplace(Matrix& m) const {
  for (std::size_t i = 0; i < m.rows; ++i) apply_inplace(m.row(i));
}

StandardScaler fit_standard_scaler(const Matrix& train, double epsilon) {
  if (train.rows < 1) fail(ErrorCode::TooFewRows, "standard scaler needs at least 1 row");
  StandardScaler s;
  s.epsilon = epsilon;
  s.mean.assign(train.cols, 0.0);
  s.stddev.assign(train.cols, 0.0);
  for (std::size_t i = 0; i < train.rows; ++i)
    for (std::size_t j = 0; j < train.cols; ++j) s.mean[j] += train(i, j);
  for (auto& m : s.mean) m /= static_cast<double>(train.rows);
  for (std::size_t i = 0; i < train.rows; ++i)
    for (std::size_t j = 0; j < train.cols; ++j) {
      const double d = train(i, j) - s.mean[j];
      s.stddev[j] += d * d;
    }
  for (auto& v : s.stddev) v = std::sqrt(v / static_cast<double>(train.rows));
  return s;
}

void StandardScaler::apply_inplace(std::span<double> x) const {
  if (x.size() != mean.size()) fail(ErrorCode::BadLength, "standard scaler width mismatch");
  for (std::size_t j = 0; j < x.size(); ++j) x[j] = (x[j] - mean[j]) / std::max(stddev[j], epsilon);
}

std::vector<double> StandardScaler::apply(std::span<const double> x) const {
  std::vector<double> out(x.begin(), x.end());
  apply_inplace(out);
  return out;
}

}  // namespace shaft::dsp
