#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <vector>

namespace shaft {

/// Dense row-major matrix of doubles. Rows are samples throughout the library.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

  [[nodiscard]] std::span<double> row(std::size_t i) noexcept { return {data.data() + i * cols, cols}; }
  [[nodiscard]] std::span<const double> row(std::size_t i) const noexcept {
    return {data.data() + i * cols, cols};
  }
  double& operator()(std::size_t i, std::size_t j) noexcept { return data[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const noexcept { return data[i * cols + j]; }

  friend bool operator==(const Matrix&, const Matrix&) = default;
};

/// Rows of `m` picked by `index`, in that order.
inline Matrix take_rows(const Matrix& m, std::span<const std::size_t> index) {
  Matrix out(index.size(), m.cols);
  for (std::size_t i = 0; i < index.size(); ++i) {
    const auto src = m.row(index[i]);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return out;
}

}  // namespace shaft
