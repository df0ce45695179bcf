#pragma once

#include <cstddef>
#include <span>

// Dense and 1-D convolution kernels behind the neural models.
//
// `serial` holds straightforward per-output-element reference loops.
// `parallel` holds the OpenMP versions used in training; they split work only
// across independent output elements and never across a reduction, so their
// results do not depend on the thread count.
//
// Layouts (row-major):
//   dense:  x[batch][in], w[in][out], bias[out], y[batch][out]
//   conv1d: x[batch][c_in][len], w[c_out][c_in][kernel], bias[c_out],
//           y[batch][c_out][len]; zero "same" padding of kernel/2, odd kernel.

namespace shaft::kernels {

struct DenseShape {
  std::size_t batch = 0;
  std::size_t in = 0;
  std::size_t out = 0;
};

struct ConvShape {
  std::size_t batch = 0;
  std::size_t c_in = 0;
  std::size_t c_out = 0;
  std::size_t length = 0;
  std::size_t kernel = 0;
};

namespace serial {

void dense_forward(std::span<const double> x, std::span<const double> w, std::span<const double> bias,
                   std::span<double> y, DenseShape s);
// dw = x^T dy, db = column sums of dy; both overwritten.
void dense_backward_weights(std::span<const double> x, std::span<const double> dy, std::span<double> dw,
                            std::span<double> db, DenseShape s);
// dx = dy w^T, overwritten.
void dense_backward_input(std::span<const double> dy, std::span<const double> w, std::span<double> dx,
                          DenseShape s);

void conv1d_forward(std::span<const double> x, std::span<const double> w, std::span<const double> bias,
                    std::span<double> y, ConvShape s);
void conv1d_backward_weights(std::span<const double> x, std::span<const double> dy, std::span<double> dw,
                             std::span<double> db, ConvShape s);
void conv1d_backward_input(std::span<const double> dy, std::span<const double> w, std::span<double> dx,
                           ConvShape s);

}  // namespace serial

namespace parallel {

void dense_forward(std::span<const double> x, std::span<const double> w, std::span<const double> bias,
                   std::span<double> y, DenseShape s);
// dw = x^T dy, db = column sums of dy; both overwritten.
void dense_backward_weights(std::span<const double> x, std::span<const double> dy, std::span<double> dw,
                            std::span<double> db, DenseShape s);
// dx = dy w^T, overwritten.
void dense_backward_input(std::span<const double> dy, std::span<const double> w, std::span<double> dx,
                          DenseShape s);

void conv1d_forward(std::span<const double> x, std::span<const double> w, std::span<const double> bias,
                    std::span<double> y, ConvShape s);
void conv1d_backward_weights(std::span<const double> x, std::span<const double> dy, std::span<double> dw,
                             std::span<double> db, ConvShape s);
void conv1d_backward_input(std::span<const double> dy, std::span<const double> w, std::span<double> dx,
                           ConvShape s);

}  // namespace parallel

}  // namespace shaft::kernels
