#include "shaft/kernels/kernels.hpp"

namespace shaft::kernels::serial {

void dense_forward(std::span<const double> x, std::span<const double> w, std::span<const double> bias,
                   std::span<double> y, DenseShape s) {
  for (std::size_t b = 0; b < s.batch; ++b)
    for (std::size_t o = 0; o < s.out; ++o) {
      double acc = bias[o];
      for (std::size_t k = 0; k < s.in; ++k) acc += x[b * s.in + k] * w[k * s.out + o];
      y[b * s.out + o] = acc;
    }
}

void dense_backward_weights(std::span<const double> x, std::span<const double> dy, std::span<double> dw,
                            std::span<double> db, DenseShape s) {
  for (std::size_t k = 0; k < s.in; ++k)
    for (std::size_t o = 0; o < s.out; ++o) {
      double acc = 0.0;
      for (std::size_t b = 0; b < s.batch; ++b) acc += x[b * s.in + k] * dy[b * s.out + o];
      dw[k * s.out + o] = acc;
    }
  for (std::size_t o = 0; o < s.out; ++o) {
    double acc = 0.0;
    for (std::size_t b = 0; b < s.batch; ++b) acc += dy[b * s.out + o];
    db[o] = acc;
  }
}

void dense_backward_input(std::span<const double> dy, std::span<const double> w, std::span<double> dx,
                          DenseShape s) {
  for (std::size_t b = 0; b < s.batch; ++b)
    for (std::size_t k = 0; k < s.in; ++k) {
      double acc = 0.0;
      for (std::size_t o = 0; o < s.out; ++o) acc += dy[b * s.out + o] * w[k * s.out + o];
      dx[b * s.in + k] = acc;
    }
}

void conv1d_forward(std::span<const double> x, std::span<const double> w, std::span<const double> bias,
                    std::span<double> y, ConvShape s) {
  const auto pad = static_cast<long>(s.kernel / 2);
  const auto len = static_cast<long>(s.length);
  for (std::size_t b = 0; b < s.batch; ++b)
    for (std::size_t co = 0; co < s.c_out; ++co)
      for (long t = 0; t < len; ++t) {
        double acc = bias[co];
        for (std::size_t ci = 0; ci < s.c_in; ++ci)
          for (std::size_t j = 0; j < s.kernel; ++j) {
            const long src = t + static_cast<long>(j) - pad;
            if (src < 0 || src >= len) continue;
            acc += w[(co * s.c_in + ci) * s.kernel + j] * x[(b * s.c_in + ci) * s.length + static_cast<std::size_t>(src)];
          }
        y[(b * s.c_out + co) * s.length + static_cast<std::size_t>(t)] = acc;
      }
}

void conv1d_backward_weights(std::span<const double> x, std::span<const double> dy, std::span<double> dw,
                             std::span<double> db, ConvShape s) {
  const auto pad = static_cast<long>(s.kernel / 2);
  const auto len = static_cast<long>(s.length);
  for (std::size_t co = 0; co < s.c_out; ++co) {
    for (std::size_t ci = 0; ci < s.c_in; ++ci)
      for (std::size_t j = 0; j < s.kernel; ++j) {
        double acc = 0.0;
        for (std::size_t b = 0; b < s.batch; ++b)
          for (long t = 0; t < len; ++t) {
            const long src = t + static_cast<long>(j) - pad;
            if (src < 0 || src >= len) continue;
            acc += dy[(b * s.c_out + co) * s.length + static_cast<std::size_t>(t)] *
                   x[(b * s.c_in + ci) * s.length + static_cast<std::size_t>(src)];
          }
        dw[(co * s.c_in + ci) * s.kernel + j] = acc;
      }
    double acc = 0.0;
    for (std::size_t b = 0; b < s.batch; ++b)
      for (std::size_t t = 0; t < s.length; ++t) acc += dy[(b * s.c_out + co) * s.length + t];
    db[co] = acc;
  }
}

void conv1d_backward_input(std::span<const double> dy, std::span<const double> w, std::span<double> dx,
                           ConvShape s) {
  const auto pad = static_cast<long>(s.kernel / 2);
  const auto len = static_cast<long>(s.length);
  for (std::size_t b = 0; b < s.batch; ++b)
    for (std::size_t ci = 0; ci < s.c_in; ++ci)
      for (long src = 0; src < len; ++src) {
        double acc = 0.0;
        for (std::size_t co = 0; co < s.c_out; ++co)
          for (std::size_t j = 0; j < s.kernel; ++j) {
            const long t = src - static_cast<long>(j) + pad;
            if (t < 0 || t >= len) continue;
            acc += dy[(b * s.c_out + co) * s.length + static_cast<std::size_t>(t)] * w[(co * s.c_in + ci) * s.kernel + j];
          }
        dx[(b * s.c_in + ci) * s.length + static_cast<std::size_t>(src)] = acc;
      }
}

}  // namespace shaft::kernels::serial
