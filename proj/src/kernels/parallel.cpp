#include <algorithm>

#include "shaft/kernels/kernels.hpp"

namespace shaft::kernels::parallel {

namespace {

// Valid output range [first, last) for kernel tap j under same padding.
struct TapRange {
  long first;
  long last;
};

inline TapRange tap_range(std::size_t j, long pad, long len) {
  const long shift = static_cast<long>(j) - pad;
  return {std::max(0L, -shift), std::min(len, len - shift)};
}

}  // namespace

void dense_forward(std::span<const double> x, std::span<const double> w, std::span<const double> bias,
                   std::span<double> y, DenseShape s) {
  const auto batch = static_cast<long>(s.batch);
#pragma omp parallel for schedule(static)
  for (long bb = 0; bb < batch; ++bb) {
    const auto b = static_cast<std::size_t>(bb);
    double* yr = y.data() + b * s.out;
    const double* xr = x.data() + b * s.in;
    std::copy(bias.begin(), bias.begin() + static_cast<std::ptrdiff_t>(s.out), yr);
    for (std::size_t k = 0; k < s.in; ++k) {
      const double xv = xr[k];
      const double* wr = w.data() + k * s.out;
      for (std::size_t o = 0; o < s.out; ++o) yr[o] += xv * wr[o];
    }
  }
}

void dense_backward_weights(std::span<const double> x, std::span<const double> dy, std::span<double> dw,
                            std::span<double> db, DenseShape s) {
  const auto in = static_cast<long>(s.in);
#pragma omp parallel for schedule(static)
  for (long kk = 0; kk < in; ++kk) {
    const auto k = static_cast<std::size_t>(kk);
    double* dwr = dw.data() + k * s.out;
    std::fill(dwr, dwr + s.out, 0.0);
    for (std::size_t b = 0; b < s.batch; ++b) {
      const double xv = x[b * s.in + k];
      const double* dyr = dy.data() + b * s.out;
      for (std::size_t o = 0; o < s.out; ++o) dwr[o] += xv * dyr[o];
    }
  }
  std::fill(db.begin(), db.begin() + static_cast<std::ptrdiff_t>(s.out), 0.0);
  for (std::size_t b = 0; b < s.batch; ++b)
    for (std::size_t o = 0; o < s.out; ++o) db[o] += dy[b * s.out + o];
}

void dense_backward_input(std::span<const double> dy, std::span<const double> w, std::span<double> dx,
                          DenseShape s) {
  const auto batch = static_cast<long>(s.batch);
#pragma omp parallel for schedule(static)
  for (long bb = 0; bb < batch; ++bb) {
    const auto b = static_cast<std::size_t>(bb);
    const double* dyr = dy.data() + b * s.out;
    for (std::size_t k = 0; k < s.in; ++k) {
      const double* wr = w.data() + k * s.out;
      double acc = 0.0;
      for (std::size_t o = 0; o < s.out; ++o) acc += dyr[o] * wr[o];
      dx[b * s.in + k] = acc;
    }
  }
}

void conv1d_forward(std::span<const double> x, std::span<const double> w, std::span<const double> bias,
                    std::span<double> y, ConvShape s) {
  const auto pad = static_cast<long>(s.kernel / 2);
  const auto len = static_cast<long>(s.length);
  const auto pairs = static_cast<long>(s.batch * s.c_out);
#pragma omp parallel for schedule(static)
  for (long p = 0; p < pairs; ++p) {
    const auto b = static_cast<std::size_t>(p) / s.c_out;
    const auto co = static_cast<std::size_t>(p) % s.c_out;
    double* yr = y.data() + (b * s.c_out + co) * s.length;
    std::fill(yr, yr + s.length, bias[co]);
    for (std::size_t ci = 0; ci < s.c_in; ++ci) {
      const double* xr = x.data() + (b * s.c_in + ci) * s.length;
      for (std::size_t j = 0; j < s.kernel; ++j) {
        const double wv = w[(co * s.c_in + ci) * s.kernel + j];
        const auto [first, last] = tap_range(j, pad, len);
        const double* xs = xr + (static_cast<long>(j) - pad);
        for (long t = first; t < last; ++t) yr[t] += wv * xs[t];
      }
    }
  }
}

void conv1d_backward_weights(std::span<const double> x, std::span<const double> dy, std::span<double> dw,
                             std::span<double> db, ConvShape s) {
  const auto pad = static_cast<long>(s.kernel / 2);
  const auto len = static_cast<long>(s.length);
  const auto c_out = static_cast<long>(s.c_out);
#pragma omp parallel for schedule(static)
  for (long cc = 0; cc < c_out; ++cc) {
    const auto co = static_cast<std::size_t>(cc);
    for (std::size_t ci = 0; ci < s.c_in; ++ci)
      for (std::size_t j = 0; j < s.kernel; ++j) {
        const auto [first, last] = tap_range(j, pad, len);
        double acc = 0.0;
        for (std::size_t b = 0; b < s.batch; ++b) {
          const double* dyr = dy.data() + (b * s.c_out + co) * s.length;
          const double* xs = x.data() + (b * s.c_in + ci) * s.length + (static_cast<long>(j) - pad);
          for (long t = first; t < last; ++t) acc += dyr[t] * xs[t];
        }
        dw[(co * s.c_in + ci) * s.kernel + j] = acc;
      }
    double acc = 0.0;
    for (std::size_t b = 0; b < s.batch; ++b) {
      const double* dyr = dy.data() + (b * s.c_out + co) * s.length;
      for (std::size_t t = 0; t < s.length; ++t) acc += dyr[t];
    }
    db[co] = acc;
  }
}

void conv1d_backward_input(std::span<const double> dy, std::span<const double> w, std::span<double> dx,
                           ConvShape s) {
  const auto pad = static_cast<long>(s.kernel / 2);
  const auto len = static_cast<long>(s.length);
  const auto pairs = static_cast<long>(s.batch * s.c_in);
#pragma omp parallel for schedule(static)
  for (long p = 0; p < pairs; ++p) {
    const auto b = static_cast<std::size_t>(p) / s.c_in;
    const auto ci = static_cast<std::size_t>(p) % s.c_in;
    double* dxr = dx.data() + (b * s.c_in + ci) * s.length;
    std::fill(dxr, dxr + s.length, 0.0);
    for (std::size_t co = 0; co < s.c_out; ++co) {
      const double* dyr = dy.data() + (b * s.c_out + co) * s.length;
      for (std::size_t j = 0; j < s.kernel; ++j) {
        const double wv = w[(co * s.c_in + ci) * s.kernel + j];
        const auto [first, last] = tap_range(j, pad, len);
        double* dst = dxr + (static_cast<long>(j) - pad);
        for (long t = first; t < last; ++t) dst[t] += wv * dyr[t];
      }
    }
  }
}

}  // namespace shaft::kernels::parallel
