// Serial reference vs OpenMP kernels at the shapes used in training.

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "shaft/kernels/kernels.hpp"

namespace k = shaft::kernels;

namespace {

std::vector<double> noise(std::size_t n, unsigned seed) {
  std::mt19937_64 eng(seed);
  std::normal_distribution<double> nd;
  std::vector<double> v(n);
  for (auto& x : v) x = nd(eng);
  return v;
}

// FFT-MLP first layer: batch 64, 2048 -> 64
constexpr k::DenseShape kDense{64, 2048, 64};
// CNN first block: batch 16, 1 -> 16 channels, 4096 samples, kernel 9
constexpr k::ConvShape kConv{16, 1, 16, 4096, 9};

template <auto Fn>
void dense_fwd(benchmark::State& st) {
  const auto x = noise(kDense.batch * kDense.in, 1), w = noise(kDense.in * kDense.out, 2), b = noise(kDense.out, 3);
  std::vector<double> y(kDense.batch * kDense.out);
  for (auto _ : st) {
    Fn(x, w, b, y, kDense);
    benchmark::DoNotOptimize(y.data());
  }
  st.SetItemsProcessed(st.iterations() * static_cast<long>(kDense.batch * kDense.in * kDense.out));
}

template <auto Fn>
void dense_bwd_w(benchmark::State& st) {
  const auto x = noise(kDense.batch * kDense.in, 1), dy = noise(kDense.batch * kDense.out, 2);
  std::vector<double> dw(kDense.in * kDense.out), db(kDense.out);
  for (auto _ : st) {
    Fn(x, dy, dw, db, kDense);
    benchmark::DoNotOptimize(dw.data());
  }
  st.SetItemsProcessed(st.iterations() * static_cast<long>(kDense.batch * kDense.in * kDense.out));
}

template <auto Fn>
void conv_fwd(benchmark::State& st) {
  const auto x = noise(kConv.batch * kConv.c_in * kConv.length, 1);
  const auto w = noise(kConv.c_out * kConv.c_in * kConv.kernel, 2), b = noise(kConv.c_out, 3);
  std::vector<double> y(kConv.batch * kConv.c_out * kConv.length);
  for (auto _ : st) {
    Fn(x, w, b, y, kConv);
    benchmark::DoNotOptimize(y.data());
  }
  st.SetItemsProcessed(st.iterations() *
                       static_cast<long>(kConv.batch * kConv.c_out * kConv.c_in * kConv.length * kConv.kernel));
}

template <auto Fn>
void conv_bwd_in(benchmark::State& st) {
  const auto dy = noise(kConv.batch * kConv.c_out * kConv.length, 1);
  const auto w = noise(kConv.c_out * kConv.c_in * kConv.kernel, 2);
  std::vector<double> dx(kConv.batch * kConv.c_in * kConv.length);
  for (auto _ : st) {
    Fn(dy, w, dx, kConv);
    benchmark::DoNotOptimize(dx.data());
  }
  st.SetItemsProcessed(st.iterations() *
                       static_cast<long>(kConv.batch * kConv.c_out * kConv.c_in * kConv.length * kConv.kernel));
}

}  // namespace

BENCHMARK(dense_fwd<k::serial::dense_forward>)->Name("dense_forward/serial");
BENCHMARK(dense_fwd<k::parallel::dense_forward>)->Name("dense_forward/parallel")->UseRealTime();
BENCHMARK(dense_bwd_w<k::serial::dense_backward_weights>)->Name("dense_backward_weights/serial");
BENCHMARK(dense_bwd_w<k::parallel::dense_backward_weights>)->Name("dense_backward_weights/parallel")->UseRealTime();
BENCHMARK(conv_fwd<k::serial::conv1d_forward>)->Name("conv1d_forward/serial");
BENCHMARK(conv_fwd<k::parallel::conv1d_forward>)->Name("conv1d_forward/parallel")->UseRealTime();
BENCHMARK(conv_bwd_in<k::serial::conv1d_backward_input>)->Name("conv1d_backward_input/serial");
BENCHMARK(conv_bwd_in<k::parallel::conv1d_backward_input>)->Name("conv1d_backward_input/parallel")->UseRealTime();

BENCHMARK_MAIN();
