#include <fftw3.h>

#include <cmath>
#include <map>
#include <mutex>

#include "shaft/dsp.hpp"
#include "shaft/error.hpp"

namespace shaft::dsp {

namespace {

// FFTW planning is not thread-safe, execution is. Plans are created once per
// length and live for the process.
fftw_plan plan_for(std::size_t n) {
  static std::mutex mu;
  static std::map<std::size_t, fftw_plan> plans;
  std::lock_guard lock(mu);
  if (auto it = plans.find(n); it != plans.end()) return it->second;
  double* in = fftw_alloc_real(n);
  fftw_complex* out = fftw_alloc_complex(n / 2 + 1);
  fftw_plan p = fftw_plan_dft_r2c_1d(static_cast<int>(n), in, out, FFTW_ESTIMATE | FFTW_UNALIGNED);
  fftw_free(in);
  fftw_free(out);
  plans.emplace(n, p);
  return p;
}

}  // namespace

std::vector<std::complex<double>> rfft(std::span<const double> x) {
  if (x.empty()) fail(ErrorCode::BadLength, "rfft of an empty signal");
  std::vector<double> in(x.begin(), x.end());
  std::vector<std::complex<double>> out(x.size() / 2 + 1);
  fftw_execute_dft_r2c(plan_for(x.size()), in.data(), reinterpret_cast<fftw_complex*>(out.data()));
  return out;
}

std::vector<double> magnitude_spectrum(std::span<const double> x) {
  if (x.empty() || x.size() % 2 != 0) fail(ErrorCode::BadLength, "magnitude spectrum needs an even, non-zero length");
  for (double v : x)
    if (!std::isfinite(v)) fail(ErrorCode::NonFinite, "FFT input contains a non-finite value");
  const auto bins = rfft(x);
  std::vector<double> mag(x.size() / 2);
  for (std::size_t k = 0; k < mag.size(); ++k) mag[k] = std::abs(bins[k]);
  return mag;
}

Spectrum rfft_magnitudes(std::span<const double> window) {
  if (window.size() != kWindowSize)
    fail(ErrorCode::BadLength, "FFT window must hold 4096 samples, got " + std::to_string(window.size()));
  return Spectrum{magnitude_spectrum(window), 1.0};
}

Matrix rfft_magnitudes_batch(const std::vector<WindowSample>& windows) {
  Matrix out(windows.size(), kSpectrumSize);
  plan_for(kWindowSize);
  const auto n = static_cast<long>(windows.size());
  std::exception_ptr error;
#pragma omp parallel for schedule(static)
  for (long i = 0; i < n; ++i) {
    try {
      const auto s = rfft_magnitudes(windows[static_cast<std::size_t>(i)].values);
      std::copy(s.magnitudes.begin(), s.magnitudes.end(), out.row(static_cast<std::size_t>(i)).begin());
    } catch (...) {
#pragma omp critical
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
  return out;
}

}  // namespace shaft::dsp
