#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "shaft/data.hpp"
#include "shaft/matrix.hpp"

namespace shaft::dsp {

inline constexpr std::size_t kSpectrumSize = 2048;

// ---------------------------------------------------------------------------
// Fourier transform

/// Magnitudes of bins 0..2047 of the DFT of a 4096-sample window (Nyquist
/// dropped, no taper). Bin spacing is 1 Hz.
struct Spectrum {
  std::vector<double> magnitudes;
  double bin_hz = 1.0;
};

/// Complex bins 0..n/2 of the real DFT of `x` (any length >= 1).
std::vector<std::complex<double>> rfft(std::span<const double> x);

/// Magnitudes of bins 0..n/2-1 for any even length n (Nyquist dropped).
std::vector<double> magnitude_spectrum(std::span<const double> x);

Spectrum rfft_magnitudes(std::span<const double> window);

/// One spectrum per window, as matrix rows. Windows are transformed in
/// parallel; each row is bit-identical to `rfft_magnitudes` on that window.
Matrix rfft_magnitudes_batch(const std::vector<WindowSample>& windows);

// ---------------------------------------------------------------------------
// Scalers

/// Linear interpolation between closest ranks of an ascending sample
/// (the "type 7" definition).
double quantile_sorted(std::span<const double> sorted, double p);

struct RobustScaler {
  std::vector<double> median;
  std::vector<double> iqr;  // q95 - q05
  double epsilon = 1e-12;

  [[nodiscard]] std::vector<double> apply(std::span<const double> x) const;
  void apply_inplace(std::span<double> x) const;
  void apply_inplace(Matrix& m) const;
};

RobustScaler fit_robust_scaler(const Matrix& train, double epsilon = 1e-12);

inline std::vector<double> apply_scaler(const RobustScaler& s, std::span<const double> x) { return s.apply(x); }

/// Zero-mean / unit-variance transform with a floor on the divisor.
struct StandardScaler {
  std::vector<double> mean;
  std::vector<double> stddev;
  double epsilon = 1e-12;

  void apply_inplace(std::span<double> x) const;
  [[nodiscard]] std::vector<double> apply(std::span<const double> x) const;
};

StandardScaler fit_standard_scaler(const Matrix& train, double epsilon = 1e-12);

// ---------------------------------------------------------------------------
// Statistical features

double mean(std::span<const double> x);
/// Population standard deviation.
double population_std(std::span<const double> x);
/// Fisher (excess) kurtosis m4 / m2^2 - 3. Throws ZeroVariance on a constant input.
double excess_kurtosis(std::span<const double> x);

enum class StatVariant { ThreeFeature, SevenFeature };

struct SampleMeta {
  std::string dataset;
  int unbalance_id = 0;
  int label = 0;
  double mean_rpm = 0.0;
  std::size_t window_index = 0;
  long frame_index = -1;  // >= 0 for per-snippet rows
};

/// Rows are samples, columns are named features. `recipe` records how the
/// columns were produced and is written into CSV output.
struct FeatureMatrix {
  std::vector<std::string> names;
  Matrix values;
  std::vector<SampleMeta> meta;
  std::string recipe;
};

inline constexpr const char* kRecipeVersion = "v1";

std::vector<SampleMeta> window_meta(const std::vector<WindowSample>& windows, const std::string& dataset);

/// ThreeFeature: [mean_rpm, std(vib1), kurtosis_excess(vib1)].
/// SevenFeature: [mean_rpm, std & kurtosis_excess of vib1, vib2, vib3].
/// `per_sensor[c][i]` is window i of sensor c; windows must be aligned.
FeatureMatrix stat_features(const std::vector<std::vector<WindowSample>>& per_sensor, StatVariant variant);

FeatureMatrix fft_features(const std::vector<WindowSample>& windows);

void write_feature_csv(const FeatureMatrix& fm, const std::string& path);

/// Row-wise concatenation; names and recipe must agree.
void append_rows(FeatureMatrix& into, const FeatureMatrix& more);

// ---------------------------------------------------------------------------
// Snippets and MFCC

std::vector<std::vector<double>> snippetize(std::span<const double> sample, std::size_t snippet_len,
                                            std::size_t overlap);

constexpr std::size_t snippet_count(std::size_t length, std::size_t snippet_len, std::size_t overlap) noexcept {
  return length < snippet_len ? 0 : (length - snippet_len) / (snippet_len - overlap) + 1;
}

enum class Taper { Hann, Rectangular };

struct MfccConfig {
  std::size_t n_mfcc = 13;
  std::size_t n_mels = 26;
  std::size_t snippet_len = 512;
  std::size_t overlap = 256;
  Taper frame_window = Taper::Hann;
  double log_floor = 1e-10;

  void validate() const;
};

/// Mel scale 2595 log10(1 + f/700) and its inverse.
double hz_to_mel(double hz);
double mel_to_hz(double mel);

/// Triangular filters with centers equally spaced in mel between 0 Hz and
/// the Nyquist frequency. Row m holds the weight of filter m for every
/// power-spectrum bin 0..n_fft/2.
Matrix mel_filterbank(std::size_t n_mels, std::size_t n_fft, double sample_rate);

/// Precomputes taper, filterbank and DCT for one configuration.
class MfccExtractor {
 public:
  explicit MfccExtractor(MfccConfig cfg, double sample_rate = kSampleRate);

  [[nodiscard]] const MfccConfig& config() const noexcept { return cfg_; }
  [[nodiscard]] std::vector<double> compute(std::span<const double> frame) const;
  /// Log mel energies before the DCT.
  [[nodiscard]] std::vector<double> log_mel_energies(std::span<const double> frame) const;

  /// MFCC vector of every snippet of a sample, in order.
  [[nodiscard]] Matrix sequence(std::span<const double> sample) const;

 private:
  MfccConfig cfg_;
  std::vector<double> taper_;
  Matrix filterbank_;
  Matrix dct_;  // n_mfcc x n_mels, orthonormal DCT-II rows
};

std::vector<double> mfcc(std::span<const double> frame, const MfccConfig& cfg, double sample_rate = kSampleRate);

/// Orthonormal DCT-II matrix, `rows` x `n`.
Matrix dct2_matrix(std::size_t rows, std::size_t n);

}  // namespace shaft::dsp
