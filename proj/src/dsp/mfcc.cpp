#include <cmath>
#include <numbers>

#include "shaft/dsp.hpp"
#include "shaft/error.hpp"

namespace shaft::dsp {

std::vector<std::vector<double>> snippetize(std::span<const double> sample, std::size_t snippet_len,
                                            std::size_t overlap) {
  if (snippet_len == 0 || overlap >= snippet_len || snippet_len > sample.size())
    fail(ErrorCode::BadParams, "snippets need 0 <= overlap < length <= sample size");
  const std::size_t stride = snippet_len - overlap;
  const std::size_t count = snippet_count(sample.size(), snippet_len, overlap);
  std::vector<std::vector<double>> frames;
  frames.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const auto first = sample.begin() + static_cast<std::ptrdiff_t>(i * stride);
    frames.emplace_back(first, first + static_cast<std::ptrdiff_t>(snippet_len));
  }
  return frames;
}

void MfccConfig::validate() const {
  if (n_mfcc == 0 || n_mfcc > n_mels) fail(ErrorCode::BadParams, "need 0 < n_mfcc <= n_mels");
  if (snippet_len < 2 || overlap >= snippet_len) fail(ErrorCode::BadParams, "need 0 <= overlap < snippet_len");
  if (!(log_floor > 0.0)) fail(ErrorCode::BadParams, "log floor must be > 0");
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

Matrix mel_filterbank(std::size_t n_mels, std::size_t n_fft, double sample_rate) {
  const std::size_t n_bins = n_fft / 2 + 1;
  const double top = hz_to_mel(sample_rate / 2.0);
  std::vector<double> edges(n_mels + 2);
  for (std::size_t i = 0; i < edges.size(); ++i)
    edges[i] = mel_to_hz(top * static_cast<double>(i) / static_cast<double>(n_mels + 1));

  Matrix fb(n_mels, n_bins);
  for (std::size_t m = 0; m < n_mels; ++m) {
    const double lo = edges[m], mid = edges[m + 1], hi = edges[m + 2];
    for (std::size_t k = 0; k < n_bins; ++k) {
      const double f = static_cast<double>(k) * sample_rate / static_cast<double>(n_fft);
      double w = 0.0;
      if (f >= lo && f <= mid) w = (f - lo) / (mid - lo);
      else if (f > mid && f <= hi) w = (hi - f) / (hi - mid);
      fb(m, k) = w;
    }
  }
  return fb;
}

Matrix dct2_matrix(std::size_t rows, std::size_t n) {
  Matrix d(rows, n);
  const double n_d = static_cast<double>(n);
  for (std::size_t k = 0; k < rows; ++k) {
    const double scale = k == 0 ? std::sqrt(1.0 / n_d) : std::sqrt(2.0 / n_d);
    for (std::size_t m = 0; m < n; ++m)
      d(k, m) = scale * std::cos(std::numbers::pi * static_cast<double>(k) * (static_cast<double>(m) + 0.5) / n_d);
  }
  return d;
}

MfccExtractor::MfccExtractor(MfccConfig cfg, double sample_rate) : cfg_(cfg) {
  cfg_.validate();
  taper_.assign(cfg_.snippet_len, 1.0);
  if (cfg_.frame_window == Taper::Hann)
    for (std::size_t i = 0; i < taper_.size(); ++i)
      taper_[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) /
                                       static_cast<double>(taper_.size()));
  filterbank_ = mel_filterbank(cfg_.n_mels, cfg_.snippet_len, sample_rate);
  dct_ = dct2_matrix(cfg_.n_mfcc, cfg_.n_mels);
}

std::vector<double> MfccExtractor::log_mel_energies(std::span<const double> frame) const {
  if (frame.size() != cfg_.snippet_len)
    fail(ErrorCode::BadLength, "MFCC frame must hold " + std::to_string(cfg_.snippet_len) + " samples");
  std::vector<double> tapered(frame.size());
  for (std::size_t i = 0; i < frame.size(); ++i) tapered[i] = frame[i] * taper_[i];
  const auto bins = rfft(tapered);
  std::vector<double> energy(cfg_.n_mels, 0.0);
  for (std::size_t m = 0; m < cfg_.n_mels; ++m) {
    const auto w = filterbank_.row(m);
    double e = 0.0;
    for (std::size_t k = 0; k < bins.size(); ++k) e += w[k] * std::norm(bins[k]);
    energy[m] = std::log(e + cfg_.log_floor);
  }
  return energy;
}

std::vector<double> MfccExtractor::compute(std::span<const double> frame) const {
  const auto logmel = log_mel_energies(frame);
  std::vector<double> out(cfg_.n_mfcc, 0.0);
  for (std::size_t k = 0; k < cfg_.n_mfcc; ++k) {
    const auto d = dct_.row(k);
    double acc = 0.0;
    for (std::size_t m = 0; m < logmel.size(); ++m) acc += d[m] * logmel[m];
    out[k] = acc;
  }
  return out;
}

Matrix MfccExtractor::sequence(std::span<const double> sample) const {
  const auto frames = snippetize(sample, cfg_.snippet_len, cfg_.overlap);
  Matrix seq(frames.size(), cfg_.n_mfcc);
  for (std::size_t t = 0; t < frames.size(); ++t) {
    const auto c = compute(frames[t]);
    std::copy(c.begin(), c.end(), seq.row(t).begin());
  }
  return seq;
}

std::vector<double> mfcc(std::span<const double> frame, const MfccConfig& cfg, double sample_rate) {
  return MfccExtractor(cfg, sample_rate).compute(frame);
}

}  // namespace shaft::dsp
