#include <cmath>
#include <cstdio>
#include <numeric>

#include "shaft/dsp.hpp"
#include "shaft/error.hpp"

namespace shaft::dsp {

double mean(std::span<const double> x) {
  if (x.empty()) fail(ErrorCode::EmptyInput, "mean of an empty window");
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

namespace {

struct Moments {
  double m2 = 0.0;
  double m4 = 0.0;
};

Moments central_moments(std::span<const double> x) {
  const double mu = mean(x);
  Moments m;
  for (double v : x) {
    const double d = v - mu;
    const double d2 = d * d;
    m.m2 += d2;
    m.m4 += d2 * d2;
  }
  m.m2 /= static_cast<double>(x.size());
  m.m4 /= static_cast<double>(x.size());
  return m;
}

}  // namespace

double population_std(std::span<const double> x) { return std::sqrt(central_moments(x).m2); }

double excess_kurtosis(std::span<const double> x) {
  const auto m = central_moments(x);
  if (!(m.m2 > 0.0)) fail(ErrorCode::ZeroVariance, "kurtosis of a constant window is undefined");
  return m.m4 / (m.m2 * m.m2) - 3.0;
}

std::vector<SampleMeta> window_meta(const std::vector<WindowSample>& windows, const std::string& dataset) {
  std::vector<SampleMeta> meta;
  meta.reserve(windows.size());
  for (const auto& w : windows) meta.push_back({dataset, w.unbalance_id, w.label, w.mean_rpm, w.window_index, -1});
  return meta;
}

FeatureMatrix stat_features(const std::vector<std::vector<WindowSample>>& per_sensor, StatVariant variant) {
  const std::size_t sensors = variant == StatVariant::ThreeFeature ? 1 : 3;
  if (per_sensor.size() < sensors)
    fail(ErrorCode::ShapeMismatch, "feature variant needs " + std::to_string(sensors) + " sensor channels");
  const std::size_t n = per_sensor[0].size();
  for (std::size_t c = 1; c < sensors; ++c)
    if (per_sensor[c].size() != n) fail(ErrorCode::ShapeMismatch, "sensor windows are not aligned");

  FeatureMatrix fm;
  fm.names.push_back("mean_rpm");
  for (std::size_t c = 0; c < sensors; ++c) {
    fm.names.push_back("std_vib" + std::to_string(c + 1));
    fm.names.push_back("kurtosis_excess_vib" + std::to_string(c + 1));
  }
  fm.recipe = std::string("stat-") + (sensors == 1 ? "three" : "seven") + " " + kRecipeVersion +
              "; std=population; kurtosis=fisher-excess";
  fm.values = Matrix(n, fm.names.size());
  fm.meta = window_meta(per_sensor[0], "");

  std::exception_ptr error;
#pragma omp parallel for schedule(static)
  for (long ii = 0; ii < static_cast<long>(n); ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    try {
      auto row = fm.values.row(i);
      row[0] = per_sensor[0][i].mean_rpm;
      for (std::size_t c = 0; c < sensors; ++c) {
        const auto& w = per_sensor[c][i];
        if (w.window_index != per_sensor[0][i].window_index)
          fail(ErrorCode::ShapeMismatch, "sensor windows are not aligned");
        row[1 + 2 * c] = population_std(w.values);
        row[2 + 2 * c] = excess_kurtosis(w.values);
      }
    } catch (...) {
#pragma omp critical
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
  return fm;
}

FeatureMatrix fft_features(const std::vector<WindowSample>& windows) {
  FeatureMatrix fm;
  fm.names.reserve(kSpectrumSize);
  char buf[32];
  for (std::size_t k = 0; k < kSpectrumSize; ++k) {
    std::snprintf(buf, sizeof buf, "fft_mag_%04zu", k);
    fm.names.emplace_back(buf);
  }
  fm.values = rfft_magnitudes_batch(windows);
  fm.meta = window_meta(windows, "");
  fm.recipe = std::string("fft-magnitude ") + kRecipeVersion + "; bins=0..2047; bin_hz=1; taper=none";
  return fm;
}

void append_rows(FeatureMatrix& into, const FeatureMatrix& more) {
  if (into.names.empty() && into.values.rows == 0) {
    into = more;
    return;
  }
  if (into.names != more.names) fail(ErrorCode::ShapeMismatch, "feature columns differ");
  into.values.data.insert(into.values.data.end(), more.values.data.begin(), more.values.data.end());
  into.values.rows += more.values.rows;
  into.meta.insert(into.meta.end(), more.meta.begin(), more.meta.end());
}

}  // namespace shaft::dsp
