#include <cmath>
#include <set>

#include "shaft/error.hpp"
#include "shaft/pipeline.hpp"

namespace shaft::pipeline {

namespace {

void check_lengths(std::size_t a, std::size_t b) {
  if (a == 0 || b == 0) fail(ErrorCode::EmptyInput, "metric over an empty prediction set");
  if (a != b) fail(ErrorCode::ShapeMismatch, "predictions and labels differ in length");
}

}  // namespace

double accuracy(std::span<const int> pred, std::span<const int> truth) {
  check_lengths(pred.size(), truth.size());
  std::size_t hit = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) hit += pred[i] == truth[i];
  return static_cast<double>(hit) / static_cast<double>(pred.size());
}

double balanced_accuracy(std::span<const int> pred, std::span<const int> truth) {
  check_lengths(pred.size(), truth.size());
  std::map<int, std::pair<std::size_t, std::size_t>> per;  // class -> (hits, n)
  for (std::size_t i = 0; i < pred.size(); ++i) {
    auto& [hit, n] = per[truth[i]];
    hit += pred[i] == truth[i];
    ++n;
  }
  if (per.size() < 2) fail(ErrorCode::MissingClass, "balanced accuracy needs at least two classes in the labels");
  double s = 0.0;
  for (const auto& [cls, hn] : per) s += static_cast<double>(hn.first) / static_cast<double>(hn.second);
  return s / static_cast<double>(per.size());
}

std::map<int, GroupAccuracy> per_class_accuracy(std::span<const int> pred, std::span<const int> truth,
                                                std::span<const int> strength) {
  check_lengths(pred.size(), truth.size());
  if (strength.size() != pred.size()) fail(ErrorCode::ShapeMismatch, "strength labels differ in length");
  std::map<int, std::size_t> hits;
  std::map<int, GroupAccuracy> out;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    hits[strength[i]] += pred[i] == truth[i];
    ++out[strength[i]].n;
  }
  for (auto& [k, g] : out) g.acc = static_cast<double>(hits[k]) / static_cast<double>(g.n);
  return out;
}

std::vector<RpmBin> rpm_binned_accuracy(std::span<const int> pred, std::span<const int> truth,
                                        std::span<const double> rpm, double bin_width) {
  check_lengths(pred.size(), truth.size());
  if (rpm.size() != pred.size()) fail(ErrorCode::ShapeMismatch, "rpm values differ in length");
  if (!(bin_width > 0.0)) fail(ErrorCode::BadParams, "bin width must be > 0");
  std::map<long, std::pair<std::size_t, std::size_t>> bins;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (!std::isfinite(rpm[i])) fail(ErrorCode::NonFinite, "non-finite rpm value");
    auto& [hit, n] = bins[static_cast<long>(std::floor(rpm[i] / bin_width))];
    hit += pred[i] == truth[i];
    ++n;
  }
  std::vector<RpmBin> out;
  for (const auto& [k, hn] : bins)
    out.push_back({(static_cast<double>(k) + 0.5) * bin_width,
                   static_cast<double>(hn.first) / static_cast<double>(hn.second), hn.second});
  return out;
}

}  // namespace shaft::pipeline
