#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "shaft/error.hpp"
#include "shaft/pipeline.hpp"

namespace shaft::pipeline {

namespace {

std::vector<std::size_t> shuffled(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  Engine eng(seed);
  std::shuffle(idx.begin(), idx.end(), eng);
  return idx;
}

}  // namespace

DevSplit split_dev(std::size_t n, double frac, std::uint64_t seed) {
  if (n < 10) fail(ErrorCode::TooFew, "split needs at least 10 samples, got " + std::to_string(n));
  if (!(frac > 0.0 && frac < 1.0)) fail(ErrorCode::BadParams, "split fraction must lie in (0, 1)");
  auto idx = shuffled(n, derive_seed(seed, "split-dev"));
  const auto n_train = static_cast<std::size_t>(std::lround(frac * static_cast<double>(n)));
  DevSplit s;
  s.train.assign(idx.begin(), idx.begin() + static_cast<long>(n_train));
  s.test.assign(idx.begin() + static_cast<long>(n_train), idx.end());
  std::sort(s.train.begin(), s.train.end());
  std::sort(s.test.begin(), s.test.end());
  return s;
}

DevSplit split_dev(std::span<const int> groups, double frac, std::uint64_t seed) {
  if (groups.size() < 10) fail(ErrorCode::TooFew, "split needs at least 10 samples, got " + std::to_string(groups.size()));
  if (!(frac > 0.0 && frac < 1.0)) fail(ErrorCode::BadParams, "split fraction must lie in (0, 1)");
  std::map<int, std::vector<std::size_t>> members;
  for (std::size_t i = 0; i < groups.size(); ++i) members[groups[i]].push_back(i);
  DevSplit s;
  for (auto& [g, idx] : members) {
    Engine eng(derive_seed(derive_seed(seed, "split-dev"), static_cast<std::uint64_t>(g)));
    std::shuffle(idx.begin(), idx.end(), eng);
    const auto n_train = static_cast<std::size_t>(std::lround(frac * static_cast<double>(idx.size())));
    s.train.insert(s.train.end(), idx.begin(), idx.begin() + static_cast<long>(n_train));
    s.test.insert(s.test.end(), idx.begin() + static_cast<long>(n_train), idx.end());
  }
  std::sort(s.train.begin(), s.train.end());
  std::sort(s.test.begin(), s.test.end());
  return s;
}

std::array<std::vector<std::size_t>, 3> split_three(std::size_t n, std::array<double, 3> fractions,
                                                    std::uint64_t seed) {
  const double total = fractions[0] + fractions[1] + fractions[2];
  for (double f : fractions)
    if (!(f >= 0.0) || !(total > 0.0)) fail(ErrorCode::BadParams, "split fractions must be >= 0");
  auto idx = shuffled(n, derive_seed(seed, "split-three"));
  const auto a = static_cast<std::size_t>(std::lround(fractions[0] / total * static_cast<double>(n)));
  const auto b = std::min(n, a + static_cast<std::size_t>(std::lround(fractions[1] / total * static_cast<double>(n))));
  std::array<std::vector<std::size_t>, 3> out;
  out[0].assign(idx.begin(), idx.begin() + static_cast<long>(a));
  out[1].assign(idx.begin() + static_cast<long>(a), idx.begin() + static_cast<long>(b));
  out[2].assign(idx.begin() + static_cast<long>(b), idx.end());
  for (auto& part : out) std::sort(part.begin(), part.end());
  return out;
}

}  // namespace shaft::pipeline
