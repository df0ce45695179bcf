#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "shaft/matrix.hpp"

namespace shaft::models {

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;  // x[feature] <= threshold goes left
  int left = -1;
  int right = -1;
  std::vector<int> counts;  // class counts of the training rows reaching the node
};

struct DecisionTree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  [[nodiscard]] const TreeNode& leaf_for(std::span<const double> x) const;
  [[nodiscard]] int predict(std::span<const double> x) const;
};

struct RfOptions {
  std::size_t n_trees = 100;
  std::size_t max_depth = 0;           // 0 = unlimited
  std::size_t features_per_split = 0;  // 0 = round(sqrt(n_features))
  bool bootstrap = true;
  std::size_t min_samples_split = 2;
};

/// Gini-split axis-aligned trees, majority vote (ties go to the lower class).
struct RandomForest {
  std::vector<DecisionTree> trees;
  std::size_t n_features = 0;
  int n_classes = 2;
  RfOptions options;
  std::uint64_t seed = 0;

  [[nodiscard]] std::vector<int> votes(std::span<const double> x) const;
  [[nodiscard]] int predict(std::span<const double> x) const;
};

/// Trees are grown in parallel; tree t draws from its own seeded stream.
RandomForest rf_train(const Matrix& X, std::span<const int> y, const RfOptions& opts, std::uint64_t seed);

inline int rf_predict(const RandomForest& f, std::span<const double> x) { return f.predict(x); }

}  // namespace shaft::models
