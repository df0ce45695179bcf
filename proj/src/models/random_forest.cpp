#include "shaft/models/random_forest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "shaft/error.hpp"
#include "shaft/rng.hpp"

namespace shaft::models {

namespace {

int argmax_lowest(const std::vector<int>& counts) {
  int best = 0;
  for (std::size_t c = 1; c < counts.size(); ++c)
    if (counts[c] > counts[static_cast<std::size_t>(best)]) best = static_cast<int>(c);
  return best;
}

struct Split {
  int feature = -1;
  double threshold = 0.0;
  double score = std::numeric_limits<double>::infinity();  // n_l*gini_l + n_r*gini_r
};

double weighted_gini(const std::vector<int>& counts, int n) {
  if (n == 0) return 0.0;
  double s = 0.0;
  for (int c : counts) s += static_cast<double>(c) * c;
  return static_cast<double>(n) - s / n;
}

class TreeBuilder {
 public:
  TreeBuilder(const Matrix& X, std::span<const int> y, int n_classes, const RfOptions& opts, std::size_t mtry,
              Engine& eng)
      : X_(X), y_(y), n_classes_(n_classes), opts_(opts), mtry_(mtry), eng_(eng) {}

  DecisionTree build(std::vector<std::size_t> rows) {
    DecisionTree tree;
    struct Pending {
      int node;
      std::vector<std::size_t> rows;
      std::size_t depth;
    };
    std::vector<Pending> stack;
    tree.nodes.emplace_back();
    stack.push_back({0, std::move(rows), 0});
    std::vector<std::size_t> features(X_.cols);
    std::iota(features.begin(), features.end(), 0);

    while (!stack.empty()) {
      Pending p = std::move(stack.back());
      stack.pop_back();
      auto& node = tree.nodes[static_cast<std::size_t>(p.node)];
      node.counts.assign(static_cast<std::size_t>(n_classes_), 0);
      for (auto r : p.rows) ++node.counts[static_cast<std::size_t>(y_[r])];

      const bool pure = std::count_if(node.counts.begin(), node.counts.end(), [](int c) { return c > 0; }) <= 1;
      const bool depth_hit = opts_.max_depth > 0 && p.depth >= opts_.max_depth;
      if (pure || depth_hit || p.rows.size() < std::max<std::size_t>(2, opts_.min_samples_split)) continue;

      const Split split = best_split(p.rows, node.counts, features);
      if (split.feature < 0) continue;

      std::vector<std::size_t> left, right;
      for (auto r : p.rows) (X_(r, static_cast<std::size_t>(split.feature)) <= split.threshold ? left : right).push_back(r);
      node.feature = split.feature;
      node.threshold = split.threshold;
      node.left = static_cast<int>(tree.nodes.size());
      node.right = node.left + 1;
      const int l = node.left, r = node.right;
      tree.nodes.emplace_back();
      tree.nodes.emplace_back();
      stack.push_back({r, std::move(right), p.depth + 1});
      stack.push_back({l, std::move(left), p.depth + 1});
    }
    return tree;
  }

 private:
  Split best_split(const std::vector<std::size_t>& rows, const std::vector<int>& counts,
                   std::vector<std::size_t>& features) {
    std::shuffle(features.begin(), features.end(), eng_);
    Split best;
    std::size_t tried = 0;
    const int n = static_cast<int>(rows.size());
    std::vector<std::pair<double, int>> col(rows.size());
    std::vector<int> left(static_cast<std::size_t>(n_classes_)), right(static_cast<std::size_t>(n_classes_));

    for (std::size_t f : features) {
      if (tried >= mtry_) break;
      for (std::size_t i = 0; i < rows.size(); ++i) col[i] = {X_(rows[i], f), y_[rows[i]]};
      std::sort(col.begin(), col.end());
      if (col.front().first == col.back().first) continue;  // constant here; does not count
      ++tried;
      std::fill(left.begin(), left.end(), 0);
      right = counts;
      for (int i = 0; i + 1 < n; ++i) {
        const auto cls = static_cast<std::size_t>(col[static_cast<std::size_t>(i)].second);
        ++left[cls];
        --right[cls];
        const double a = col[static_cast<std::size_t>(i)].first, b = col[static_cast<std::size_t>(i) + 1].first;
        if (a == b) continue;
        const double score = weighted_gini(left, i + 1) + weighted_gini(right, n - i - 1);
        if (score < best.score) {
          double mid = a + (b - a) / 2.0;
          if (!(mid < b)) mid = a;
          best = {static_cast<int>(f), mid, score};
        }
      }
    }
    return best;
  }

  const Matrix& X_;
  std::span<const int> y_;
  int n_classes_;
  const RfOptions& opts_;
  std::size_t mtry_;
  Engine& eng_;
};

}  // namespace

const TreeNode& DecisionTree::leaf_for(std::span<const double> x) const {
  const TreeNode* node = &nodes.front();
  while (node->feature >= 0)
    node = &nodes[static_cast<std::size_t>(x[static_cast<std::size_t>(node->feature)] <= node->threshold ? node->left
                                                                                                         : node->right)];
  return *node;
}

int DecisionTree::predict(std::span<const double> x) const { return argmax_lowest(leaf_for(x).counts); }

std::vector<int> RandomForest::votes(std::span<const double> x) const {
  if (x.size() != n_features) fail(ErrorCode::ShapeMismatch, "random forest input width mismatch");
  std::vector<int> v(static_cast<std::size_t>(n_classes), 0);
  for (const auto& t : trees) ++v[static_cast<std::size_t>(t.predict(x))];
  return v;
}

int RandomForest::predict(std::span<const double> x) const { return argmax_lowest(votes(x)); }

RandomForest rf_train(const Matrix& X, std::span<const int> y, const RfOptions& opts, std::uint64_t seed) {
  if (X.rows < 2 || y.size() != X.rows) fail(ErrorCode::TooFew, "random forest needs >= 2 labelled rows");
  if (opts.n_trees == 0) fail(ErrorCode::BadParams, "random forest needs at least one tree");
  int n_classes = 0;
  for (int v : y) {
    if (v < 0) fail(ErrorCode::BadParams, "class labels must be >= 0");
    n_classes = std::max(n_classes, v + 1);
  }
  n_classes = std::max(n_classes, 2);
  {
    std::vector<int> seen(static_cast<std::size_t>(n_classes), 0);
    for (int v : y) seen[static_cast<std::size_t>(v)] = 1;
    if (std::accumulate(seen.begin(), seen.end(), 0) < 2) fail(ErrorCode::SingleClass, "random forest needs two classes");
  }

  RandomForest forest;
  forest.n_features = X.cols;
  forest.n_classes = n_classes;
  forest.options = opts;
  forest.seed = seed;
  forest.trees.resize(opts.n_trees);
  const std::size_t mtry =
      opts.features_per_split > 0
          ? std::min(opts.features_per_split, X.cols)
          : std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(std::sqrt(static_cast<double>(X.cols)))));

  const auto n_trees = static_cast<long>(opts.n_trees);
#pragma omp parallel for schedule(dynamic)
  for (long t = 0; t < n_trees; ++t) {
    Engine eng(derive_seed(seed, static_cast<std::uint64_t>(t)));
    std::vector<std::size_t> rows(X.rows);
    if (opts.bootstrap) {
      std::uniform_int_distribution<std::size_t> pick(0, X.rows - 1);
      for (auto& r : rows) r = pick(eng);
    } else {
      std::iota(rows.begin(), rows.end(), 0);
    }
    TreeBuilder builder(X, y, n_classes, opts, mtry, eng);
    forest.trees[static_cast<std::size_t>(t)] = builder.build(std::move(rows));
  }
  return forest;
}

}  // namespace shaft::models
