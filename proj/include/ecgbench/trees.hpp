#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace ecgbench::trees {

// kBest: exhaustive CART search over distinct values (random forest).
// kRandom: one uniform threshold per candidate feature (extra trees).
enum class SplitRule { kBest, kRandom };

struct Node {
  int feature = -1;  // -1 for leaves
  double threshold = 0.0;  // go left when x[feature] <= threshold
  int left = -1;
  int right = -1;
  int majority = 0;              // predicted class
  double positive_fraction = 0;  // weighted share of class 1
};

struct Tree {
  std::vector<Node> nodes;

  const Node& leaf_for(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;
  int predict(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
    return leaf_for(x).majority;
  }
  int depth() const;
};

struct ForestParams {
  int n_trees = 100;
  SplitRule rule = SplitRule::kBest;
  int max_features = 0;  // 0: ceil(sqrt(d))
  bool bootstrap = true;
  int max_depth = 0;     // 0: grow until pure
  int min_samples_split = 2;
};

struct Forest {
  std::vector<Tree> trees;
  Eigen::VectorXd importances;  // mean impurity decrease, sums to 1
  double oob_accuracy = 0.0;    // NaN when no sample was ever out of bag
  std::vector<std::vector<std::uint32_t>> bootstrap_counts;  // per tree, per row
  int n_features = 0;
  int n_classes = 0;
};

// Trees are seeded from derive_seed(seed, {tree index}) so the result does
// not depend on how training is scheduled.
Forest fit_forest(const Eigen::MatrixXd& x, std::span<const int> y, int n_classes,
                  const ForestParams& params, std::uint64_t seed);

// Fraction of trees predicting class 1.
double vote_fraction(const Forest& forest, const Eigen::Ref<const Eigen::RowVectorXd>& x);

}  // namespace ecgbench::trees
