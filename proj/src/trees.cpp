#include "ecgbench/trees.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "ecgbench/error.hpp"
#include "ecgbench/random.hpp"

namespace ecgbench::trees {

namespace {

// Each feature column recoded as ranks into its sorted distinct values.
struct BinnedColumns {
  std::vector<std::vector<std::uint32_t>> codes;  // [feature][row]
  std::vector<std::vector<double>> values;        // [feature][code]
};

BinnedColumns bin_columns(const Eigen::MatrixXd& x) {
  BinnedColumns b;
  const auto n = static_cast<std::size_t>(x.rows());
  b.codes.resize(static_cast<std::size_t>(x.cols()));
  b.values.resize(static_cast<std::size_t>(x.cols()));
  std::vector<std::size_t> order(n);
  for (Eigen::Index f = 0; f < x.cols(); ++f) {
    auto col = x.col(f);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t c) { return col[a] < col[c]; });
    auto& codes = b.codes[f];
    auto& values = b.values[f];
    codes.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
      const double v = col[static_cast<Eigen::Index>(order[k])];
      if (values.empty() || values.back() != v) values.push_back(v);
      codes[order[k]] = static_cast<std::uint32_t>(values.size() - 1);
    }
  }
  return b;
}

struct SplitChoice {
  int feature = -1;
  double threshold = 0.0;
  double score = -std::numeric_limits<double>::infinity();  // sum_child sum_c w^2 / W
};

class TreeBuilder {
 public:
  TreeBuilder(const BinnedColumns& bins, std::span<const int> y, int n_classes,
              std::span<const double> weight, const ForestParams& params, Rng& rng,
              Eigen::VectorXd& importance)
      : bins_(bins), y_(y), n_classes_(n_classes), weight_(weight), params_(params),
        rng_(rng), importance_(importance) {
    n_features_ = static_cast<int>(bins.codes.size());
    max_features_ = params.max_features > 0
                        ? std::min(params.max_features, n_features_)
                        : static_cast<int>(std::ceil(std::sqrt(static_cast<double>(n_features_))));
    class_w_.resize(static_cast<std::size_t>(n_classes));
  }

  Tree build(std::vector<std::uint32_t> rows) {
    rows_ = std::move(rows);
    Tree tree;
    struct Task {
      int node;
      std::size_t begin, end;
      int depth;
    };
    std::vector<Task> stack;
    tree.nodes.emplace_back();
    stack.push_back({0, 0, rows_.size(), 0});
    while (!stack.empty()) {
      Task t = stack.back();
      stack.pop_back();
      std::vector<double> totals(static_cast<std::size_t>(n_classes_), 0.0);
      for (std::size_t i = t.begin; i < t.end; ++i) totals[y_[rows_[i]]] += weight_[rows_[i]];
      const double total_w = std::accumulate(totals.begin(), totals.end(), 0.0);
      Node& node = tree.nodes[t.node];
      node.majority = static_cast<int>(std::max_element(totals.begin(), totals.end()) - totals.begin());
      node.positive_fraction = n_classes_ > 1 && total_w > 0 ? totals[1] / total_w : 0.0;

      const bool pure = std::count_if(totals.begin(), totals.end(),
                                      [](double w) { return w > 0; }) <= 1;
      const bool depth_capped = params_.max_depth > 0 && t.depth >= params_.max_depth;
      if (pure || depth_capped ||
          t.end - t.begin < static_cast<std::size_t>(params_.min_samples_split))
        continue;

      const SplitChoice split = find_split(t.begin, t.end, totals, total_w);
      if (split.feature < 0) continue;

      // Partition rows in place: left block then right block.
      const auto& codes = bins_.codes[split.feature];
      const auto& values = bins_.values[split.feature];
      auto mid = std::partition(rows_.begin() + t.begin, rows_.begin() + t.end,
                                [&](std::uint32_t r) { return values[codes[r]] <= split.threshold; });
      const auto mid_idx = static_cast<std::size_t>(mid - rows_.begin());
      if (mid_idx == t.begin || mid_idx == t.end) continue;

      double parent_sq = 0.0;
      for (double w : totals) parent_sq += w * w;
      // Weighted Gini decrease: W*gini(parent) - sum W_child*gini(child).
      importance_[split.feature] += split.score - parent_sq / total_w;

      const int left = static_cast<int>(tree.nodes.size());
      tree.nodes.emplace_back();
      tree.nodes.emplace_back();
      Node& parent = tree.nodes[t.node];
      parent.feature = split.feature;
      parent.threshold = split.threshold;
      parent.left = left;
      parent.right = left + 1;
      stack.push_back({left + 1, mid_idx, t.end, t.depth + 1});
      stack.push_back({left, t.begin, mid_idx, t.depth + 1});
    }
    return tree;
  }

 private:
  SplitChoice find_split(std::size_t begin, std::size_t end, const std::vector<double>& totals,
                         double total_w) {
    std::vector<int> features(static_cast<std::size_t>(n_features_));
    std::iota(features.begin(), features.end(), 0);
    SplitChoice best;
    int visited = 0;
    for (int i = 0; i < n_features_ && visited < max_features_; ++i) {
      std::uniform_int_distribution<int> pick(i, n_features_ - 1);
      std::swap(features[i], features[pick(rng_)]);
      const int f = features[i];
      std::uint32_t lo = std::numeric_limits<std::uint32_t>::max(), hi = 0;
      const auto& codes = bins_.codes[f];
      for (std::size_t k = begin; k < end; ++k) {
        lo = std::min(lo, codes[rows_[k]]);
        hi = std::max(hi, codes[rows_[k]]);
      }
      if (lo == hi) continue;  // constant here; does not count toward max_features
      ++visited;
      const SplitChoice c = params_.rule == SplitRule::kBest
                                ? best_threshold(f, begin, end, lo, hi, totals, total_w)
                                : random_threshold(f, begin, end, lo, hi, totals, total_w);
      if (c.score > best.score) best = c;
    }
    return best;
  }

  static double child_score(const std::vector<double>& w, double total) {
    if (total <= 0) return 0.0;
    double sq = 0.0;
    for (double v : w) sq += v * v;
    return sq / total;
  }

  SplitChoice best_threshold(int f, std::size_t begin, std::size_t end, std::uint32_t lo,
                             std::uint32_t hi, const std::vector<double>& totals, double total_w) {
    const auto& codes = bins_.codes[f];
    const auto& values = bins_.values[f];
    const std::size_t m = end - begin;
    const std::size_t range = hi - lo + 1;
    const auto nc = static_cast<std::size_t>(n_classes_);

    // Per-code class weights, either via a dense histogram or by sorting.
    entries_code_.clear();
    entries_w_.clear();
    if (range <= 4 * m) {
      hist_.assign(range * nc, 0.0);
      for (std::size_t k = begin; k < end; ++k) {
        const auto r = rows_[k];
        hist_[(codes[r] - lo) * nc + y_[r]] += weight_[r];
      }
      for (std::size_t b = 0; b < range; ++b) {
        double s = 0.0;
        for (std::size_t c = 0; c < nc; ++c) s += hist_[b * nc + c];
        if (s == 0.0) continue;
        entries_code_.push_back(static_cast<std::uint32_t>(b + lo));
        entries_w_.insert(entries_w_.end(), hist_.begin() + b * nc, hist_.begin() + (b + 1) * nc);
      }
    } else {
      sort_buf_.clear();
      for (std::size_t k = begin; k < end; ++k) sort_buf_.push_back(rows_[k]);
      std::sort(sort_buf_.begin(), sort_buf_.end(),
                [&](std::uint32_t a, std::uint32_t b) { return codes[a] < codes[b]; });
      for (auto r : sort_buf_) {
        if (entries_code_.empty() || entries_code_.back() != codes[r]) {
          entries_code_.push_back(codes[r]);
          entries_w_.resize(entries_w_.size() + nc, 0.0);
        }
        entries_w_[entries_w_.size() - nc + y_[r]] += weight_[r];
      }
    }

    SplitChoice best;
    std::vector<double> left(nc, 0.0), right(totals);
    double left_w = 0.0;
    for (std::size_t e = 0; e + 1 < entries_code_.size(); ++e) {
      for (std::size_t c = 0; c < nc; ++c) {
        const double w = entries_w_[e * nc + c];
        left[c] += w;
        right[c] -= w;
        left_w += w;
      }
      const double score = child_score(left, left_w) + child_score(right, total_w - left_w);
      if (score > best.score) {
        best.score = score;
        best.feature = f;
        best.threshold = 0.5 * (values[entries_code_[e]] + values[entries_code_[e + 1]]);
        // Midpoint can round onto the upper value for adjacent doubles.
        if (best.threshold >= values[entries_code_[e + 1]]) best.threshold = values[entries_code_[e]];
      }
    }
    return best;
  }

  SplitChoice random_threshold(int f, std::size_t begin, std::size_t end, std::uint32_t lo,
                               std::uint32_t hi, const std::vector<double>& totals,
                               double total_w) {
    const auto& codes = bins_.codes[f];
    const auto& values = bins_.values[f];
    std::uniform_real_distribution<double> draw(values[lo], values[hi]);
    double threshold = draw(rng_);
    if (threshold >= values[hi]) threshold = values[lo];
    std::vector<double> left(static_cast<std::size_t>(n_classes_), 0.0);
    double left_w = 0.0;
    for (std::size_t k = begin; k < end; ++k) {
      const auto r = rows_[k];
      if (values[codes[r]] <= threshold) {
        left[y_[r]] += weight_[r];
        left_w += weight_[r];
      }
    }
    std::vector<double> right(totals);
    for (std::size_t c = 0; c < right.size(); ++c) right[c] -= left[c];
    SplitChoice choice;
    choice.feature = f;
    choice.threshold = threshold;
    choice.score = child_score(left, left_w) + child_score(right, total_w - left_w);
    return choice;
  }

  const BinnedColumns& bins_;
  std::span<const int> y_;
  int n_classes_;
  std::span<const double> weight_;
  const ForestParams& params_;
  Rng& rng_;
  Eigen::VectorXd& importance_;
  int n_features_ = 0;
  int max_features_ = 0;
  std::vector<std::uint32_t> rows_;
  std::vector<double> class_w_;
  std::vector<double> hist_;
  std::vector<std::uint32_t> entries_code_;
  std::vector<double> entries_w_;
  std::vector<std::uint32_t> sort_buf_;
};

}  // namespace

const Node& Tree::leaf_for(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
  const Node* node = &nodes.front();
  while (node->feature >= 0)
    node = &nodes[x[node->feature] <= node->threshold ? node->left : node->right];
  return *node;
}

int Tree::depth() const {
  std::vector<int> d(nodes.size(), 0);
  int best = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i].feature < 0) continue;
    d[nodes[i].left] = d[nodes[i].right] = d[i] + 1;
    best = std::max(best, d[i] + 1);
  }
  return best;
}

Forest fit_forest(const Eigen::MatrixXd& x, std::span<const int> y, int n_classes,
                  const ForestParams& params, std::uint64_t seed) {
  if (params.n_trees < 1) throw Error(ErrorCode::kInvalidArgument, "n_trees must be >= 1");
  if (static_cast<std::size_t>(x.rows()) != y.size() || x.rows() == 0)
    throw Error(ErrorCode::kInvalidArgument, "feature/label size mismatch");
  if (!x.allFinite()) throw Error(ErrorCode::kNonFiniteFeature, "non-finite feature value");

  const BinnedColumns bins = bin_columns(x);
  const auto n = static_cast<std::size_t>(x.rows());

  Forest forest;
  forest.n_features = static_cast<int>(x.cols());
  forest.n_classes = n_classes;
  forest.importances = Eigen::VectorXd::Zero(x.cols());
  forest.trees.reserve(static_cast<std::size_t>(params.n_trees));
  forest.bootstrap_counts.resize(static_cast<std::size_t>(params.n_trees));

  std::vector<double> weight(n);
  for (int t = 0; t < params.n_trees; ++t) {
    Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(t)}));
    auto& counts = forest.bootstrap_counts[t];
    counts.assign(n, params.bootstrap ? 0u : 1u);
    if (params.bootstrap) {
      std::uniform_int_distribution<std::size_t> draw(0, n - 1);
      for (std::size_t i = 0; i < n; ++i) ++counts[draw(rng)];
    }
    std::vector<std::uint32_t> rows;
    for (std::size_t i = 0; i < n; ++i) {
      weight[i] = counts[i];
      if (counts[i] > 0) rows.push_back(static_cast<std::uint32_t>(i));
    }
    Eigen::VectorXd tree_importance = Eigen::VectorXd::Zero(x.cols());
    TreeBuilder builder(bins, y, n_classes, weight, params, rng, tree_importance);
    forest.trees.push_back(builder.build(std::move(rows)));
    const double s = tree_importance.sum();
    if (s > 0) forest.importances += tree_importance / s;
  }
  const double total = forest.importances.sum();
  if (total > 0) forest.importances /= total;

  // Out-of-bag majority vote.
  if (params.bootstrap) {
    std::size_t scored = 0, correct = 0;
    std::vector<int> votes(static_cast<std::size_t>(n_classes));
    for (std::size_t i = 0; i < n; ++i) {
      std::fill(votes.begin(), votes.end(), 0);
      bool any = false;
      for (int t = 0; t < params.n_trees; ++t) {
        if (forest.bootstrap_counts[t][i] != 0) continue;
        ++votes[forest.trees[t].predict(x.row(static_cast<Eigen::Index>(i)))];
        any = true;
      }
      if (!any) continue;
      ++scored;
      const int pred = static_cast<int>(std::max_element(votes.begin(), votes.end()) - votes.begin());
      correct += pred == y[i];
    }
    forest.oob_accuracy = scored ? static_cast<double>(correct) / scored
                                 : std::numeric_limits<double>::quiet_NaN();
  } else {
    forest.oob_accuracy = std::numeric_limits<double>::quiet_NaN();
  }
  return forest;
}

double vote_fraction(const Forest& forest, const Eigen::Ref<const Eigen::RowVectorXd>& x) {
  int ones = 0;
  for (const auto& tree : forest.trees) ones += tree.predict(x) == 1;
  return static_cast<double>(ones) / static_cast<double>(forest.trees.size());
}

}  // namespace ecgbench::trees
