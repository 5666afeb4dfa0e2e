#include "falris/forest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "falris/error.hpp"
#include "falris/random.hpp"

namespace falris {

double gini_impurity(const std::vector<double>& p) {
  double sum = 0.0, sq = 0.0;
  for (double v : p) {
    if (!(v >= 0.0)) throw std::invalid_argument("class proportions must be non-negative");
    sum += v;
    sq += v * v;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw std::invalid_argument("class proportions must sum to 1");
  return 1.0 - sq;
}

const TreeNode& DecisionTree::leaf_for(const Vector& x) const {
  const TreeNode* node = &nodes.front();
  while (!node->is_leaf()) node = &nodes[static_cast<std::size_t>(x(node->feature) <= node->threshold ? node->left : node->right)];
  return *node;
}

int DecisionTree::vote(const Vector& x) const {
  const TreeNode& leaf = leaf_for(x);
  return leaf.counts[1] >= leaf.counts[0] ? 1 : 0;
}

namespace {

double node_gini(double n0, double n1) {
  double n = n0 + n1;
  if (n == 0.0) return 0.0;
  return 1.0 - (n0 * n0 + n1 * n1) / (n * n);
}

}  // namespace

std::optional<SplitChoice> best_split(const Matrix& x, const Labels& y, std::span<const Eigen::Index> rows,
                                      std::span<const int> features) {
  std::optional<SplitChoice> best;
  std::vector<std::pair<double, int>> col(rows.size());
  double tot1 = 0.0;
  for (Eigen::Index r : rows) tot1 += y[static_cast<std::size_t>(r)];
  const double tot = static_cast<double>(rows.size());
  for (int f : features) {
    for (std::size_t k = 0; k < rows.size(); ++k) col[k] = {x(rows[k], f), y[static_cast<std::size_t>(rows[k])]};
    std::sort(col.begin(), col.end());
    double l1 = 0.0;
    for (std::size_t k = 0; k + 1 < col.size(); ++k) {
      l1 += col[k].second;
      if (col[k].first == col[k + 1].first) continue;
      double nl = static_cast<double>(k + 1), nr = tot - nl;
      double imp = nl * node_gini(nl - l1, l1) + nr * node_gini(nr - (tot1 - l1), tot1 - l1);
      if (!best || imp < best->weighted_impurity - 1e-12)
        best = SplitChoice{f, 0.5 * (col[k].first + col[k + 1].first), imp};
    }
  }
  return best;
}

namespace {

class TreeBuilder {
 public:
  TreeBuilder(const Matrix& x, const Labels& y, int mtry, Rng& rng) : x_(x), y_(y), mtry_(mtry), rng_(rng) {}

  DecisionTree build(std::vector<Eigen::Index> rows) {
    tree_.nodes.clear();
    grow(std::move(rows));
    return std::move(tree_);
  }

 private:
  int grow(std::vector<Eigen::Index> rows) {
    const int id = static_cast<int>(tree_.nodes.size());
    tree_.nodes.emplace_back();
    TreeNode node;
    for (Eigen::Index r : rows) ++node.counts[static_cast<std::size_t>(y_[static_cast<std::size_t>(r)])];
    if (rows.size() < 2 || node.counts[0] == 0 || node.counts[1] == 0) {
      tree_.nodes[static_cast<std::size_t>(id)] = node;
      return id;
    }
    std::vector<int> order(static_cast<std::size_t>(x_.cols()));
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng_);
    // Sampled subset first; the remaining features only when none of the
    // sampled ones varies within the node.
    std::span<const int> all(order);
    auto split = best_split(x_, y_, rows, all.first(static_cast<std::size_t>(mtry_)));
    if (!split) split = best_split(x_, y_, rows, all.subspan(static_cast<std::size_t>(mtry_)));
    if (!split) {
      tree_.nodes[static_cast<std::size_t>(id)] = node;
      return id;
    }
    std::vector<Eigen::Index> left, right;
    for (Eigen::Index r : rows) (x_(r, split->feature) <= split->threshold ? left : right).push_back(r);
    const double n = static_cast<double>(rows.size());
    node.feature = split->feature;
    node.threshold = split->threshold;
    node.impurity_decrease = n * node_gini(node.counts[0], node.counts[1]) - split->weighted_impurity;
    rows.clear();
    rows.shrink_to_fit();
    node.left = grow(std::move(left));
    node.right = grow(std::move(right));
    tree_.nodes[static_cast<std::size_t>(id)] = node;
    return id;
  }

  const Matrix& x_;
  const Labels& y_;
  int mtry_;
  Rng& rng_;
  DecisionTree tree_;
};

}  // namespace

ForestModel rf_fit(const DataSet& train, int n_trees, std::uint64_t seed, int feature_subset_size) {
  if (n_trees < 1) throw std::invalid_argument("forest needs at least one tree");
  if (train.n() < 2) throw DataError("forest needs at least two training systems");
  if (!has_both_classes(train.labels())) throw DataError("degenerate labels: forest needs both classes");
  const Eigen::Index n = train.n(), p = train.p();
  int mtry = feature_subset_size > 0 ? feature_subset_size
                                     : static_cast<int>(std::ceil(std::sqrt(static_cast<double>(p))));
  mtry = std::min<int>(mtry, static_cast<int>(p));
  ForestModel model;
  model.n_trees = n_trees;
  model.feature_subset_size = mtry;
  model.seed = seed;
  model.p = p;
  std::uniform_int_distribution<Eigen::Index> draw(0, n - 1);
  for (int t = 0; t < n_trees; ++t) {
    Rng rng = make_rng(seed, {0xf0e57, static_cast<std::uint64_t>(t)});
    std::vector<Eigen::Index> rows(static_cast<std::size_t>(n));
    for (auto& r : rows) r = draw(rng);
    TreeBuilder builder(train.states(), train.labels(), mtry, rng);
    model.trees.push_back(builder.build(std::move(rows)));
  }
  return model;
}

double rf_predict_proba(const ForestModel& model, const Vector& x) {
  if (x.size() != model.p) throw DataError("dimension mismatch in forest query");
  int votes = 0;
  for (const auto& t : model.trees) votes += t.vote(x);
  return static_cast<double>(votes) / static_cast<double>(model.trees.size());
}

Vector rf_predict_proba(const ForestModel& model, const Matrix& x) {
  Vector out(x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) out(i) = rf_predict_proba(model, Vector(x.row(i).transpose()));
  return out;
}

Vector feature_importance(const ForestModel& model) {
  Vector imp = Vector::Zero(model.p);
  for (const auto& t : model.trees)
    for (const auto& node : t.nodes)
      if (!node.is_leaf()) imp(node.feature) += node.impurity_decrease;
  double s = imp.sum();
  if (s > 0.0) imp /= s;
  return imp;
}

}  // namespace falris
