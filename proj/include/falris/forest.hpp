#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "falris/dataset.hpp"

namespace falris {

double gini_impurity(const std::vector<double>& proportions);

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;  // x[feature] <= threshold goes left
  int left = -1, right = -1;
  std::array<int, 2> counts{0, 0};
  double impurity_decrease = 0.0;  // weighted by node size
  bool is_leaf() const { return feature < 0; }
};

struct DecisionTree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root
  const TreeNode& leaf_for(const Vector& x) const;
  int vote(const Vector& x) const;  // leaf majority, ties to 1
};

struct SplitChoice {
  int feature;
  double threshold;
  double weighted_impurity;  // n_left * G_left + n_right * G_right
};

// Best Gini split over `features` among `rows`; thresholds are midpoints of
// consecutive distinct values. Earlier features and smaller thresholds win ties.
std::optional<SplitChoice> best_split(const Matrix& x, const Labels& y, std::span<const Eigen::Index> rows,
                                      std::span<const int> features);

struct ForestModel {
  std::vector<DecisionTree> trees;
  int n_trees = 0;
  int feature_subset_size = 0;
  std::uint64_t seed = 0;
  Eigen::Index p = 0;
};

ForestModel rf_fit(const DataSet& train, int n_trees, std::uint64_t seed, int feature_subset_size = 0);
double rf_predict_proba(const ForestModel& model, const Vector& x);
Vector rf_predict_proba(const ForestModel& model, const Matrix& x);
// Total Gini decrease per feature, normalized to sum 1.
Vector feature_importance(const ForestModel& model);

}  // namespace falris
