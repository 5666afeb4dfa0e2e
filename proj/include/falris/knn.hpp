#pragma once

#include "falris/dataset.hpp"

namespace falris {

double minkowski_distance(const Vector& a, const Vector& b, double q);

struct KnnModel {
  Matrix train_states;
  Labels train_labels;
  int k = 20;
  double q = 2.0;
};

KnnModel knn_fit(const DataSet& train, int k = 20, double q = 2.0);

// Share of label-1 points among the k nearest; equal distances resolve
// toward the lower training index.
double knn_predict_proba(const KnnModel& model, const Vector& x);
Vector knn_predict_proba(const KnnModel& model, const Matrix& x);

inline int knn_class(double proba) { return proba >= 0.5 ? 1 : 0; }

// Alternative selectors: round(sqrt(n)), optionally bumped to the next odd value.
int sqrt_rule_k(Eigen::Index n, bool odd = false);

}  // namespace falris
