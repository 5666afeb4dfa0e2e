#pragma once

#include <utility>
#include <vector>

#include "falris/dataset.hpp"

namespace falris {

// Strict order on point indices; edge (i, j) means value_i must not exceed value_j.
struct PartialOrder {
  int n = 0;
  std::vector<std::pair<int, int>> edges;
};

// i precedes j iff x_i <= x_j componentwise and (x_i != x_j or i < j).
bool precedes(const Matrix& x, Eigen::Index i, Eigen::Index j);

// Coordinatewise dominance order on the rows of x, transitively reduced.
PartialOrder comparable_pairs(const Matrix& x);

PartialOrder chain_order(int n);

// Least-squares isotonic regression under `order` (no clamping).
Vector isotonic_regression(const Vector& values, const PartialOrder& order, const Vector& weights = Vector());

// isotonic_regression followed by clamping to [0,1].
Vector isotonic_project(const Vector& values, const PartialOrder& order);

// Pool-adjacent-violators for a total order.
Vector pav_chain(const Vector& values, const Vector& weights);

// Number of edges (i, j) with g_i > g_j + tol.
int count_violations(const Vector& g, const PartialOrder& order, double tol = 0.0);

}  // namespace falris
