#include "falris/knn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "falris/error.hpp"

namespace falris {

double minkowski_distance(const Vector& a, const Vector& b, double q) {
  if (a.size() != b.size()) throw DataError("dimension mismatch in distance");
  if (!(q >= 1.0)) throw std::invalid_argument("Minkowski exponent must be >= 1");
  Eigen::ArrayXd d = (a - b).array().abs();
  if (q == 1.0) return d.sum();
  if (q == 2.0) return std::sqrt(d.square().sum());
  return std::pow(d.pow(q).sum(), 1.0 / q);
}

KnnModel knn_fit(const DataSet& train, int k, double q) {
  if (train.n() == 0) throw DataError("empty training set");
  if (k < 1 || k > train.n()) throw std::invalid_argument("k must lie in [1, n]");
  if (!(q >= 1.0)) throw std::invalid_argument("Minkowski exponent must be >= 1");
  return KnnModel{train.states(), train.labels(), k, q};
}

double knn_predict_proba(const KnnModel& m, const Vector& x) {
  const Eigen::Index n = m.train_states.rows();
  if (n == 0) throw DataError("empty training set");
  if (x.size() != m.train_states.cols()) throw DataError("dimension mismatch in KNN query");
  std::vector<std::pair<double, Eigen::Index>> d(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) d[static_cast<std::size_t>(i)] = {minkowski_distance(m.train_states.row(i).transpose(), x, m.q), i};
  auto kth = d.begin() + std::min<Eigen::Index>(m.k, n);
  std::partial_sort(d.begin(), kth, d.end());
  int ones = 0;
  for (auto it = d.begin(); it != kth; ++it) ones += m.train_labels[static_cast<std::size_t>(it->second)];
  return static_cast<double>(ones) / static_cast<double>(kth - d.begin());
}

Vector knn_predict_proba(const KnnModel& m, const Matrix& x) {
  Vector out(x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) out(i) = knn_predict_proba(m, Vector(x.row(i).transpose()));
  return out;
}

int sqrt_rule_k(Eigen::Index n, bool odd) {
  int k = std::max(1, static_cast<int>(std::lround(std::sqrt(static_cast<double>(n)))));
  if (odd && k % 2 == 0) ++k;
  return k;
}

}  // namespace falris
