#pragma once

#include <random>

#include "falris/dataset.hpp"

namespace testing {

inline falris::Matrix uniform_matrix(Eigen::Index n, Eigen::Index p, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  falris::Matrix m(n, p);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < p; ++j) m(i, j) = u(rng);
  return m;
}

inline falris::Labels bernoulli_labels(const falris::Vector& prob, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  falris::Labels y(static_cast<std::size_t>(prob.size()));
  for (Eigen::Index i = 0; i < prob.size(); ++i) y[static_cast<std::size_t>(i)] = u(rng) < prob(i) ? 1 : 0;
  return y;
}

inline double sample_sd(const falris::Vector& v) {
  double m = v.mean();
  return std::sqrt((v.array() - m).square().sum() / static_cast<double>(v.size() - 1));
}

}  // namespace testing
