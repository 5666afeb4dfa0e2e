#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "falris/dataset.hpp"

namespace falris {

// Min/max expression over component indices (0-based). Min is a series
// connection, max a parallel one.
class Expr {
 public:
  enum class Kind { Leaf, Min, Max };

  static Expr leaf(int component);
  static Expr min(std::vector<Expr> children);
  static Expr max(std::vector<Expr> children);

  Kind kind() const { return kind_; }
  int component() const { return component_; }
  const std::vector<Expr>& children() const { return children_; }

  double evaluate(std::span<const double> x) const;
  int max_component() const;
  void collect_components(std::vector<int>& out) const;
  std::string to_string() const;

 private:
  Expr(Kind k, int c, std::vector<Expr> ch) : kind_(k), component_(c), children_(std::move(ch)) {}
  Kind kind_;
  int component_;
  std::vector<Expr> children_;
};

struct StructureSpec {
  Expr expr;
  int p;
  std::vector<std::vector<int>> blocks;  // dependence blocks, 0-based
};

// Throws std::invalid_argument if leaves or blocks are inconsistent with p.
void validate(const StructureSpec& spec);

struct SimConfig {
  double rho = 0.9;
  double sigma = 0.2;
  double y0 = 0.5;
  Eigen::Index n = 125;
  std::uint64_t seed = 0;
};

// Systems 1..4 of the benchmark study (p = 9, 10, 15, 25).
StructureSpec builtin_system(int id);

double evaluate_structure(const StructureSpec& spec, std::span<const double> x);

double normal_cdf(double z);

// Gaussian copula: block-equicorrelated latent normals mapped through the
// standard normal CDF, giving Uniform(0,1) marginals.
Matrix sample_component_states(const StructureSpec& spec, const SimConfig& cfg);

// P(latent > y0) for latent ~ N(phi, sigma).
double true_reliability(double phi, const SimConfig& cfg);

// Y_i ~ Bernoulli(reliability_i), deterministic per seed.
Labels simulate_labels(const Vector& reliability, std::uint64_t seed);

DataSet simulate_dataset(int id, const SimConfig& cfg);
DataSet simulate_dataset(const StructureSpec& spec, const SimConfig& cfg);

}  // namespace falris
