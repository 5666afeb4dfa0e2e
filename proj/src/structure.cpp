#include "falris/structure.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "falris/error.hpp"
#include "falris/random.hpp"

namespace falris {

Expr Expr::leaf(int component) {
  if (component < 0) throw std::invalid_argument("negative component index");
  return Expr(Kind::Leaf, component, {});
}

Expr Expr::min(std::vector<Expr> children) {
  if (children.empty()) throw std::invalid_argument("min node without children");
  return Expr(Kind::Min, -1, std::move(children));
}

Expr Expr::max(std::vector<Expr> children) {
  if (children.empty()) throw std::invalid_argument("max node without children");
  return Expr(Kind::Max, -1, std::move(children));
}

double Expr::evaluate(std::span<const double> x) const {
  switch (kind_) {
    case Kind::Leaf:
      return x[static_cast<std::size_t>(component_)];
    case Kind::Min: {
      double v = std::numeric_limits<double>::infinity();
      for (const auto& c : children_) v = std::min(v, c.evaluate(x));
      return v;
    }
    case Kind::Max: {
      double v = -std::numeric_limits<double>::infinity();
      for (const auto& c : children_) v = std::max(v, c.evaluate(x));
      return v;
    }
  }
  return 0.0;
}

int Expr::max_component() const {
  if (kind_ == Kind::Leaf) return component_;
  int m = -1;
  for (const auto& c : children_) m = std::max(m, c.max_component());
  return m;
}

void Expr::collect_components(std::vector<int>& out) const {
  if (kind_ == Kind::Leaf) {
    out.push_back(component_);
    return;
  }
  for (const auto& c : children_) c.collect_components(out);
}

std::string Expr::to_string() const {
  if (kind_ == Kind::Leaf) return "x" + std::to_string(component_ + 1);
  std::ostringstream s;
  s << (kind_ == Kind::Min ? "min(" : "max(");
  for (std::size_t i = 0; i < children_.size(); ++i) s << (i ? "," : "") << children_[i].to_string();
  s << ')';
  return s.str();
}

void validate(const StructureSpec& spec) {
  if (spec.p < 1) throw std::invalid_argument("structure needs p >= 1");
  if (spec.expr.max_component() >= spec.p) throw std::invalid_argument("leaf index exceeds p");
  std::vector<int> seen(static_cast<std::size_t>(spec.p), 0);
  for (const auto& b : spec.blocks)
    for (int k : b) {
      if (k < 0 || k >= spec.p) throw std::invalid_argument("block member out of range");
      ++seen[static_cast<std::size_t>(k)];
    }
  for (int c : seen)
    if (c != 1) throw std::invalid_argument("blocks must partition the components");
}

namespace {

using E = Expr;

std::vector<int> range(int first, int count) {
  std::vector<int> v(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) v[static_cast<std::size_t>(i)] = first + i;
  return v;
}

// Bridge over five nodes a..e: max(min(a,d), min(a,c,e), min(b,c,d), min(b,e)).
Expr bridge(const std::vector<Expr>& n) {
  return E::max({E::min({n[0], n[3]}), E::min({n[0], n[2], n[4]}), E::min({n[1], n[2], n[3]}),
                 E::min({n[1], n[4]})});
}

}  // namespace

StructureSpec builtin_system(int id) {
  switch (id) {
    case 1: {
      Expr e = E::min({E::max({E::leaf(0), E::min({E::leaf(1), E::leaf(2)})}),
                       E::max({E::min({E::leaf(3), E::leaf(4)}), E::min({E::leaf(5), E::leaf(6)})}),
                       E::min({E::leaf(7), E::leaf(8)})});
      return {std::move(e), 9, {range(0, 3), range(3, 4), range(7, 2)}};
    }
    case 2: {
      Expr e = E::min({E::max({E::leaf(0), E::leaf(1)}), E::max({E::leaf(2), E::leaf(3)}),
                       E::max({E::leaf(4), E::leaf(5), E::leaf(6)}),
                       E::max({E::leaf(7), E::leaf(8), E::leaf(9)})});
      return {std::move(e), 10, {range(0, 2), range(2, 2), range(4, 3), range(7, 3)}};
    }
    case 3: {
      std::vector<Expr> nodes;
      std::vector<std::vector<int>> blocks;
      for (int k = 0; k < 5; ++k) {
        nodes.push_back(E::max({E::leaf(3 * k), E::leaf(3 * k + 1), E::leaf(3 * k + 2)}));
        blocks.push_back(range(3 * k, 3));
      }
      return {bridge(nodes), 15, std::move(blocks)};
    }
    case 4: {
      std::vector<Expr> nodes;
      std::vector<std::vector<int>> blocks;
      for (int j = 0; j < 5; ++j) {
        std::vector<Expr> inner;
        for (int i = 0; i < 5; ++i) inner.push_back(E::leaf(5 * j + i));
        nodes.push_back(bridge(inner));
        blocks.push_back(range(5 * j, 5));
      }
      return {bridge(nodes), 25, std::move(blocks)};
    }
    default:
      throw std::invalid_argument("unknown system id " + std::to_string(id) + " (expected 1..4)");
  }
}

double evaluate_structure(const StructureSpec& spec, std::span<const double> x) {
  if (static_cast<int>(x.size()) != spec.p)
    throw DataError("state vector has length " + std::to_string(x.size()) + ", expected " +
                    std::to_string(spec.p));
  return spec.expr.evaluate(x);
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

namespace {

void validate_config(const SimConfig& cfg) {
  if (!(cfg.sigma > 0.0)) throw std::invalid_argument("sigma must be positive");
  if (!(cfg.y0 > 0.0 && cfg.y0 < 1.0)) throw std::invalid_argument("y0 must lie in (0,1)");
  if (cfg.n < 1) throw std::invalid_argument("sample size must be positive");
}

}  // namespace

Matrix sample_component_states(const StructureSpec& spec, const SimConfig& cfg) {
  validate(spec);
  validate_config(cfg);
  std::vector<Eigen::LLT<Matrix>> factors;
  for (const auto& b : spec.blocks) {
    const auto m = static_cast<Eigen::Index>(b.size());
    Matrix c = Matrix::Constant(m, m, cfg.rho);
    c.diagonal().setOnes();
    Eigen::LLT<Matrix> llt(c);
    if (llt.info() != Eigen::Success || !(cfg.rho < 1.0))
      throw std::invalid_argument("rho = " + std::to_string(cfg.rho) +
                                  " makes a block correlation matrix non-positive-definite");
    factors.push_back(std::move(llt));
  }
  Rng rng = make_rng(cfg.seed, {0x57a7e5});
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix x(cfg.n, spec.p);
  for (Eigen::Index i = 0; i < cfg.n; ++i) {
    for (std::size_t b = 0; b < spec.blocks.size(); ++b) {
      const auto& members = spec.blocks[b];
      Vector e(static_cast<Eigen::Index>(members.size()));
      for (auto& v : e) v = normal(rng);
      Vector z = factors[b].matrixL() * e;
      for (std::size_t k = 0; k < members.size(); ++k)
        x(i, members[k]) = normal_cdf(z(static_cast<Eigen::Index>(k)));
    }
  }
  return x;
}

double true_reliability(double phi, const SimConfig& cfg) {
  return 1.0 - normal_cdf((cfg.y0 - phi) / cfg.sigma);
}

Labels simulate_labels(const Vector& reliability, std::uint64_t seed) {
  Rng rng = make_rng(seed, {0x1abe1});
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Labels y(static_cast<std::size_t>(reliability.size()));
  for (Eigen::Index i = 0; i < reliability.size(); ++i)
    y[static_cast<std::size_t>(i)] = u(rng) < reliability(i) ? 1 : 0;
  return y;
}

DataSet simulate_dataset(const StructureSpec& spec, const SimConfig& cfg) {
  Matrix x = sample_component_states(spec, cfg);
  Vector r(cfg.n);
  std::vector<double> row(static_cast<std::size_t>(spec.p));
  for (Eigen::Index i = 0; i < cfg.n; ++i) {
    for (int j = 0; j < spec.p; ++j) row[static_cast<std::size_t>(j)] = x(i, j);
    r(i) = true_reliability(spec.expr.evaluate(row), cfg);
  }
  Labels y = simulate_labels(r, cfg.seed);
  return make_dataset(std::move(x), std::move(y), std::move(r));
}

DataSet simulate_dataset(int id, const SimConfig& cfg) { return simulate_dataset(builtin_system(id), cfg); }

}  // namespace falris
