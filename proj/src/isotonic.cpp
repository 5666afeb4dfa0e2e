#include "falris/isotonic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "falris/error.hpp"

namespace falris {

bool precedes(const Matrix& x, Eigen::Index i, Eigen::Index j) {
  if (i == j) return false;
  bool equal = true;
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    if (x(i, c) > x(j, c)) return false;
    if (x(i, c) < x(j, c)) equal = false;
  }
  return !equal || i < j;
}

PartialOrder comparable_pairs(const Matrix& x) {
  const auto n = static_cast<int>(x.rows());
  const std::size_t words = (static_cast<std::size_t>(n) + 63) / 64;
  std::vector<std::vector<std::uint64_t>> succ(static_cast<std::size_t>(n), std::vector<std::uint64_t>(words, 0));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (precedes(x, i, j)) succ[static_cast<std::size_t>(i)][static_cast<std::size_t>(j) / 64] |= 1ULL << (j % 64);

  PartialOrder order;
  order.n = n;
  std::vector<std::uint64_t> implied(words);
  for (int i = 0; i < n; ++i) {
    const auto& si = succ[static_cast<std::size_t>(i)];
    std::fill(implied.begin(), implied.end(), 0);
    for (int k = 0; k < n; ++k)
      if (si[static_cast<std::size_t>(k) / 64] >> (k % 64) & 1ULL)
        for (std::size_t w = 0; w < words; ++w) implied[w] |= succ[static_cast<std::size_t>(k)][w];
    for (int j = 0; j < n; ++j) {
      bool direct = si[static_cast<std::size_t>(j) / 64] >> (j % 64) & 1ULL;
      bool via = implied[static_cast<std::size_t>(j) / 64] >> (j % 64) & 1ULL;
      if (direct && !via) order.edges.emplace_back(i, j);
    }
  }
  return order;
}

PartialOrder chain_order(int n) {
  PartialOrder o;
  o.n = n;
  for (int i = 0; i + 1 < n; ++i) o.edges.emplace_back(i, i + 1);
  return o;
}

namespace {

void check_acyclic(const PartialOrder& order) {
  std::vector<int> indeg(static_cast<std::size_t>(order.n), 0);
  std::vector<std::vector<int>> out(static_cast<std::size_t>(order.n));
  for (auto [i, j] : order.edges) {
    if (i < 0 || j < 0 || i >= order.n || j >= order.n) throw DataError("order edge out of range");
    out[static_cast<std::size_t>(i)].push_back(j);
    ++indeg[static_cast<std::size_t>(j)];
  }
  std::vector<int> stack;
  for (int i = 0; i < order.n; ++i)
    if (indeg[static_cast<std::size_t>(i)] == 0) stack.push_back(i);
  int seen = 0;
  while (!stack.empty()) {
    int i = stack.back();
    stack.pop_back();
    ++seen;
    for (int j : out[static_cast<std::size_t>(i)])
      if (--indeg[static_cast<std::size_t>(j)] == 0) stack.push_back(j);
  }
  if (seen != order.n) throw DataError("cyclic order passed to isotonic regression");
}

// Dinic max-flow on a small dense-ish graph with real capacities.
class FlowNetwork {
 public:
  explicit FlowNetwork(int nodes) : adj_(static_cast<std::size_t>(nodes)), level_(adj_.size()), it_(adj_.size()) {}

  void add_edge(int u, int v, double cap) {
    adj_[static_cast<std::size_t>(u)].push_back({v, cap, adj_[static_cast<std::size_t>(v)].size()});
    adj_[static_cast<std::size_t>(v)].push_back({u, 0.0, adj_[static_cast<std::size_t>(u)].size() - 1});
  }

  void max_flow(int s, int t, double eps) {
    eps_ = eps;
    while (bfs(s, t)) {
      std::fill(it_.begin(), it_.end(), 0);
      while (dfs(s, t, std::numeric_limits<double>::infinity()) > eps_) {
      }
    }
  }

  // Nodes reachable from s through edges with residual capacity.
  std::vector<char> reachable(int s) const {
    std::vector<char> seen(adj_.size(), 0);
    std::vector<int> stack{s};
    seen[static_cast<std::size_t>(s)] = 1;
    while (!stack.empty()) {
      int u = stack.back();
      stack.pop_back();
      for (const auto& e : adj_[static_cast<std::size_t>(u)])
        if (e.cap > eps_ && !seen[static_cast<std::size_t>(e.to)]) {
          seen[static_cast<std::size_t>(e.to)] = 1;
          stack.push_back(e.to);
        }
    }
    return seen;
  }

 private:
  struct Edge {
    int to;
    double cap;
    std::size_t rev;
  };

  bool bfs(int s, int t) {
    std::fill(level_.begin(), level_.end(), -1);
    std::deque<int> q{s};
    level_[static_cast<std::size_t>(s)] = 0;
    while (!q.empty()) {
      int u = q.front();
      q.pop_front();
      for (const auto& e : adj_[static_cast<std::size_t>(u)])
        if (e.cap > eps_ && level_[static_cast<std::size_t>(e.to)] < 0) {
          level_[static_cast<std::size_t>(e.to)] = level_[static_cast<std::size_t>(u)] + 1;
          q.push_back(e.to);
        }
    }
    return level_[static_cast<std::size_t>(t)] >= 0;
  }

  double dfs(int u, int t, double pushed) {
    if (u == t) return pushed;
    auto& edges = adj_[static_cast<std::size_t>(u)];
    for (auto& i = it_[static_cast<std::size_t>(u)]; i < edges.size(); ++i) {
      Edge& e = edges[i];
      if (e.cap <= eps_ || level_[static_cast<std::size_t>(e.to)] != level_[static_cast<std::size_t>(u)] + 1) continue;
      double got = dfs(e.to, t, std::min(pushed, e.cap));
      if (got > eps_) {
        e.cap -= got;
        adj_[static_cast<std::size_t>(e.to)][e.rev].cap += got;
        return got;
      }
    }
    return 0.0;
  }

  std::vector<std::vector<Edge>> adj_;
  std::vector<int> level_;
  std::vector<std::size_t> it_;
  double eps_ = 0.0;
};

}  // namespace

// Recursive partitioning: a group is split along the upper set U maximizing
// sum_{i in U} w_i (v_i - mean), found as a maximum-weight closure by min-cut.
// When no upper set has positive excess, the group's weighted mean is optimal
// for it. Groups stay convex in the order, so reduced edges suffice.
Vector isotonic_regression(const Vector& values, const PartialOrder& order, const Vector& weights) {
  if (values.size() != order.n)
    throw DataError("dimension mismatch: " + std::to_string(values.size()) + " values for an order on " +
                    std::to_string(order.n) + " points");
  Vector w = weights.size() == 0 ? Vector::Ones(values.size()) : weights;
  if (w.size() != values.size()) throw DataError("dimension mismatch in isotonic weights");
  if ((w.array() <= 0.0).any()) throw DataError("isotonic weights must be positive");
  check_acyclic(order);

  const int n = order.n;
  std::vector<std::vector<int>> out(static_cast<std::size_t>(n));
  for (auto [i, j] : order.edges) out[static_cast<std::size_t>(i)].push_back(j);

  Vector fitted(n);
  std::vector<int> group_of(static_cast<std::size_t>(n), 0);
  std::vector<std::vector<int>> pending;
  {
    std::vector<int> all(static_cast<std::size_t>(n));
    std::iota(all.begin(), all.end(), 0);
    if (n > 0) pending.push_back(std::move(all));
  }
  int next_group = 1;
  std::vector<int> local(static_cast<std::size_t>(n), -1);
  while (!pending.empty()) {
    std::vector<int> g = std::move(pending.back());
    pending.pop_back();
    double sw = 0.0, swv = 0.0;
    for (int i : g) {
      sw += w(i);
      swv += w(i) * values(i);
    }
    const double mean = swv / sw;
    const auto m = static_cast<int>(g.size());
    double scale = 0.0;
    for (int i : g) scale += std::abs(w(i) * (values(i) - mean));
    const double eps = 1e-14 * std::max(scale, 1e-300);

    std::vector<int> upper;
    if (m > 1 && scale > 0.0) {
      for (int a = 0; a < m; ++a) local[static_cast<std::size_t>(g[static_cast<std::size_t>(a)])] = a;
      const int s = m, t = m + 1;
      FlowNetwork net(m + 2);
      const double inf = 4.0 * scale + 1.0;
      for (int a = 0; a < m; ++a) {
        int i = g[static_cast<std::size_t>(a)];
        double c = w(i) * (values(i) - mean);
        if (c > 0.0) net.add_edge(s, a, c);
        else if (c < 0.0) net.add_edge(a, t, -c);
        for (int j : out[static_cast<std::size_t>(i)]) {
          int b = local[static_cast<std::size_t>(j)];
          if (b >= 0 && group_of[static_cast<std::size_t>(j)] == group_of[static_cast<std::size_t>(i)])
            net.add_edge(a, b, inf);
        }
      }
      net.max_flow(s, t, eps);
      auto seen = net.reachable(s);
      double excess = 0.0;
      for (int a = 0; a < m; ++a)
        if (seen[static_cast<std::size_t>(a)]) {
          upper.push_back(g[static_cast<std::size_t>(a)]);
          excess += w(g[static_cast<std::size_t>(a)]) * (values(g[static_cast<std::size_t>(a)]) - mean);
        }
      for (int i : g) local[static_cast<std::size_t>(i)] = -1;
      if (excess <= 1e-12 * scale || static_cast<int>(upper.size()) == m) upper.clear();
    }
    if (upper.empty()) {
      for (int i : g) fitted(i) = mean;
      continue;
    }
    std::vector<char> in_upper(static_cast<std::size_t>(n), 0);
    for (int i : upper) in_upper[static_cast<std::size_t>(i)] = 1;
    std::vector<int> lower;
    const int ug = next_group++, lg = next_group++;
    for (int i : g) {
      if (in_upper[static_cast<std::size_t>(i)]) group_of[static_cast<std::size_t>(i)] = ug;
      else {
        group_of[static_cast<std::size_t>(i)] = lg;
        lower.push_back(i);
      }
    }
    pending.push_back(std::move(lower));
    pending.push_back(std::move(upper));
  }
  return fitted;
}

Vector isotonic_project(const Vector& values, const PartialOrder& order) {
  return isotonic_regression(values, order).cwiseMax(0.0).cwiseMin(1.0);
}

Vector pav_chain(const Vector& values, const Vector& weights) {
  if (values.size() != weights.size()) throw DataError("dimension mismatch in pav_chain");
  for (double w : weights)
    if (!(w > 0.0)) throw DataError("pav_chain weights must be positive");
  struct Block {
    double mean, weight;
    Eigen::Index count;
  };
  std::vector<Block> blocks;
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    blocks.push_back({values(i), weights(i), 1});
    while (blocks.size() > 1 && blocks[blocks.size() - 2].mean > blocks.back().mean) {
      Block b = blocks.back();
      blocks.pop_back();
      Block& a = blocks.back();
      double wsum = a.weight + b.weight;
      a.mean = (a.weight * a.mean + b.weight * b.mean) / wsum;
      a.weight = wsum;
      a.count += b.count;
    }
  }
  Vector out(values.size());
  Eigen::Index k = 0;
  for (const auto& b : blocks)
    for (Eigen::Index c = 0; c < b.count; ++c) out(k++) = b.mean;
  return out;
}

int count_violations(const Vector& g, const PartialOrder& order, double tol) {
  int v = 0;
  for (auto [i, j] : order.edges)
    if (g(i) > g(j) + tol) ++v;
  return v;
}

}  // namespace falris
