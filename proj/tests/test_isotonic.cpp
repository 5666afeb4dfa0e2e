#include <random>
#include <set>

#include "doctest.h"
#include "falris/error.hpp"
#include "falris/isotonic.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace falris;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double d : v) out(i++) = d;
  return out;
}

double sse(const Vector& a, const Vector& b) { return (a - b).squaredNorm(); }

// Transitive reduction of the brute-force relation.
std::set<std::pair<int, int>> reduced_edges(const Matrix& x) {
  const int n = static_cast<int>(x.rows());
  std::set<std::pair<int, int>> out;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (!oracle::below(x, i, j)) continue;
      bool implied = false;
      for (int k = 0; k < n && !implied; ++k) implied = oracle::below(x, i, k) && oracle::below(x, k, j);
      if (!implied) out.insert({i, j});
    }
  return out;
}

}  // namespace

TEST_CASE("comparable_pairs on two-point examples") {
  Matrix a(2, 2);
  a << 0, 0, 1, 1;
  PartialOrder o = comparable_pairs(a);
  REQUIRE(o.edges.size() == 1);
  CHECK(o.edges[0] == std::pair<int, int>{0, 1});
  Matrix b(2, 2);
  b << 0, 1, 1, 0;
  CHECK(comparable_pairs(b).edges.empty());
  Matrix tie(2, 2);
  tie << 0.5, 0.5, 0.5, 0.5;
  PartialOrder t = comparable_pairs(tie);
  REQUIRE(t.edges.size() == 1);
  CHECK(t.edges[0] == std::pair<int, int>{0, 1});
}

TEST_CASE("comparable_pairs equals the brute-force reduced relation") {
  std::mt19937_64 rng(101);
  for (int rep = 0; rep < 50; ++rep) {
    Matrix x = testing::uniform_matrix(10, 3, rng);
    if (rep % 5 == 0) x = (x * 3.0).array().floor() / 3.0;  // forces ties
    PartialOrder o = comparable_pairs(x);
    std::set<std::pair<int, int>> got(o.edges.begin(), o.edges.end());
    CHECK(got == reduced_edges(x));
    CHECK(o.n == 10);
  }
}

TEST_CASE("isotonic_project spec examples") {
  PartialOrder chain = chain_order(3);
  CHECK(sse(isotonic_regression(vec({3, 1, 2}), chain), vec({2, 2, 2})) < 1e-24);
  Vector mono = vec({0.1, 0.4, 0.4});
  CHECK(isotonic_project(mono, chain) == mono);
  PartialOrder none{3, {}};
  Vector v = vec({0.9, 0.2, 0.5});
  CHECK(isotonic_project(v, none) == v);
  CHECK(isotonic_project(vec({1.4, -0.2, 0.3}), none) == vec({1.0, 0.0, 0.3}));
  PartialOrder cyclic{2, {{0, 1}, {1, 0}}};
  CHECK_THROWS_AS(isotonic_regression(vec({0.0, 1.0}), cyclic), DataError);
  CHECK_THROWS_AS(isotonic_regression(vec({0.0, 1.0}), chain), DataError);
}

TEST_CASE("pav_chain spec examples") {
  CHECK(pav_chain(vec({1, 2, 3}), Vector::Ones(3)) == vec({1, 2, 3}));
  CHECK(sse(pav_chain(vec({3, 1, 2}), Vector::Ones(3)), vec({2, 2, 2})) < 1e-24);
  CHECK(sse(pav_chain(vec({2, 1}), vec({3, 1})), vec({1.75, 1.75})) < 1e-24);
  CHECK_THROWS_AS(pav_chain(vec({2, 1}), vec({1, 0})), DataError);
}

TEST_CASE("isotonic regression matches the max-min oracle on random partial orders") {
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> noise(0.0, 0.4);
  for (int rep = 0; rep < 200; ++rep) {
    const int n = 2 + rep % 9;
    const int d = 1 + rep % 3;
    Matrix x = testing::uniform_matrix(n, d, rng);
    if (rep % 7 == 0) x = (x * 2.0).array().floor() / 2.0;
    Vector v(n);
    for (int i = 0; i < n; ++i) v(i) = x.row(i).mean() + noise(rng);
    Vector got = isotonic_regression(v, comparable_pairs(x));
    Vector want = oracle::isotonic_minmax(v, x);
    CHECK(std::abs(sse(got, v) - sse(want, v)) < 1e-8);
    CHECK((got - want).cwiseAbs().maxCoeff() < 1e-8);
  }
}

TEST_CASE("isotonic projection properties") {
  std::mt19937_64 rng(55);
  for (int rep = 0; rep < 40; ++rep) {
    Matrix x = testing::uniform_matrix(40, 2, rng);
    Vector v = testing::uniform_matrix(40, 1, rng).col(0);
    PartialOrder o = comparable_pairs(x);
    Vector g = isotonic_project(v, o);
    CHECK(count_violations(g, o, 1e-10) == 0);
    for (Eigen::Index i = 0; i < 40; ++i)
      for (Eigen::Index j = 0; j < 40; ++j)
        if (oracle::below(x, i, j)) CHECK(g(i) <= g(j) + 1e-10);
    CHECK((isotonic_project(g, o) - g).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(g.minCoeff() >= 0.0);
    CHECK(g.maxCoeff() <= 1.0);
  }
}

TEST_CASE("pooled blocks keep their mean and pav agrees with the general solver") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.1, 2.0);
  for (int rep = 0; rep < 50; ++rep) {
    const int n = 1 + rep;
    Vector v = testing::uniform_matrix(n, 1, rng).col(0);
    Vector w(n);
    for (int i = 0; i < n; ++i) w(i) = u(rng);
    Vector pav = pav_chain(v, w);
    Vector gen = isotonic_regression(v, chain_order(n), w);
    CHECK((pav - gen).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((pav_chain(v, Vector::Ones(n)) - isotonic_project(v, chain_order(n))).cwiseAbs().maxCoeff() < 1e-10);
    int start = 0;
    while (start < n) {
      int end = start;
      while (end + 1 < n && std::abs(pav(end + 1) - pav(start)) < 1e-12) ++end;
      double wv = 0.0, ws = 0.0;
      for (int i = start; i <= end; ++i) {
        wv += w(i) * v(i);
        ws += w(i);
      }
      CHECK(std::abs(wv / ws - pav(start)) < 1e-12);
      start = end + 1;
    }
  }
}
