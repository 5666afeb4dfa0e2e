#include "falris/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "falris/error.hpp"
#include "falris/random.hpp"

namespace falris {

ConfusionCounts confusion(const Labels& labels, const Labels& predictions) {
  if (labels.size() != predictions.size())
    throw DataError("dimension mismatch: " + std::to_string(labels.size()) + " labels vs " +
                    std::to_string(predictions.size()) + " predictions");
  ConfusionCounts c;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    bool y = labels[i] != 0, p = predictions[i] != 0;
    if (y && p) ++c.tp;
    else if (y) ++c.fn;
    else if (p) ++c.fp;
    else ++c.tn;
  }
  return c;
}

const std::vector<std::string>& MetricsReport::names() {
  static const std::vector<std::string> n{"sensitivity", "specificity", "accuracy", "tpv", "f1", "auc", "mse"};
  return n;
}

std::optional<double> MetricsReport::get(const std::string& name) const {
  if (name == "sensitivity") return sensitivity;
  if (name == "specificity") return specificity;
  if (name == "accuracy") return accuracy;
  if (name == "tpv") return tpv;
  if (name == "f1") return f1;
  if (name == "auc") return auc;
  if (name == "mse") return mse;
  throw std::invalid_argument("unknown metric '" + name + "'");
}

MetricsReport classification_metrics(const ConfusionCounts& c) {
  auto ratio = [](long num, long den) -> std::optional<double> {
    if (den == 0) return std::nullopt;
    return static_cast<double>(num) / static_cast<double>(den);
  };
  MetricsReport m;
  m.sensitivity = ratio(c.tp, c.tp + c.fn);
  m.specificity = ratio(c.tn, c.tn + c.fp);
  m.accuracy = ratio(c.tp + c.tn, c.total());
  m.tpv = ratio(c.tp, c.tp + c.fp);
  if (m.tpv && m.sensitivity && (*m.tpv + *m.sensitivity) > 0.0)
    m.f1 = 2.0 * *m.tpv * *m.sensitivity / (*m.tpv + *m.sensitivity);
  return m;
}

namespace {

void check_scores(const Vector& scores, const Labels& labels) {
  if (static_cast<std::size_t>(scores.size()) != labels.size())
    throw DataError("dimension mismatch between scores and labels");
  if (!has_both_classes(labels)) throw DataError("both classes are required (single-class labels)");
}

std::vector<Eigen::Index> order_by_score(const Vector& scores) {
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(scores.size()));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  std::stable_sort(idx.begin(), idx.end(), [&](Eigen::Index a, Eigen::Index b) { return scores(a) < scores(b); });
  return idx;
}

}  // namespace

double auc_estimate(const Vector& scores, const Labels& labels, TieRule ties) {
  check_scores(scores, labels);
  auto idx = order_by_score(scores);
  double failed_below = 0.0, correct = 0.0, n_failed = 0.0, n_operative = 0.0;
  for (std::size_t g = 0; g < idx.size();) {
    std::size_t e = g;
    double f = 0.0, o = 0.0;
    while (e < idx.size() && scores(idx[e]) == scores(idx[g])) {
      (labels[static_cast<std::size_t>(idx[e])] ? o : f) += 1.0;
      ++e;
    }
    correct += o * failed_below;
    if (ties == TieRule::HalfCredit) correct += 0.5 * o * f;
    failed_below += f;
    n_failed += f;
    n_operative += o;
    g = e;
  }
  return correct / (n_failed * n_operative);
}

double mse_estimate(const Vector& estimates, const Vector& truth) {
  if (estimates.size() != truth.size()) throw DataError("dimension mismatch in MSE");
  if (estimates.size() == 0) throw DataError("MSE of an empty sample");
  return (estimates - truth).squaredNorm() / static_cast<double>(estimates.size());
}

std::vector<RocPoint> roc_points(const Vector& scores, const Labels& labels) {
  check_scores(scores, labels);
  std::vector<double> distinct(scores.data(), scores.data() + scores.size());
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  std::vector<double> thresholds{std::numeric_limits<double>::infinity()};
  for (std::size_t k = distinct.size(); k-- > 1;) thresholds.push_back(0.5 * (distinct[k - 1] + distinct[k]));
  thresholds.push_back(-std::numeric_limits<double>::infinity());
  double pos = 0.0, neg = 0.0;
  for (int y : labels) (y ? pos : neg) += 1.0;
  std::vector<RocPoint> out;
  for (double t : thresholds) {
    double tp = 0.0, fp = 0.0;
    for (Eigen::Index i = 0; i < scores.size(); ++i)
      if (scores(i) >= t) (labels[static_cast<std::size_t>(i)] ? tp : fp) += 1.0;
    out.push_back({t, fp / neg, tp / pos});
  }
  return out;
}

double trapezoid_area(const std::vector<RocPoint>& roc) {
  double a = 0.0;
  for (std::size_t k = 1; k < roc.size(); ++k)
    a += (roc[k].fpr - roc[k - 1].fpr) * 0.5 * (roc[k].tpr + roc[k - 1].tpr);
  return a;
}

double youden_threshold(const Vector& scores, const Labels& labels) {
  check_scores(scores, labels);
  std::vector<double> distinct(scores.data(), scores.data() + scores.size());
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  std::vector<double> candidates{std::min(0.0, distinct.front())};
  for (std::size_t k = 1; k < distinct.size(); ++k) candidates.push_back(0.5 * (distinct[k - 1] + distinct[k]));
  double pos = 0.0, neg = 0.0;
  for (int y : labels) (y ? pos : neg) += 1.0;
  double best_t = candidates.front(), best_j = -std::numeric_limits<double>::infinity();
  for (double t : candidates) {
    double tp = 0.0, tn = 0.0;
    for (Eigen::Index i = 0; i < scores.size(); ++i) {
      bool predicted = scores(i) >= t;
      if (labels[static_cast<std::size_t>(i)]) tp += predicted;
      else tn += !predicted;
    }
    double j = tp / pos + tn / neg - 1.0;
    if (j > best_j + 1e-12) {
      best_j = j;
      best_t = t;
    }
  }
  return best_t;
}

namespace {

double mean_of(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size()); }

// Strict weak order making the resampling independent of argument order.
bool canonical_less(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) return a.size() < b.size();
  std::vector<double> sa(a), sb(b);
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  return sa < sb;
}

}  // namespace

double bootstrap_compare(const std::vector<double>& a, const std::vector<double>& b, int resamples,
                         std::uint64_t seed, BootstrapMode mode) {
  if (a.empty() || b.empty()) throw DataError("bootstrap comparison needs two non-empty samples");
  if (resamples < 1) throw std::invalid_argument("bootstrap needs at least one resample");
  const double observed = mean_of(a) - mean_of(b);
  const double abs_observed = std::abs(observed);
  std::vector<double> pool(a);
  pool.insert(pool.end(), b.begin(), b.end());
  std::sort(pool.begin(), pool.end());
  const bool swapped = canonical_less(b, a);
  const std::size_t n_first = swapped ? b.size() : a.size();
  const std::size_t n_second = swapped ? a.size() : b.size();
  std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
  long hits = 0;
  for (int r = 0; r < resamples; ++r) {
    Rng rng = make_rng(seed, {static_cast<std::uint64_t>(r)});
    double s1 = 0.0, s2 = 0.0;
    for (std::size_t k = 0; k < n_first; ++k) s1 += pool[pick(rng)];
    for (std::size_t k = 0; k < n_second; ++k) s2 += pool[pick(rng)];
    double d = s1 / static_cast<double>(n_first) - s2 / static_cast<double>(n_second);
    if (swapped) d = -d;
    if (mode == BootstrapMode::Standard ? std::abs(d) >= abs_observed : d <= abs_observed) ++hits;
  }
  return static_cast<double>(hits) / resamples;
}

BootstrapMode parse_bootstrap_mode(const std::string& s) {
  if (s == "standard") return BootstrapMode::Standard;
  if (s == "literal") return BootstrapMode::Literal;
  throw std::invalid_argument("unknown bootstrap mode '" + s + "'");
}

}  // namespace falris
