#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "falris/dataset.hpp"

namespace falris {

// Positive = operative system (label 1).
struct ConfusionCounts {
  long tp = 0, fp = 0, tn = 0, fn = 0;
  long total() const { return tp + fp + tn + fn; }
};

ConfusionCounts confusion(const Labels& labels, const Labels& predictions);

// Undefined metrics (zero denominators, single-class AUC) stay empty.
struct MetricsReport {
  std::optional<double> sensitivity, specificity, accuracy, tpv, f1, auc, mse;

  std::optional<double> get(const std::string& name) const;
  static const std::vector<std::string>& names();

  friend bool operator==(const MetricsReport&, const MetricsReport&) = default;
};

MetricsReport classification_metrics(const ConfusionCounts& c);

enum class TieRule {
  Strict,      // ties count 0
  HalfCredit,  // ties count 1/2
};

// Fraction of (failed, operative) pairs ranked correctly. Throws DataError
// when only one class is present.
double auc_estimate(const Vector& scores, const Labels& labels, TieRule ties = TieRule::Strict);

double mse_estimate(const Vector& estimates, const Vector& truth);

struct RocPoint {
  double threshold;  // classify 1 iff score >= threshold
  double fpr;        // 1 - specificity
  double tpr;        // sensitivity
};

// Thresholds at +inf, midpoints of consecutive distinct scores, and -inf.
std::vector<RocPoint> roc_points(const Vector& scores, const Labels& labels);
double trapezoid_area(const std::vector<RocPoint>& roc);

// Cutoff maximizing sensitivity + specificity - 1 over {0} and the midpoints
// of consecutive distinct scores; ties go to the smaller cutoff.
double youden_threshold(const Vector& scores, const Labels& labels);

enum class BootstrapMode {
  Standard,      // share of |d*| >= |d|
  Literal,       // share of d* <= |d|
};

// Pooled-resampling test for a difference of means.
double bootstrap_compare(const std::vector<double>& a, const std::vector<double>& b, int resamples,
                         std::uint64_t seed, BootstrapMode mode = BootstrapMode::Standard);

BootstrapMode parse_bootstrap_mode(const std::string& s);

}  // namespace falris
