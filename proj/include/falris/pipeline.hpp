#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "falris/dataset.hpp"
#include "falris/error.hpp"
#include "falris/factor_analysis.hpp"
#include "falris/local_logistic.hpp"

namespace falris {

struct PipelineOptions {
  int fixed_factors = 0;             // 0 selects p0 by the likelihood-ratio sequence
  std::vector<double> bandwidth_grid;  // empty uses default_bandwidth_grid
  int grid_size = 20;
  FaOptions fa;
  LocalLogitOptions local;
};

// Factor selection failed; carries the scree of the training correlation.
class FactorSelectionError : public NumericalError {
 public:
  FactorSelectionError(const std::string& what, Vector scree) : NumericalError(what), scree(std::move(scree)) {}
  Vector scree;
};

struct FittedPipeline {
  Scaler scaler;
  FactorModel factor_model;
  double bandwidth = 0.0;
  Matrix train_scores;  // n1 x p0
  Labels train_labels;
  Matrix train_states;  // kept for the monotonicity audit
  double threshold = 0.0;
  Vector train_predictions;  // isotonized
  Vector train_raw;          // local-logistic estimates before isotonization

  LocalLogitOptions local;
  std::uint64_t seed = 0;
  double alpha = 0.05;
  bool factors_all_rejected = false;
  std::vector<double> bandwidth_grid;
  std::vector<double> bandwidth_scores;
};

FittedPipeline fit_pipeline(const DataSet& train, double alpha, std::uint64_t seed,
                            const PipelineOptions& opt = {});

struct PipelinePrediction {
  Vector reliability;             // isotonized, in [0,1]
  Vector raw;                     // per-point local estimates
  std::vector<bool> used_fallback;  // empty neighborhood, global fit used
};

PipelinePrediction predict_detailed(const FittedPipeline& pipeline, const Matrix& x_new);
Vector predict(const FittedPipeline& pipeline, const Matrix& x_new);
Labels classify(const FittedPipeline& pipeline, const Vector& reliabilities);

// Pairs (i, j) of rows with x_i <= x_j componentwise and g_i > g_j + tol,
// counted by direct enumeration.
long monotonicity_violations(const Matrix& x, const Vector& g, double tol = 1e-12);

void save_pipeline(std::ostream& out, const FittedPipeline& pipeline);
void save_pipeline(const std::string& path, const FittedPipeline& pipeline);
FittedPipeline load_pipeline(std::istream& in);
FittedPipeline load_pipeline(const std::string& path);

}  // namespace falris
