#pragma once

#include <vector>

#include "falris/dataset.hpp"

namespace falris {

struct FaOptions {
  double uniqueness_floor = 0.005;
  int max_iterations = 500;
  double tolerance = 1e-8;  // on the per-step decrease of the ML discrepancy
  bool rotate = true;       // varimax
};

struct FactorModel {
  Matrix loadings;     // p x p0
  Vector uniquenesses;  // p
  Matrix score_weights;  // p x p0, R^{-1} * loadings
  int p0 = 0;

  // Fit diagnostics.
  double discrepancy = 0.0;  // log|S| + tr(S^-1 R) - log|R| - p at the returned fit
  int iterations = 0;
  std::vector<double> discrepancy_trace;

  Vector communalities() const { return loadings.rowwise().squaredNorm(); }
};

// Pearson correlation matrix of the columns.
Matrix correlation_matrix(const Matrix& x);

// True when a p0-factor model on p variables has non-negative degrees of freedom.
bool identifiable(Eigen::Index p, int p0);
int max_identifiable_factors(Eigen::Index p);

// log|S| + tr(S^-1 R) - log|R| - p with S = L L' + diag(psi).
double ml_discrepancy(const Matrix& corr, const Matrix& lambda, const Vector& psi);

// Maximum-likelihood factor analysis of a correlation matrix. Minimizes the
// discrepancy profiled over the loadings, with uniquenesses in [floor, 1].
FactorModel fit_fa_correlation(const Matrix& corr, int p0, const FaOptions& opt = {});
FactorModel fit_fa(const Matrix& standardized, int p0, const FaOptions& opt = {});

// Kaiser-normalized varimax; returns the rotated loadings.
Matrix varimax(const Matrix& loadings, double eps = 1e-10, int max_iterations = 1000);

struct FactorSelection {
  int p0 = 0;
  bool all_rejected = false;  // no tested p0 passed; p0 is the identifiability cap
  std::vector<double> statistics;
  std::vector<double> p_values;
};

// Bartlett-corrected likelihood-ratio statistic and its chi-square p-value.
struct LrTest {
  double statistic;
  double dof;
  double p_value;
};
LrTest likelihood_ratio_test(const FactorModel& model, Eigen::Index n_obs, Eigen::Index p);

// Smallest p0 whose goodness-of-fit test is not rejected at level alpha.
FactorSelection select_num_factors(const Matrix& standardized, double alpha, const FaOptions& opt = {});

Matrix scores(const FactorModel& model, const Matrix& standardized);

// Eigenvalues of the sample correlation matrix, descending.
Vector eigen_scree(const Matrix& standardized);

}  // namespace falris
