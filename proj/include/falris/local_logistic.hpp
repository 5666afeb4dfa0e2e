#pragma once

#include <vector>

#include "falris/dataset.hpp"
#include "falris/factor_analysis.hpp"

namespace falris {

enum class KernelKind {
  Gaussian,  // exp(-|z - z0|^2 / (2 h^2))
  Window,    // indicator |z - z0| < h
};

struct LocalLogitOptions {
  KernelKind kernel = KernelKind::Gaussian;
  double ridge = 1e-6;
  int max_iterations = 100;
  double gradient_tolerance = 1e-8;
  double min_weight = 1e-12;
};

double logistic(double t);

Vector kernel_weights(const Matrix& z, const Vector& z0, double h, KernelKind kernel = KernelKind::Gaussian);

struct LocalFit {
  Vector center;
  Vector coefficients;  // (b0, b1..b_p0) on covariates (1, z - z0)
  double bandwidth = 0.0;
  bool converged = false;
  bool separation = false;
  int iterations = 0;
  double gradient_norm = 0.0;
};

// Penalized negative log-likelihood
//   -sum_i w_i [y_i eta_i - log(1 + e^eta_i)] + ridge * |b|^2,
// eta_i = (1, z_i - z0) . b
double penalized_objective(const Matrix& z, const Labels& y, const Vector& z0, const Vector& w, const Vector& b,
                           double ridge);

// Newton/IRLS on an explicit weight vector. `start` may be empty.
LocalFit fit_weighted_logistic(const Matrix& z, const Labels& y, const Vector& z0, const Vector& w,
                               const LocalLogitOptions& opt = {}, const Vector& start = Vector());

LocalFit fit_local_logistic(const Matrix& z, const Labels& y, const Vector& z0, double h,
                            const LocalLogitOptions& opt = {});

inline double predict_at_center(const LocalFit& fit) { return logistic(fit.coefficients(0)); }

// Q(h) = sum_i R_h(z_i)^2 - 2 sum_i y_i R_h^{(-i)}(z_i). Throws on any failed fit.
double loocv_score(const Matrix& z, const Labels& y, double h, const LocalLogitOptions& opt = {});

struct BandwidthSearch {
  double bandwidth = 0.0;
  std::vector<double> grid;
  std::vector<double> scores;  // NaN where some fit failed
};

// argmin of Q over the grid; ties (within 1e-12) go to the smaller bandwidth.
BandwidthSearch loocv_bandwidth(const Matrix& z, const Labels& y, const std::vector<double>& grid,
                                const LocalLogitOptions& opt = {});

// `count` values spaced geometrically from the 5th percentile to twice the
// maximum of the pairwise distances between rows.
std::vector<double> default_bandwidth_grid(const Matrix& z, int count = 20);

struct BackTransformed {
  Vector beta;  // (beta0, beta1..beta_p) in component space
  Vector center_x;

  double evaluate(const Vector& x) const;
};

BackTransformed back_transform(const LocalFit& fit, const Scaler& scaler, const FactorModel& model, const Vector& x0);

}  // namespace falris
