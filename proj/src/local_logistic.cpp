#include "falris/local_logistic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "falris/error.hpp"

namespace falris {

double logistic(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  double e = std::exp(t);
  return e / (1.0 + e);
}

namespace {

// log(1 + e^t) without overflow.
double softplus(double t) { return t > 0.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t)); }

Matrix design(const Matrix& z, const Vector& z0) {
  Matrix x(z.rows(), z.cols() + 1);
  x.col(0).setOnes();
  x.rightCols(z.cols()) = z.rowwise() - z0.transpose();
  return x;
}

double objective(const Matrix& x, const Labels& y, const Vector& w, const Vector& b, double ridge) {
  Vector eta = x * b;
  double f = 0.0;
  for (Eigen::Index i = 0; i < eta.size(); ++i)
    if (w(i) > 0.0) f -= w(i) * (y[static_cast<std::size_t>(i)] * eta(i) - softplus(eta(i)));
  return f + ridge * b.squaredNorm();
}

bool separated(const Matrix& x, const Labels& y, const Vector& w, const Vector& b, double min_weight) {
  Vector eta = x * b;
  double lo1 = std::numeric_limits<double>::infinity(), hi0 = -std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    if (w(i) < min_weight) continue;
    if (y[static_cast<std::size_t>(i)]) lo1 = std::min(lo1, eta(i));
    else hi0 = std::max(hi0, eta(i));
  }
  return lo1 > hi0;
}

}  // namespace

Vector kernel_weights(const Matrix& z, const Vector& z0, double h, KernelKind kernel) {
  if (!(h > 0.0)) throw std::invalid_argument("bandwidth must be positive");
  if (z.cols() != z0.size()) throw DataError("dimension mismatch between scores and center");
  Vector d2 = (z.rowwise() - z0.transpose()).rowwise().squaredNorm();
  Vector w(z.rows());
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    if (kernel == KernelKind::Gaussian) w(i) = std::exp(-d2(i) / (2.0 * h * h));
    else w(i) = d2(i) < h * h ? 1.0 : 0.0;
  }
  return w;
}

double penalized_objective(const Matrix& z, const Labels& y, const Vector& z0, const Vector& w, const Vector& b,
                           double ridge) {
  return objective(design(z, z0), y, w, b, ridge);
}

LocalFit fit_weighted_logistic(const Matrix& z, const Labels& y, const Vector& z0, const Vector& w,
                               const LocalLogitOptions& opt, const Vector& start) {
  const Eigen::Index n = z.rows(), k = z.cols() + 1;
  if (static_cast<Eigen::Index>(y.size()) != n || w.size() != n) throw DataError("dimension mismatch in local fit");
  if (z0.size() != z.cols()) throw DataError("dimension mismatch between scores and center");
  if (w.maxCoeff() < opt.min_weight) throw DataError("empty neighborhood: every kernel weight below threshold");

  Matrix x = design(z, z0);
  Vector yv(n);
  for (Eigen::Index i = 0; i < n; ++i) yv(i) = y[static_cast<std::size_t>(i)];
  Vector b = start.size() == k ? start : Vector::Zero(k);
  double f = objective(x, y, w, b, opt.ridge);

  LocalFit fit;
  fit.center = z0;
  for (int it = 0; it < opt.max_iterations; ++it) {
    Vector eta = x * b;
    Vector mu(n), v(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      mu(i) = logistic(eta(i));
      v(i) = w(i) * mu(i) * (1.0 - mu(i));
    }
    Vector grad = -x.transpose() * (w.cwiseProduct(yv - mu)) + 2.0 * opt.ridge * b;
    fit.gradient_norm = grad.norm();
    fit.iterations = it;
    Matrix hess = x.transpose() * v.asDiagonal() * x;
    hess.diagonal().array() += 2.0 * opt.ridge;
    Vector step = hess.ldlt().solve(-grad);
    if (fit.gradient_norm <= opt.gradient_tolerance) {
      fit.converged = true;
      // One Newton polish step; kept only if it shrinks the gradient.
      if (fit.gradient_norm > 0.0 && step.allFinite()) {
        Vector polished = b + step;
        Vector mu2 = (x * polished).unaryExpr([](double t) { return logistic(t); });
        double g2 = (-x.transpose() * (w.cwiseProduct(yv - mu2)) + 2.0 * opt.ridge * polished).norm();
        if (g2 < fit.gradient_norm) {
          b = polished;
          fit.gradient_norm = g2;
        }
      }
      break;
    }
    if (!step.allFinite()) throw NumericalError("IRLS produced a non-finite step");
    double slope = grad.dot(step);
    if (-slope < 1e-10 * std::max(1.0, std::abs(f))) {
      // Inside the quadratic-convergence region the decrease is below the
      // objective's rounding error; take the plain Newton step.
      b += step;
      f = objective(x, y, w, b, opt.ridge);
      continue;
    }
    double t = 1.0;
    Vector trial = b + step;
    double ft = objective(x, y, w, trial, opt.ridge);
    while (ft > f + 1e-4 * t * slope && t > 1e-10) {
      t *= 0.5;
      trial = b + t * step;
      ft = objective(x, y, w, trial, opt.ridge);
    }
    if (!(ft <= f)) throw NumericalError("IRLS line search failed");
    b = trial;
    f = ft;
  }
  if (!fit.converged) {
    Vector eta = x * b;
    Vector mu = eta.unaryExpr([](double t) { return logistic(t); });
    Vector grad = -x.transpose() * (w.cwiseProduct(yv - mu)) + 2.0 * opt.ridge * b;
    fit.gradient_norm = grad.norm();
    fit.iterations = opt.max_iterations;
    if (fit.gradient_norm <= opt.gradient_tolerance) fit.converged = true;
  }
  fit.coefficients = b;
  fit.separation = separated(x, y, w, b, opt.min_weight);
  if (!fit.converged && !fit.separation)
    throw NumericalError("IRLS did not converge in " + std::to_string(opt.max_iterations) + " iterations");
  return fit;
}

LocalFit fit_local_logistic(const Matrix& z, const Labels& y, const Vector& z0, double h,
                            const LocalLogitOptions& opt) {
  LocalFit fit = fit_weighted_logistic(z, y, z0, kernel_weights(z, z0, h, opt.kernel), opt);
  fit.bandwidth = h;
  return fit;
}

double loocv_score(const Matrix& z, const Labels& y, double h, const LocalLogitOptions& opt) {
  const Eigen::Index n = z.rows();
  double fitted_sq = 0.0, cross = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    Vector z0 = z.row(i).transpose();
    Vector w = kernel_weights(z, z0, h, opt.kernel);
    LocalFit full = fit_weighted_logistic(z, y, z0, w, opt);
    double r = predict_at_center(full);
    fitted_sq += r * r;
    if (y[static_cast<std::size_t>(i)]) {
      w(i) = 0.0;
      LocalFit loo = fit_weighted_logistic(z, y, z0, w, opt, full.coefficients);
      cross += predict_at_center(loo);
    }
  }
  return fitted_sq - 2.0 * cross;
}

BandwidthSearch loocv_bandwidth(const Matrix& z, const Labels& y, const std::vector<double>& grid,
                                const LocalLogitOptions& opt) {
  if (grid.empty()) throw std::invalid_argument("empty bandwidth grid");
  for (double h : grid)
    if (!(h > 0.0)) throw std::invalid_argument("bandwidth grid values must be positive");
  BandwidthSearch out;
  out.grid = grid;
  std::vector<double> failed;
  std::string last_error;
  for (double h : grid) {
    try {
      out.scores.push_back(loocv_score(z, y, h, opt));
    } catch (const std::runtime_error& e) {
      out.scores.push_back(std::numeric_limits<double>::quiet_NaN());
      failed.push_back(h);
      last_error = e.what();
    }
  }
  int best = -1;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    if (std::isnan(out.scores[g])) continue;
    if (best < 0) {
      best = static_cast<int>(g);
      continue;
    }
    double qb = out.scores[static_cast<std::size_t>(best)], qg = out.scores[g];
    double hb = grid[static_cast<std::size_t>(best)], hg = grid[g];
    if (qg < qb - 1e-12 || (std::abs(qg - qb) <= 1e-12 && hg < hb)) best = static_cast<int>(g);
  }
  if (best < 0) {
    std::ostringstream msg;
    msg << "bandwidth selection failed for every h:";
    for (double h : failed) msg << ' ' << h;
    msg << " (" << last_error << ")";
    throw NumericalError(msg.str());
  }
  out.bandwidth = grid[static_cast<std::size_t>(best)];
  return out;
}

std::vector<double> default_bandwidth_grid(const Matrix& z, int count) {
  if (count < 1) throw std::invalid_argument("grid size must be positive");
  const Eigen::Index n = z.rows();
  if (n < 2) throw DataError("bandwidth grid needs at least 2 points");
  std::vector<double> d;
  d.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) d.push_back((z.row(i) - z.row(j)).norm());
  std::sort(d.begin(), d.end());
  double pos = 0.05 * static_cast<double>(d.size() - 1);
  auto lo_i = static_cast<std::size_t>(std::floor(pos));
  std::size_t hi_i = std::min(lo_i + 1, d.size() - 1);
  double lo = d[lo_i] + (pos - static_cast<double>(lo_i)) * (d[hi_i] - d[lo_i]);
  double hi = 2.0 * d.back();
  if (!(hi > 0.0)) throw DataError("all score rows coincide; bandwidth grid undefined");
  if (!(lo > 0.0)) lo = *std::upper_bound(d.begin(), d.end(), 0.0);
  std::vector<double> grid(static_cast<std::size_t>(count));
  if (count == 1) {
    grid[0] = lo;
    return grid;
  }
  double ratio = std::log(hi / lo) / (count - 1);
  for (int g = 0; g < count; ++g) grid[static_cast<std::size_t>(g)] = lo * std::exp(ratio * g);
  grid.back() = hi;
  return grid;
}

double BackTransformed::evaluate(const Vector& x) const {
  return logistic(beta(0) + (x - center_x).dot(beta.tail(beta.size() - 1)));
}

BackTransformed back_transform(const LocalFit& fit, const Scaler& scaler, const FactorModel& model, const Vector& x0) {
  const Eigen::Index p = model.score_weights.rows();
  if (scaler.sds.size() != p || x0.size() != p || fit.coefficients.size() != model.score_weights.cols() + 1)
    throw DataError("dimension mismatch in back-transform");
  BackTransformed bt;
  bt.beta.resize(p + 1);
  bt.beta(0) = fit.coefficients(0);
  Vector slopes = model.score_weights * fit.coefficients.tail(fit.coefficients.size() - 1);
  bt.beta.tail(p) = slopes.cwiseQuotient(scaler.sds);
  bt.center_x = x0;
  return bt;
}

}  // namespace falris
