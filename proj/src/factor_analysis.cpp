#include "falris/factor_analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <boost/math/distributions/chi_squared.hpp>

#include "falris/error.hpp"

namespace falris {

Matrix correlation_matrix(const Matrix& x) {
  if (x.rows() < 2) throw DataError("correlation needs at least 2 rows");
  Matrix c = x.rowwise() - x.colwise().mean();
  Matrix cov = (c.transpose() * c) / static_cast<double>(x.rows() - 1);
  Vector d = cov.diagonal().cwiseSqrt();
  for (Eigen::Index j = 0; j < d.size(); ++j)
    if (!(d(j) > 0.0)) throw DataError("zero-variance column " + std::to_string(j + 1));
  Matrix r = d.cwiseInverse().asDiagonal() * cov * d.cwiseInverse().asDiagonal();
  Matrix sym = 0.5 * (r + r.transpose());
  sym.diagonal().setOnes();
  return sym;
}

bool identifiable(Eigen::Index p, int p0) {
  auto d = static_cast<long>(p) - p0;
  return p0 >= 1 && d * d >= static_cast<long>(p) + p0;
}

int max_identifiable_factors(Eigen::Index p) {
  int k = 0;
  while (identifiable(p, k + 1)) ++k;
  return k;
}

namespace {

// Loadings maximizing the likelihood for fixed uniquenesses.
Matrix principal_loadings(const Matrix& corr, const Vector& psi, int p0) {
  Vector s = psi.cwiseSqrt();
  Matrix scaled = s.cwiseInverse().asDiagonal() * corr * s.cwiseInverse().asDiagonal();
  Eigen::SelfAdjointEigenSolver<Matrix> es(scaled);
  if (es.info() != Eigen::Success) throw NumericalError("eigendecomposition failed");
  const Eigen::Index p = corr.rows();
  Matrix lambda(p, p0);
  for (int k = 0; k < p0; ++k) {
    Eigen::Index idx = p - 1 - k;  // eigenvalues ascending
    double theta = std::max(es.eigenvalues()(idx) - 1.0, 0.0);
    lambda.col(k) = s.asDiagonal() * es.eigenvectors().col(idx) * std::sqrt(theta);
  }
  return lambda;
}

// min over loadings of the discrepancy for fixed psi:
// sum over the p - p0 smallest eigenvalues e of Psi^-1/2 R Psi^-1/2 of e - log e - 1.
double profile_discrepancy(const Matrix& corr, const Vector& psi, int p0) {
  Vector s = psi.cwiseSqrt().cwiseInverse();
  Eigen::SelfAdjointEigenSolver<Matrix> es(s.asDiagonal() * corr * s.asDiagonal(), Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw NumericalError("eigendecomposition failed");
  double f = 0.0;
  const Eigen::Index m = corr.rows() - p0;
  for (Eigen::Index k = 0; k < m; ++k) {
    double e = es.eigenvalues()(k);
    f += e - std::log(e) - 1.0;
  }
  return f;
}

// d/dpsi_j of the profile discrepancy: (Sigma_jj - R_jj) / psi_j^2.
Vector profile_gradient(const Matrix& corr, const Vector& psi, int p0) {
  Matrix lambda = principal_loadings(corr, psi, p0);
  Vector sigma_diag = lambda.rowwise().squaredNorm() + psi;
  return (sigma_diag - corr.diagonal()).cwiseQuotient(psi.cwiseAbs2());
}

void canonicalize(Matrix& lambda) {
  const Eigen::Index k = lambda.cols();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(k));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  Vector ss = lambda.colwise().squaredNorm().transpose();
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) { return ss(a) > ss(b); });
  Matrix out(lambda.rows(), k);
  for (Eigen::Index c = 0; c < k; ++c) {
    Vector col = lambda.col(order[static_cast<std::size_t>(c)]);
    Eigen::Index arg = 0;
    col.cwiseAbs().maxCoeff(&arg);
    if (col(arg) < 0.0) col = -col;
    out.col(c) = col;
  }
  lambda = std::move(out);
}

}  // namespace

double ml_discrepancy(const Matrix& corr, const Matrix& lambda, const Vector& psi) {
  const Eigen::Index k = lambda.cols();
  Vector psi_inv = psi.cwiseInverse();
  Matrix pl = psi_inv.asDiagonal() * lambda;
  Eigen::LLT<Matrix> llt(Matrix::Identity(k, k) + lambda.transpose() * pl);
  Eigen::LLT<Matrix> llt_corr(corr);
  if (llt.info() != Eigen::Success || llt_corr.info() != Eigen::Success)
    throw NumericalError("covariance is not positive definite");
  // Woodbury for the inverse and the determinant lemma for the log-determinant.
  Matrix inv = Matrix(psi_inv.asDiagonal()) - pl * llt.solve(pl.transpose());
  double logdet = psi.array().log().sum() + 2.0 * llt.matrixLLT().diagonal().array().log().sum();
  double logdet_corr = 2.0 * llt_corr.matrixLLT().diagonal().array().log().sum();
  return logdet + inv.cwiseProduct(corr).sum() - logdet_corr - static_cast<double>(corr.rows());
}

Matrix varimax(const Matrix& loadings, double eps, int max_iterations) {
  const Eigen::Index p = loadings.rows(), k = loadings.cols();
  if (k < 2) return loadings;
  Vector sc = loadings.rowwise().norm();
  for (auto& v : sc)
    if (v <= 0.0) v = 1.0;
  Matrix x = sc.cwiseInverse().asDiagonal() * loadings;
  Matrix t = Matrix::Identity(k, k);
  double d = 0.0;
  for (int it = 0; it < max_iterations; ++it) {
    Matrix z = x * t;
    Vector col_ss = z.array().square().colwise().sum().transpose();
    Matrix b = x.transpose() *
               (z.array().cube().matrix() - z * col_ss.asDiagonal() / static_cast<double>(p));
    Eigen::JacobiSVD<Matrix> svd(b, Eigen::ComputeFullU | Eigen::ComputeFullV);
    t = svd.matrixU() * svd.matrixV().transpose();
    double dpast = d;
    d = svd.singularValues().sum();
    if (d < dpast * (1.0 + eps)) break;
  }
  return sc.asDiagonal() * (x * t);
}

FactorModel fit_fa_correlation(const Matrix& corr, int p0, const FaOptions& opt) {
  const Eigen::Index p = corr.rows();
  if (corr.cols() != p) throw DataError("correlation matrix must be square");
  if (p0 < 1) throw DataError("need at least one factor");
  if (!identifiable(p, p0))
    throw DataError("identifiability bound violated: (p - p0)^2 < p + p0 for p = " + std::to_string(p) +
                    ", p0 = " + std::to_string(p0));
  Eigen::LDLT<Matrix> ldlt(corr);
  Eigen::SelfAdjointEigenSolver<Matrix> es(corr, Eigen::EigenvaluesOnly);
  if (ldlt.info() != Eigen::Success || es.eigenvalues().minCoeff() <= 1e-10)
    throw DataError("singular correlation matrix");
  Matrix corr_inv = ldlt.solve(Matrix::Identity(p, p));

  Vector psi(p);
  for (Eigen::Index j = 0; j < p; ++j)
    psi(j) = std::clamp((1.0 - 0.5 * p0 / static_cast<double>(p)) / corr_inv(j, j), opt.uniqueness_floor, 1.0);

  // Projected Newton on the profile discrepancy over psi in [floor, 1].
  // Newton curvature comes from forward differences of the exact gradient.
  const double lo = opt.uniqueness_floor, hi = 1.0;
  auto project = [&](Vector x) { return Vector(x.cwiseMax(lo).cwiseMin(hi)); };
  FactorModel fm;
  double f = profile_discrepancy(corr, psi, p0);
  Vector g = profile_gradient(corr, psi, p0);
  fm.discrepancy_trace.push_back(f);
  bool converged = false;
  int it = 0;
  auto projected_gradient_norm = [&](const Vector& x, const Vector& gr) {
    return (project(x - gr) - x).cwiseAbs().maxCoeff();
  };
  while (it < opt.max_iterations) {
    if (projected_gradient_norm(psi, g) < 1e-10) {
      converged = true;
      break;
    }
    std::vector<Eigen::Index> free;
    for (Eigen::Index j = 0; j < p; ++j) {
      bool at_lo = psi(j) <= lo + 1e-12 && g(j) > 0.0;
      bool at_hi = psi(j) >= hi - 1e-12 && g(j) < 0.0;
      if (!at_lo && !at_hi) free.push_back(j);
    }
    const auto nf = static_cast<Eigen::Index>(free.size());
    Vector dir = Vector::Zero(p);
    if (nf > 0) {
      Matrix h(nf, nf);
      for (Eigen::Index a = 0; a < nf; ++a) {
        Vector xs = psi;
        const Eigen::Index ja = free[static_cast<std::size_t>(a)];
        double step = 1e-6 * std::max(psi(ja), 1e-3);
        if (xs(ja) + step > hi) step = -step;
        xs(ja) += step;
        Vector gs = profile_gradient(corr, xs, p0);
        for (Eigen::Index b = 0; b < nf; ++b) h(b, a) = (gs(free[static_cast<std::size_t>(b)]) - g(free[static_cast<std::size_t>(b)])) / step;
      }
      h = (0.5 * (h + h.transpose())).eval();
      Eigen::SelfAdjointEigenSolver<Matrix> es(h);
      Vector ev = es.eigenvalues();
      const double cap = std::max(ev.cwiseAbs().maxCoeff(), 1e-12) * 1e-10;
      for (auto& v : ev) v = std::max(std::abs(v), cap);
      Vector gf(nf);
      for (Eigen::Index a = 0; a < nf; ++a) gf(a) = g(free[static_cast<std::size_t>(a)]);
      Vector df = -(es.eigenvectors() * ev.cwiseInverse().asDiagonal() * es.eigenvectors().transpose() * gf);
      for (Eigen::Index a = 0; a < nf; ++a) dir(free[static_cast<std::size_t>(a)]) = df(a);
    }
    ++it;
    double t = 1.0, new_f = f;
    Vector trial = psi;
    bool accepted = false;
    for (int attempt = 0; attempt < 2 && !accepted; ++attempt) {
      if (attempt == 1) dir = -g;  // steepest descent if Newton fails
      t = 1.0;
      for (int k = 0; k < 60; ++k, t *= 0.5) {
        trial = project(psi + t * dir);
        new_f = profile_discrepancy(corr, trial, p0);
        if (std::isfinite(new_f) && new_f <= f + 1e-4 * g.dot(trial - psi)) {
          accepted = true;
          break;
        }
      }
    }
    if (!accepted) {
      // No representable decrease remains.
      converged = projected_gradient_norm(psi, g) < 1e-5;
      break;
    }
    const double change = f - new_f;
    const double pg_before = projected_gradient_norm(psi, g);
    psi = trial;
    f = new_f;
    g = profile_gradient(corr, psi, p0);
    fm.discrepancy_trace.push_back(f);
    // Short steps near the optimum come from rounding noise in F.
    if (change < opt.tolerance && (t == 1.0 || pg_before < 1e-5)) {
      converged = true;
      break;
    }
  }
  if (!converged)
    throw NumericalError("factor analysis did not converge in " + std::to_string(opt.max_iterations) +
                         " iterations (p0 = " + std::to_string(p0) + ")");
  Matrix lambda = principal_loadings(corr, psi, p0);

  // Heywood guard: communalities capped so that uniquenesses stay >= floor.
  for (Eigen::Index j = 0; j < p; ++j) {
    double h = lambda.row(j).squaredNorm();
    if (h > 1.0 - opt.uniqueness_floor) lambda.row(j) *= std::sqrt((1.0 - opt.uniqueness_floor) / h);
  }
  if (opt.rotate) lambda = varimax(lambda);
  canonicalize(lambda);

  fm.loadings = lambda;
  fm.uniquenesses = Vector::Ones(p) - lambda.rowwise().squaredNorm();
  fm.score_weights = ldlt.solve(lambda);
  fm.p0 = p0;
  fm.discrepancy = f;
  fm.iterations = it;
  return fm;
}

FactorModel fit_fa(const Matrix& standardized, int p0, const FaOptions& opt) {
  if (standardized.rows() <= standardized.cols())
    throw DataError("factor analysis needs n > p (n = " + std::to_string(standardized.rows()) +
                    ", p = " + std::to_string(standardized.cols()) + ")");
  return fit_fa_correlation(correlation_matrix(standardized), p0, opt);
}

LrTest likelihood_ratio_test(const FactorModel& model, Eigen::Index n_obs, Eigen::Index p) {
  const double pd = static_cast<double>(p), k = model.p0;
  const double dof = ((pd - k) * (pd - k) - pd - k) / 2.0;
  const double stat = (static_cast<double>(n_obs) - 1.0 - (2.0 * pd + 5.0) / 6.0 - 2.0 * k / 3.0) *
                      std::max(model.discrepancy, 0.0);
  if (dof <= 0.0) return {stat, dof, 1.0};  // saturated model
  boost::math::chi_squared_distribution<double> chi(dof);
  return {stat, dof, boost::math::cdf(boost::math::complement(chi, stat))};
}

FactorSelection select_num_factors(const Matrix& standardized, double alpha, const FaOptions& opt) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha must lie in (0,1)");
  const Eigen::Index p = standardized.cols();
  const int cap = max_identifiable_factors(p);
  if (cap < 1) throw DataError("no identifiable factor model for p = " + std::to_string(p));
  if (standardized.rows() <= p)
    throw DataError("factor analysis needs n > p (n = " + std::to_string(standardized.rows()) + ")");
  Matrix corr = correlation_matrix(standardized);
  FactorSelection sel;
  for (int k = 1; k <= cap; ++k) {
    FactorModel fm = fit_fa_correlation(corr, k, opt);
    LrTest t = likelihood_ratio_test(fm, standardized.rows(), p);
    sel.statistics.push_back(t.statistic);
    sel.p_values.push_back(t.p_value);
    if (t.p_value >= alpha) {
      sel.p0 = k;
      return sel;
    }
  }
  sel.p0 = cap;
  sel.all_rejected = true;
  return sel;
}

Matrix scores(const FactorModel& model, const Matrix& standardized) {
  if (standardized.cols() != model.score_weights.rows())
    throw DataError("dimension mismatch: " + std::to_string(standardized.cols()) + " columns, score weights expect " +
                    std::to_string(model.score_weights.rows()));
  return standardized * model.score_weights;
}

Vector eigen_scree(const Matrix& standardized) {
  Matrix corr = correlation_matrix(standardized);
  Eigen::SelfAdjointEigenSolver<Matrix> es(corr, Eigen::EigenvaluesOnly);
  Vector ev = es.eigenvalues().reverse();
  return ev;
}

}  // namespace falris
