// Acceptance gate: runs criteria 1-8 and prints one PASS/FAIL line each.
// Exit status is the number of failing criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "falris/factor_analysis.hpp"
#include "falris/isotonic.hpp"
#include "falris/local_logistic.hpp"
#include "falris/metrics.hpp"
#include "falris/mlp.hpp"
#include "falris/sensor_ingest.hpp"
#include "falris/structure.hpp"
#include "falris/study.hpp"
#include "oracles.hpp"

using namespace falris;

namespace {

constexpr std::uint64_t kStudySeed = 20240611;
constexpr int kReplications = 100;
constexpr int kResamples = 10000;

struct Outcome {
  int id;
  bool pass;
  std::string detail;
};

std::string fmt(double v, int digits = 4) {
  std::ostringstream s;
  s.setf(std::ios::fixed);
  s.precision(digits);
  s << v;
  return s.str();
}

double mean_of(const StudyResult& r, int sys, Method m, const std::string& metric) {
  const Aggregate& a = r.aggregate(sys, m, metric);
  return a.mean ? *a.mean : std::nan("");
}

Outcome criterion_auc_trend(const StudyResult& r) {
  bool pass = true;
  std::ostringstream d;
  for (int sys = 1; sys <= 4; ++sys) {
    double fa = mean_of(r, sys, Method::FaLrIs, "auc");
    d << "S" << sys << " fa-lr-is " << fmt(fa);
    for (Method m : {Method::Ann, Method::Knn, Method::Rf}) {
      double other = mean_of(r, sys, m, "auc");
      d << ' ' << method_name(m) << ' ' << fmt(other);
      if (!(fa > other)) pass = false;
    }
    d << "; ";
  }
  double s1 = mean_of(r, 1, Method::FaLrIs, "auc");
  bool near = std::abs(s1 - 0.8218) <= 0.07;
  d << "S1 target 0.8218 +/- 0.07: " << (near ? "within" : "outside");
  return {1, pass && near, d.str()};
}

Outcome criterion_mse(const StudyResult& r) {
  bool pass = true;
  std::ostringstream d;
  for (int sys = 1; sys <= 2; ++sys) {
    d << "S" << sys;
    for (Method m : all_methods()) {
      double v = mean_of(r, sys, m, "mse");
      d << ' ' << method_name(m) << ' ' << fmt(v);
      bool ok = (m == Method::Knn || m == Method::Rf) ? v >= 0.10 : v <= 0.06;
      if (!ok) pass = false;
    }
    d << "; ";
  }
  double s1 = mean_of(r, 1, Method::FaLrIs, "mse");
  bool near = std::abs(s1 - 0.0202) <= 0.02;
  d << "S1 target 0.0202 +/- 0.02: " << (near ? "within" : "outside");
  return {2, pass && near, d.str()};
}

Outcome criterion_accuracy(const StudyResult& r) {
  bool pass = true;
  std::ostringstream d;
  for (int sys = 3; sys <= 4; ++sys) {
    double fa = mean_of(r, sys, Method::FaLrIs, "accuracy");
    d << "S" << sys << " fa-lr-is " << fmt(fa);
    for (Method m : {Method::Ann, Method::Knn, Method::Rf}) {
      double other = mean_of(r, sys, m, "accuracy");
      d << ' ' << method_name(m) << ' ' << fmt(other);
      if (!(fa > other)) pass = false;
    }
    d << "; ";
  }
  return {3, pass, d.str()};
}

Outcome criterion_bootstrap(const StudyResult& r) {
  auto rows = compare_methods(r, "auc", Method::FaLrIs, Method::Ann, kResamples, kStudySeed);
  bool pass = rows.size() == 4;
  std::ostringstream d;
  for (const auto& row : rows) {
    d << "S" << row.system << " p=" << fmt(row.p_value) << "; ";
    if (!(row.p_value < 0.05)) pass = false;
  }
  return {4, pass, d.str()};
}

// Each check returns the worst discrepancy seen against its oracle.
double isotonic_gap(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, 0.4);
  double worst = 0.0;
  for (int rep = 0; rep < 1000; ++rep) {
    const int n = 1 + rep % 10, d = 1 + rep % 4;
    Matrix x(n, d);
    for (int i = 0; i < n; ++i)
      for (int k = 0; k < d; ++k) x(i, k) = rep % 5 == 0 ? std::floor(u(rng) * 3.0) / 3.0 : u(rng);
    Vector v(n);
    for (int i = 0; i < n; ++i) v(i) = x.row(i).mean() + noise(rng);
    Vector got = isotonic_regression(v, comparable_pairs(x));
    Vector want = oracle::isotonic_minmax(v, x);
    worst = std::max(worst, std::abs((got - v).squaredNorm() - (want - v).squaredNorm()));
  }
  return worst;
}

struct ToyScores {
  Matrix z;
  Labels y;
};

ToyScores toy_scores(int n, int d, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  ToyScores t{Matrix(n, d), Labels(static_cast<std::size_t>(n))};
  for (int i = 0; i < n; ++i) {
    double eta = 0.2;
    for (int k = 0; k < d; ++k) {
      t.z(i, k) = g(rng);
      eta += (k % 2 == 0 ? 1.1 : -0.8) * t.z(i, k);
    }
    t.y[static_cast<std::size_t>(i)] = u(rng) < 1.0 / (1.0 + std::exp(-eta)) ? 1 : 0;
  }
  return t;
}

double loocv_gap(std::mt19937_64& rng) {
  double worst = 0.0;
  for (int rep = 0; rep < 6; ++rep) {
    ToyScores t = toy_scores(12 + 3 * rep, 1 + rep % 3, rng);
    for (double h : {1.0, 2.5}) {
      double got = loocv_score(t.z, t.y, h);
      worst = std::max(worst, std::abs(got - oracle::naive_q(t.z, t.y, h, LocalLogitOptions{}.ridge)));
    }
  }
  return worst;
}

double local_fit_gap(std::mt19937_64& rng) {
  double worst = 0.0;
  for (int rep = 0; rep < 60; ++rep) {
    ToyScores t = toy_scores(30, 1 + rep % 3, rng);
    Vector z0 = t.z.row(rep % 30).transpose();
    const double h = 0.9 + 0.05 * rep;
    LocalFit f = fit_local_logistic(t.z, t.y, z0, h);
    Vector want = oracle::coordinate_newton(t.z, t.y, z0, oracle::gaussian_weights(t.z, z0, h), LocalLogitOptions{}.ridge);
    worst = std::max(worst, (f.coefficients - want).cwiseAbs().maxCoeff());
  }
  return worst;
}

struct AucGaps {
  long pairwise_mismatches = 0;
  double mann_whitney = 0.0;
};

AucGaps auc_gaps(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  AucGaps g;
  for (int rep = 0; rep < 1000; ++rep) {
    const int n = 2 + rep % 49;
    const bool ties = rep % 2 == 0;
    Vector s(n);
    Labels y(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      y[static_cast<std::size_t>(i)] = i == 0 ? 0 : (i == 1 ? 1 : u(rng) < 0.5);
      double v = u(rng) + 0.3 * y[static_cast<std::size_t>(i)];
      s(i) = ties ? std::round(v * 6.0) / 6.0 : v;
    }
    if (auc_estimate(s, y) != oracle::pairwise_auc(s, y)) ++g.pairwise_mismatches;
    if (!ties) g.mann_whitney = std::max(g.mann_whitney, std::abs(auc_estimate(s, y) - oracle::mann_whitney_auc(s, y)));
  }
  return g;
}

double mlp_gradient_gap(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    Matrix x(5, 6);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = u(rng);
    Labels y{1, 0, 1, 0, 1};
    MlpModel m = make_mlp(6, {15, 80}, seed);
    for (auto& l : m.layers) l.bias.setConstant(0.05);
    MlpGradient g = mlp_loss_gradient(m, x, y);
    const double step = 1e-5;
    auto probe = [&](double& param, double analytic) {
      double saved = param;
      param = saved + step;
      double up = mlp_loss(m, x, y);
      param = saved - step;
      double down = mlp_loss(m, x, y);
      param = saved;
      double fd = (up - down) / (2.0 * step);
      worst = std::max(worst, std::abs(fd - analytic) / std::max({std::abs(fd), std::abs(analytic), 1e-6}));
    };
    for (std::size_t l = 0; l < m.layers.size(); ++l) {
      for (Eigen::Index i = 0; i < m.layers[l].weights.size(); ++i)
        probe(m.layers[l].weights.data()[i], g.weights[l].data()[i]);
      for (Eigen::Index i = 0; i < m.layers[l].bias.size(); ++i) probe(m.layers[l].bias(i), g.biases[l](i));
    }
  }
  return worst;
}

Outcome criterion_oracles() {
  std::mt19937_64 rng(kStudySeed);
  double iso = isotonic_gap(rng);
  double q = loocv_gap(rng);
  double fit = local_fit_gap(rng);
  AucGaps auc = auc_gaps(rng);
  double grad = mlp_gradient_gap(rng);
  bool pass = iso <= 1e-8 && q <= 1e-8 && fit <= 1e-6 && auc.pairwise_mismatches == 0 && auc.mann_whitney <= 1e-12 &&
              grad <= 1e-4;
  std::ostringstream d;
  d.setf(std::ios::scientific);
  d.precision(2);
  d << "isotonic objective gap " << iso << "; Q(h) gap " << q << "; local fit gap " << fit
    << "; AUC pairwise mismatches " << auc.pairwise_mismatches << ", Mann-Whitney gap " << auc.mann_whitney
    << "; MLP gradient rel. error " << grad;
  return {5, pass, d.str()};
}

Outcome criterion_coherence(const StudyResult& r) {
  long fitted = 0, failed = 0, violations = 0;
  for (const auto& run : r.runs) {
    if (run.method != Method::FaLrIs) continue;
    if (run.failed) {
      ++failed;
      continue;
    }
    ++fitted;
    violations += run.train_violations + run.test_violations;
  }
  std::ostringstream d;
  d << fitted << " fitted pipelines, " << failed << " failed fits, " << violations << " violations";
  return {6, fitted > 0 && violations == 0, d.str()};
}

Outcome criterion_analytic() {
  SimConfig c;
  double r07 = true_reliability(0.7, c), r05 = true_reliability(0.5, c);
  Matrix corr = Matrix::Constant(6, 6, 0.81);
  corr.diagonal().setOnes();
  FactorModel m = fit_fa_correlation(corr, 1);
  double lam = (m.loadings.col(0).array() - 0.9).abs().maxCoeff();
  double psi = (m.uniquenesses.array() - 0.19).abs().maxCoeff();
  bool pass = std::abs(r07 - 0.841345) <= 1e-5 && r05 == 0.5 && lam <= 1e-3 && psi <= 1e-3;
  std::ostringstream d;
  d << "R(0.7)=" << fmt(r07, 6) << " R(0.5)=" << fmt(r05, 6) << " max|lambda-0.9|=" << lam
    << " max|psi-0.19|=" << psi;
  return {7, pass, d.str()};
}

Outcome criterion_real_data() {
  const char* env = std::getenv("FALRIS_PUMP_CSV");
  IngestOptions opt;
  std::string path;
  bool full = env && *env;
  if (full) {
    path = env;
  } else {
    path = std::string(FALRIS_TEST_DATA_DIR) + "/pump_fixture.csv";
    opt.subsample_every = 8;
  }
  std::ostringstream d;
  try {
    Ingested in = ingest_sensor_csv(path, opt);
    RealDataConfig cfg;
    cfg.seed = kStudySeed;
    RealDataResult res = run_real_data(in.data, cfg);
    bool pass = res.errors.empty();
    for (const auto& [m, e] : res.errors) d << method_name(m) << " failed: " << e << "; ";
    if (full) {
      double sens = -1.0;
      for (const auto& [m, rep] : res.metrics)
        if (m == Method::FaLrIs && rep.sensitivity) sens = *rep.sensitivity;
      pass = pass && in.data.n() == 3672 && sens >= 0.95;
      d << "pump CSV: n=" << in.data.n() << " (target 3672), fa-lr-is sensitivity " << fmt(sens);
    } else {
      long defined = 0, in_range = 0;
      for (const auto& [m, rep] : res.metrics)
        for (const char* name : {"sensitivity", "specificity", "accuracy", "tpv", "f1"})
          if (auto v = rep.get(name)) {
            ++defined;
            in_range += *v >= 0.0 && *v <= 1.0;
          }
      pass = pass && defined == 20 && in_range == 20;
      d << "bundled fixture (FALRIS_PUMP_CSV unset): n=" << in.data.n() << ", " << defined
        << "/20 metrics defined, " << in_range << " in [0,1]";
    }
    return {8, pass, d.str()};
  } catch (const std::exception& e) {
    d << "error: " << e.what();
    return {8, false, d.str()};
  }
}

}  // namespace

int main() {
  const auto start = std::chrono::steady_clock::now();
  StudyConfig cfg;
  cfg.replications = kReplications;
  cfg.seed = kStudySeed;
  cfg.sim.n = 125;
  StudyResult study;
  try {
    study = run_simulation_study(cfg);
  } catch (const StudyAborted& e) {
    std::cerr << "study aborted: " << e.what() << '\n';
    study = e.partial;
  }
  const double minutes =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count() / 60.0;
  std::cout << "simulation study: " << kReplications << " replications x 4 systems, n=125, seed " << kStudySeed
            << ", " << study.failures() << " failed runs, " << fmt(minutes, 2) << " min\n";

  std::vector<Outcome> outcomes;
  auto guarded = [&](int id, auto&& fn) {
    try {
      outcomes.push_back(fn());
    } catch (const std::exception& e) {
      outcomes.push_back({id, false, std::string("error: ") + e.what()});
    }
  };
  guarded(1, [&] { return criterion_auc_trend(study); });
  guarded(2, [&] { return criterion_mse(study); });
  guarded(3, [&] { return criterion_accuracy(study); });
  guarded(4, [&] { return criterion_bootstrap(study); });
  guarded(5, [&] { return criterion_oracles(); });
  guarded(6, [&] { return criterion_coherence(study); });
  guarded(7, [&] { return criterion_analytic(); });
  guarded(8, [&] { return criterion_real_data(); });

  int failures = 0;
  for (const auto& o : outcomes) {
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << o.id << ": " << o.detail << '\n';
    failures += !o.pass;
  }
  std::cout << (outcomes.size() - static_cast<std::size_t>(failures)) << "/" << outcomes.size()
            << " criteria passed\n";
  return failures;
}
