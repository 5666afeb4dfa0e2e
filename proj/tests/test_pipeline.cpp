#include <sstream>

#include "doctest.h"
#include "falris/error.hpp"
#include "falris/metrics.hpp"
#include "falris/pipeline.hpp"
#include "falris/structure.hpp"

using namespace falris;

namespace {

DataSet simulated(int system, Eigen::Index n, std::uint64_t seed) {
  SimConfig c;
  c.n = n;
  c.seed = seed;
  return simulate_dataset(system, c);
}

}  // namespace

TEST_CASE("fit on a System 1 training set") {
  DataSet train = simulated(1, 100, 1);
  FittedPipeline pl = fit_pipeline(train, 0.05, 1);
  CHECK(pl.bandwidth > 0.0);
  CHECK(pl.threshold >= 0.0);
  CHECK(pl.threshold <= 1.0);
  CHECK(pl.train_scores.rows() == 100);
  CHECK(pl.train_scores.cols() == pl.factor_model.p0);
  CHECK(pl.bandwidth_grid.size() == 20);
  CHECK(monotonicity_violations(train.states(), pl.train_predictions) == 0);
  CHECK(pl.train_predictions.minCoeff() >= 0.0);
  CHECK(pl.train_predictions.maxCoeff() <= 1.0);

  FittedPipeline again = fit_pipeline(train, 0.05, 1);
  CHECK(again.threshold == pl.threshold);
  CHECK(again.bandwidth == pl.bandwidth);
  CHECK(again.train_predictions == pl.train_predictions);
}

TEST_CASE("selected factor count and train AUC across seeds") {
  int three = 0, auc_ok = 0;
  const int seeds = 30;
  for (int s = 0; s < seeds; ++s) {
    DataSet train = simulated(1, 100, 1000 + static_cast<std::uint64_t>(s));
    FittedPipeline pl = fit_pipeline(train, 0.05, static_cast<std::uint64_t>(s));
    three += pl.factor_model.p0 == 3;
    auc_ok += auc_estimate(pl.train_predictions, train.labels()) >= 0.5;
    CHECK(monotonicity_violations(train.states(), pl.train_predictions) == 0);
  }
  CHECK(three > seeds / 2);
  CHECK(auc_ok >= seeds * 95 / 100);
}

TEST_CASE("degenerate labels") {
  DataSet train = simulated(1, 100, 2);
  DataSet ones = make_dataset(train.states(), Labels(100, 1));
  CHECK_THROWS_WITH_AS(fit_pipeline(ones, 0.05, 1), doctest::Contains("degenerate labels"), DataError);
}

TEST_CASE("prediction contracts") {
  DataSet train = simulated(2, 100, 3);
  FittedPipeline pl = fit_pipeline(train, 0.05, 3);
  Vector self = predict(pl, train.states());
  CHECK((self - pl.train_predictions).cwiseAbs().maxCoeff() < 1e-10);

  Eigen::Index dense = 0;
  double best = 0.0;
  for (Eigen::Index i = 0; i < 100; ++i) {
    double total = kernel_weights(pl.train_scores, pl.train_scores.row(i).transpose(), pl.bandwidth).sum();
    if (total > best) best = total, dense = i;
  }
  Vector one = predict(pl, train.states().row(dense));
  CHECK(std::abs(one(0) - pl.train_predictions(dense)) < 0.05);

  DataSet test = simulated(2, 60, 4);
  PipelinePrediction pred = predict_detailed(pl, test.states());
  CHECK(monotonicity_violations(test.states(), pred.reliability) == 0);
  CHECK(pred.reliability.minCoeff() >= 0.0);
  CHECK(pred.reliability.maxCoeff() <= 1.0);
  for (bool f : pred.used_fallback) CHECK_FALSE(f);

  Matrix pair(2, 10);
  pair.row(0) = test.states().row(0);
  pair.row(1) = (test.states().row(0).array() + 0.1).min(1.0).matrix();
  Vector pv = predict(pl, pair);
  CHECK(pv(0) <= pv(1));
  CHECK_THROWS_AS(predict(pl, Matrix::Zero(2, 9)), DataError);
}

TEST_CASE("classification threshold") {
  FittedPipeline pl;
  pl.threshold = 0.4;
  Vector r(3);
  r << 0.39, 0.4, 0.8;
  CHECK(classify(pl, r) == Labels{0, 1, 1});
}

TEST_CASE("hard window falls back to a global fit for isolated points") {
  DataSet train = simulated(1, 100, 5);
  PipelineOptions opt;
  opt.local.kernel = KernelKind::Window;
  FittedPipeline pl = fit_pipeline(train, 0.05, 5, opt);
  Matrix far = Matrix::Ones(1, 9);
  far(0, 0) = 0.0;
  PipelinePrediction pred = predict_detailed(pl, far);
  CHECK(pred.reliability.size() == 1);
  CHECK(pred.used_fallback.size() == 1);
  CHECK(pred.reliability(0) >= 0.0);
  CHECK(pred.reliability(0) <= 1.0);
}

TEST_CASE("pipeline JSON round trip") {
  DataSet train = simulated(1, 100, 6);
  FittedPipeline pl = fit_pipeline(train, 0.05, 6);
  std::stringstream io;
  save_pipeline(io, pl);
  FittedPipeline back = load_pipeline(io);
  CHECK(back.threshold == pl.threshold);
  CHECK(back.bandwidth == pl.bandwidth);
  CHECK(back.factor_model.score_weights == pl.factor_model.score_weights);
  DataSet probe = simulated(1, 30, 7);
  CHECK(predict(back, probe.states()) == predict(pl, probe.states()));
  std::stringstream bad("{\"format\": \"something-else\"}");
  CHECK_THROWS_AS(load_pipeline(bad), DataError);
  std::stringstream junk("not json");
  CHECK_THROWS_AS(load_pipeline(junk), DataError);
}

TEST_CASE("monotonicity audit counts direct violations") {
  Matrix x(3, 2);
  x << 0.1, 0.1, 0.5, 0.5, 0.9, 0.9;
  Vector g(3);
  g << 0.2, 0.6, 0.4;
  CHECK(monotonicity_violations(x, g) == 1);
  g << 0.7, 0.6, 0.4;
  CHECK(monotonicity_violations(x, g) == 3);
}
