#include <set>
#include <sstream>

#include "doctest.h"
#include "falris/error.hpp"
#include "falris/study.hpp"

using namespace falris;

namespace {

StudyConfig small_study(int threads) {
  StudyConfig c;
  c.systems = {1, 2};
  c.replications = 3;
  c.seed = 99;
  c.threads = threads;
  c.settings.ann.epochs = 20;
  c.settings.rf_trees = 20;
  return c;
}

std::size_t count_lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

}  // namespace

TEST_CASE("every method sees the same split") {
  StudyConfig c = small_study(1);
  Replication a = make_replication(c, 1, 0), b = make_replication(c, 1, 0);
  CHECK(dataset_hash(a.train) == dataset_hash(b.train));
  CHECK(dataset_hash(a.test) == dataset_hash(b.test));
  CHECK(a.train.n() == 100);
  CHECK(a.test.n() == 25);
  CHECK(dataset_hash(make_replication(c, 1, 1).train) != dataset_hash(a.train));

  StudyResult r = run_simulation_study(c);
  for (int sys : c.systems)
    for (int rep = 0; rep < c.replications; ++rep) {
      std::set<std::uint64_t> train_hashes, test_hashes;
      for (const auto& run : r.runs)
        if (run.system == sys && run.replication == rep) {
          train_hashes.insert(run.train_hash);
          test_hashes.insert(run.test_hash);
        }
      CHECK(train_hashes.size() == 1);
      CHECK(test_hashes.size() == 1);
      CHECK(*train_hashes.begin() == dataset_hash(make_replication(c, sys, rep).train));
    }
}

TEST_CASE("study runs are deterministic, parallel equals serial") {
  StudyResult serial = run_simulation_study(small_study(1));
  StudyResult parallel = run_simulation_study(small_study(4));
  CHECK(serial == parallel);
  CHECK(serial.runs.size() == 2 * 3 * 4);
  CHECK(serial.failures() == 0);
  for (const auto& run : serial.runs) {
    CHECK(run.metrics.mse.has_value());
    CHECK(run.metrics.accuracy.has_value());
    if (run.method == Method::FaLrIs) {
      CHECK(run.train_violations == 0);
      CHECK(run.test_violations == 0);
      CHECK(run.factors >= 1);
      CHECK(run.bandwidth > 0.0);
    }
  }
  const Aggregate& agg = serial.aggregate(1, Method::FaLrIs, "auc");
  std::vector<double> v = serial.metric_vector(1, Method::FaLrIs, "auc");
  CHECK(agg.count == static_cast<int>(v.size()));
  CHECK(agg.count + agg.skipped == 3);
  double mean = 0.0;
  for (double x : v) mean += x / static_cast<double>(v.size());
  CHECK(std::abs(*agg.mean - mean) < 1e-12);
}

TEST_CASE("single replication leaves the sd undefined") {
  StudyConfig c = small_study(1);
  c.systems = {1};
  c.replications = 1;
  c.methods = {Method::Knn};
  StudyResult r = run_simulation_study(c);
  const Aggregate& agg = r.aggregate(1, Method::Knn, "accuracy");
  CHECK(agg.mean.has_value());
  CHECK_FALSE(agg.sd.has_value());
}

TEST_CASE("aggregation skips undefined values with a count") {
  RunRecord a, b, c;
  a.system = b.system = c.system = 1;
  a.method = b.method = c.method = Method::Knn;
  a.metrics.auc = 0.7;
  b.metrics.auc = 0.9;
  c.failed = true;
  std::vector<Aggregate> aggs = aggregate_runs({a, b, c}, {1}, {Method::Knn});
  for (const auto& g : aggs) {
    if (g.metric != "auc") continue;
    CHECK(g.count == 2);
    CHECK(g.skipped == 1);
    CHECK(std::abs(*g.mean - 0.8) < 1e-12);
    CHECK(std::abs(*g.sd - std::sqrt(0.02)) < 1e-12);
  }
}

TEST_CASE("export formats and JSON round trip") {
  StudyResult r = run_simulation_study(small_study(0));
  std::stringstream json;
  export_results(r, ExportFormat::Json, json);
  CHECK(import_results_json(json) == r);

  std::stringstream csv, tsv;
  export_results(r, ExportFormat::Csv, csv);
  export_results(r, ExportFormat::Tsv, tsv);
  CHECK(count_lines(csv.str()) == 1 + 2 * 4);
  CHECK(count_lines(tsv.str()) == 1 + r.runs.size());
  std::string header;
  std::getline(csv, header);
  CHECK(header.find("auc_mean") != std::string::npos);
  CHECK(header.find("auc_sd") != std::string::npos);
  CHECK(parse_export_format("tsv") == ExportFormat::Tsv);
  CHECK_THROWS_AS(parse_export_format("xml"), std::invalid_argument);
}

TEST_CASE("method comparison") {
  StudyConfig c = small_study(0);
  c.replications = 6;
  StudyResult r = run_simulation_study(c);
  auto self = compare_methods(r, "auc", Method::Knn, Method::Knn, 10000, 1);
  REQUIRE(self.size() == 2);
  for (const auto& row : self) CHECK(row.p_value > 0.95);
  std::ostringstream out;
  write_comparison_csv(out, self, "auc", Method::Knn, Method::Knn);
  CHECK(count_lines(out.str()) == 3);
  CHECK_THROWS_AS(compare_methods(r, "tpv_missing", Method::Knn, Method::Rf), std::invalid_argument);
}

TEST_CASE("method names") {
  for (Method m : all_methods()) CHECK(parse_method(method_name(m)) == m);
  CHECK(method_name(Method::FaLrIs) == "fa-lr-is");
  CHECK_THROWS_AS(parse_method("svm"), std::invalid_argument);
}

TEST_CASE("real-data run on a simulated stand-in") {
  SimConfig s;
  s.n = 200;
  s.seed = 5;
  DataSet data = simulate_dataset(2, s);
  RealDataConfig cfg;
  cfg.seed = 3;
  RealDataResult r = run_real_data(data, cfg);
  CHECK(r.errors.empty());
  CHECK(r.metrics.size() == 4);
  for (const auto& [m, rep] : r.metrics)
    for (const char* name : {"sensitivity", "specificity", "accuracy", "tpv", "f1"}) {
      auto v = rep.get(name);
      INFO(method_name(m), " ", std::string(name));
      REQUIRE(v.has_value());
      CHECK((*v >= 0.0 && *v <= 1.0));
    }
  CHECK((r.correlation - r.correlation.transpose()).cwiseAbs().maxCoeff() == 0.0);
  CHECK((r.correlation.diagonal().array() - 1.0).abs().maxCoeff() < 1e-12);
  CHECK(r.n_train == 160);
  CHECK(r.n_test == 40);
  std::ostringstream table;
  write_metrics_table_csv(table, r);
  CHECK(count_lines(table.str()) == 6);
}
