#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "falris/config.hpp"
#include "falris/dataset.hpp"
#include "falris/error.hpp"
#include "falris/metrics.hpp"
#include "falris/mlp.hpp"
#include "falris/pipeline.hpp"
#include "falris/structure.hpp"

namespace falris {

enum class Method { FaLrIs, Ann, Knn, Rf };

const std::vector<Method>& all_methods();
std::string method_name(Method m);
Method parse_method(const std::string& name);

struct MethodSettings {
  int knn_k = 20;
  double knn_q = 2.0;
  int rf_trees = 100;
  MlpOptions ann;
  double alpha = 0.05;
  PipelineOptions falris;
};

struct StudyConfig {
  std::vector<int> systems{1, 2, 3, 4};
  int replications = 100;
  std::vector<Method> methods = all_methods();
  std::uint64_t seed = 0;
  SimConfig sim;  // sim.seed is replaced per replication
  double train_fraction = 0.8;
  MethodSettings settings;
  int threads = 0;  // 0 uses every hardware thread
  double max_failure_rate = 0.10;
};

// Keys: knn.k knn.q rf.trees ann.epochs ann.batch ann.lr fa.alpha fa.factors
// loclogit.grid loclogit.kernel loclogit.ridge.
void apply_config(const Config& cfg, MethodSettings& settings);
// Adds study.systems study.replications study.n study.methods study.seed
// study.threads split.fraction sim.rho sim.sigma sim.y0.
void apply_config(const Config& cfg, StudyConfig& study);

struct RunRecord {
  int system = 0;
  int replication = 0;
  Method method = Method::FaLrIs;
  MetricsReport metrics;
  bool failed = false;
  std::string error;
  std::uint64_t train_hash = 0, test_hash = 0;
  // FA-LR-IS diagnostics; zero for the other methods.
  int factors = 0;
  double bandwidth = 0.0;
  long train_violations = 0, test_violations = 0;

  friend bool operator==(const RunRecord&, const RunRecord&) = default;
};

struct Aggregate {
  int system = 0;
  Method method = Method::FaLrIs;
  std::string metric;
  std::optional<double> mean, sd;  // sd needs two defined values
  int count = 0;    // replications with the metric defined
  int skipped = 0;  // failed runs plus undefined values

  friend bool operator==(const Aggregate&, const Aggregate&) = default;
};

struct StudyResult {
  std::vector<int> systems;
  std::vector<Method> methods;
  int replications = 0;
  std::uint64_t seed = 0;
  std::vector<RunRecord> runs;  // ordered by (system, replication, method)
  std::vector<Aggregate> aggregates;

  const Aggregate& aggregate(int system, Method method, const std::string& metric) const;
  // Defined values in replication order.
  std::vector<double> metric_vector(int system, Method method, const std::string& metric) const;
  long failures() const;

  friend bool operator==(const StudyResult&, const StudyResult&) = default;
};

// Thrown when failed runs exceed the configured share; carries every run.
class StudyAborted : public NumericalError {
 public:
  StudyAborted(const std::string& what, StudyResult partial) : NumericalError(what), partial(std::move(partial)) {}
  StudyResult partial;
};

struct Replication {
  DataSet train;
  DataSet test;
};

Replication make_replication(const StudyConfig& cfg, int system, int replication);
RunRecord evaluate_method(Method method, const Replication& rep, const MethodSettings& settings, std::uint64_t seed);
std::uint64_t method_seed(std::uint64_t root, int system, int replication, Method method);

std::vector<Aggregate> aggregate_runs(const std::vector<RunRecord>& runs, const std::vector<int>& systems,
                                      const std::vector<Method>& methods);

StudyResult run_simulation_study(const StudyConfig& cfg);

struct ComparisonRow {
  int system = 0;
  double p_value = 0.0;
  std::size_t n_a = 0, n_b = 0;
};

std::vector<ComparisonRow> compare_methods(const StudyResult& result, const std::string& metric, Method a, Method b,
                                           int resamples = 10000, std::uint64_t seed = 0,
                                           BootstrapMode mode = BootstrapMode::Standard);
void write_comparison_csv(std::ostream& out, const std::vector<ComparisonRow>& rows, const std::string& metric,
                          Method a, Method b);

enum class ExportFormat { Csv, Json, Tsv };
ExportFormat parse_export_format(const std::string& s);

// Csv: one row per (system, method) with mean and sd columns per metric.
// Json: the full result. Tsv: one row per run for boxplots.
void export_results(const StudyResult& result, ExportFormat format, std::ostream& out);
void export_results(const StudyResult& result, ExportFormat format, const std::string& path);
StudyResult import_results_json(std::istream& in);
StudyResult import_results_json(const std::string& path);

struct RealDataConfig {
  std::vector<Method> methods = all_methods();
  std::uint64_t seed = 0;
  double train_fraction = 0.8;
  MethodSettings settings;  // falris.fixed_factors = 0 uses the eigenvalue-above-one count
};

struct RealDataResult {
  std::vector<std::pair<Method, MetricsReport>> metrics;
  std::vector<std::pair<Method, std::string>> errors;
  Matrix correlation;
  Vector scree;
  int factors = 0;
  double bandwidth = 0.0;
  Eigen::Index n_train = 0, n_test = 0;
};

RealDataResult run_real_data(const DataSet& data, const RealDataConfig& cfg);
// Metric rows (sensitivity, specificity, accuracy, tpv, f1) by method columns.
void write_metrics_table_csv(std::ostream& out, const RealDataResult& result);

}  // namespace falris
