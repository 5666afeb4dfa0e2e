#include "falris/study.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <mutex>
#include <thread>

#include "falris/forest.hpp"
#include "falris/knn.hpp"
#include "falris/random.hpp"
#include "json.hpp"

namespace falris {

const std::vector<Method>& all_methods() {
  static const std::vector<Method> m{Method::FaLrIs, Method::Ann, Method::Knn, Method::Rf};
  return m;
}

std::string method_name(Method m) {
  switch (m) {
    case Method::FaLrIs: return "fa-lr-is";
    case Method::Ann: return "ann";
    case Method::Knn: return "knn";
    case Method::Rf: return "rf";
  }
  return "?";
}

Method parse_method(const std::string& name) {
  for (Method m : all_methods())
    if (method_name(m) == name) return m;
  throw std::invalid_argument("unknown method '" + name + "' (expected fa-lr-is, ann, knn or rf)");
}

void apply_config(const Config& cfg, MethodSettings& s) {
  s.knn_k = cfg.get_int("knn.k", s.knn_k);
  s.knn_q = cfg.get_double("knn.q", s.knn_q);
  s.rf_trees = cfg.get_int("rf.trees", s.rf_trees);
  s.ann.epochs = cfg.get_int("ann.epochs", s.ann.epochs);
  s.ann.batch = cfg.get_int("ann.batch", s.ann.batch);
  s.ann.learning_rate = cfg.get_double("ann.lr", s.ann.learning_rate);
  s.alpha = cfg.get_double("fa.alpha", s.alpha);
  s.falris.fixed_factors = cfg.get_int("fa.factors", s.falris.fixed_factors);
  if (cfg.has("loclogit.grid")) s.falris.bandwidth_grid = cfg.get_doubles("loclogit.grid");
  std::string kernel = cfg.get_string("loclogit.kernel", "");
  if (kernel == "window") s.falris.local.kernel = KernelKind::Window;
  else if (kernel == "gaussian") s.falris.local.kernel = KernelKind::Gaussian;
  else if (!kernel.empty()) throw std::invalid_argument("loclogit.kernel must be gaussian or window");
  s.falris.local.ridge = cfg.get_double("loclogit.ridge", s.falris.local.ridge);
}

void apply_config(const Config& cfg, StudyConfig& st) {
  static const std::vector<std::string> known{
      "knn.k",          "knn.q",           "rf.trees",       "ann.epochs",         "ann.batch",   "ann.lr",
      "fa.alpha",       "fa.factors",      "loclogit.grid",  "loclogit.kernel",    "loclogit.ridge",
      "study.systems",  "study.replications", "study.n",     "study.methods",      "study.seed",  "study.threads",
      "split.fraction", "sim.rho",         "sim.sigma",      "sim.y0"};
  for (const auto& [k, v] : cfg.values())
    if (std::find(known.begin(), known.end(), k) == known.end())
      throw std::invalid_argument("unknown config key '" + k + "'");
  apply_config(cfg, st.settings);
  if (cfg.has("study.systems")) {
    st.systems.clear();
    for (double v : cfg.get_doubles("study.systems")) st.systems.push_back(static_cast<int>(v));
  }
  st.replications = cfg.get_int("study.replications", st.replications);
  st.sim.n = cfg.get_int("study.n", static_cast<int>(st.sim.n));
  if (cfg.has("study.methods")) {
    st.methods.clear();
    for (const auto& m : cfg.get_strings("study.methods")) st.methods.push_back(parse_method(m));
  }
  if (cfg.has("study.seed")) st.seed = static_cast<std::uint64_t>(cfg.get_double("study.seed", 0.0));
  st.threads = cfg.get_int("study.threads", st.threads);
  st.train_fraction = cfg.get_double("split.fraction", st.train_fraction);
  st.sim.rho = cfg.get_double("sim.rho", st.sim.rho);
  st.sim.sigma = cfg.get_double("sim.sigma", st.sim.sigma);
  st.sim.y0 = cfg.get_double("sim.y0", st.sim.y0);
}

Replication make_replication(const StudyConfig& cfg, int system, int replication) {
  SimConfig sim = cfg.sim;
  const auto s = static_cast<std::uint64_t>(system), r = static_cast<std::uint64_t>(replication);
  sim.seed = derive_seed(cfg.seed, {s, r, 1});
  DataSet data = simulate_dataset(system, sim);
  auto [train, test] = split_train_test(data, cfg.train_fraction, derive_seed(cfg.seed, {s, r, 2}));
  return Replication{std::move(train), std::move(test)};
}

std::uint64_t method_seed(std::uint64_t root, int system, int replication, Method method) {
  return derive_seed(root, {static_cast<std::uint64_t>(system), static_cast<std::uint64_t>(replication), 3,
                            static_cast<std::uint64_t>(method)});
}

RunRecord evaluate_method(Method method, const Replication& rep, const MethodSettings& s, std::uint64_t seed) {
  RunRecord rec;
  rec.method = method;
  rec.train_hash = dataset_hash(rep.train);
  rec.test_hash = dataset_hash(rep.test);
  const Matrix& xt = rep.test.states();
  try {
    Vector score;
    Labels predicted;
    switch (method) {
      case Method::FaLrIs: {
        FittedPipeline pl = fit_pipeline(rep.train, s.alpha, seed, s.falris);
        score = predict(pl, xt);
        predicted = classify(pl, score);
        rec.factors = pl.factor_model.p0;
        rec.bandwidth = pl.bandwidth;
        rec.train_violations = monotonicity_violations(rep.train.states(), pl.train_predictions);
        rec.test_violations = monotonicity_violations(xt, score);
        break;
      }
      case Method::Ann:
        score = mlp_forward(mlp_train(rep.train, s.ann, seed), xt);
        break;
      case Method::Knn:
        score = knn_predict_proba(knn_fit(rep.train, s.knn_k, s.knn_q), xt);
        break;
      case Method::Rf:
        score = rf_predict_proba(rf_fit(rep.train, s.rf_trees, seed), xt);
        break;
    }
    if (predicted.empty())
      for (Eigen::Index i = 0; i < score.size(); ++i) predicted.push_back(score(i) >= 0.5 ? 1 : 0);
    rec.metrics = classification_metrics(confusion(rep.test.labels(), predicted));
    if (has_both_classes(rep.test.labels())) rec.metrics.auc = auc_estimate(score, rep.test.labels());
    if (rep.test.true_reliability()) rec.metrics.mse = mse_estimate(score, *rep.test.true_reliability());
  } catch (const std::exception& e) {
    rec.failed = true;
    rec.error = e.what();
  }
  return rec;
}

std::vector<Aggregate> aggregate_runs(const std::vector<RunRecord>& runs, const std::vector<int>& systems,
                                      const std::vector<Method>& methods) {
  std::vector<Aggregate> out;
  for (int sys : systems)
    for (Method m : methods)
      for (const auto& name : MetricsReport::names()) {
        Aggregate a;
        a.system = sys;
        a.method = m;
        a.metric = name;
        std::vector<double> v;
        for (const auto& r : runs) {
          if (r.system != sys || r.method != m) continue;
          std::optional<double> x = r.failed ? std::nullopt : r.metrics.get(name);
          if (x) v.push_back(*x);
          else ++a.skipped;
        }
        a.count = static_cast<int>(v.size());
        if (!v.empty()) {
          double mean = 0.0;
          for (double x : v) mean += x;
          mean /= static_cast<double>(v.size());
          a.mean = mean;
          if (v.size() > 1) {
            double ss = 0.0;
            for (double x : v) ss += (x - mean) * (x - mean);
            a.sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
          }
        }
        out.push_back(std::move(a));
      }
  return out;
}

const Aggregate& StudyResult::aggregate(int system, Method method, const std::string& metric) const {
  for (const auto& a : aggregates)
    if (a.system == system && a.method == method && a.metric == metric) return a;
  throw std::invalid_argument("no aggregate for system " + std::to_string(system) + ", " + method_name(method) +
                              ", " + metric);
}

std::vector<double> StudyResult::metric_vector(int system, Method method, const std::string& metric) const {
  std::vector<double> v;
  for (const auto& r : runs)
    if (r.system == system && r.method == method && !r.failed)
      if (auto x = r.metrics.get(metric)) v.push_back(*x);
  return v;
}

long StudyResult::failures() const {
  return std::count_if(runs.begin(), runs.end(), [](const RunRecord& r) { return r.failed; });
}

StudyResult run_simulation_study(const StudyConfig& cfg) {
  if (cfg.replications < 1) throw std::invalid_argument("replications must be >= 1");
  if (cfg.methods.empty()) throw std::invalid_argument("at least one method is required");
  if (cfg.systems.empty()) throw std::invalid_argument("at least one system is required");
  for (int s : cfg.systems)
    if (s < 1 || s > 4) throw std::invalid_argument("systems must be in 1..4");

  const std::size_t n_tasks = cfg.systems.size() * static_cast<std::size_t>(cfg.replications);
  const std::size_t n_methods = cfg.methods.size();
  std::vector<RunRecord> runs(n_tasks * n_methods);
  std::atomic<std::size_t> next{0};
  std::exception_ptr setup_error;
  std::mutex error_mutex;

  auto worker = [&] {
    for (std::size_t t = next++; t < n_tasks; t = next++) {
      const int sys = cfg.systems[t / static_cast<std::size_t>(cfg.replications)];
      const int rep = static_cast<int>(t % static_cast<std::size_t>(cfg.replications));
      try {
        Replication data = make_replication(cfg, sys, rep);
        for (std::size_t k = 0; k < n_methods; ++k) {
          RunRecord r = evaluate_method(cfg.methods[k], data, cfg.settings, method_seed(cfg.seed, sys, rep, cfg.methods[k]));
          r.system = sys;
          r.replication = rep;
          runs[t * n_methods + k] = std::move(r);
        }
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!setup_error) setup_error = std::current_exception();
      }
    }
  };
  unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  std::size_t n_threads = cfg.threads > 0 ? static_cast<std::size_t>(cfg.threads) : hw;
  n_threads = std::min(n_threads, n_tasks);
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t i = 0; i < n_threads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (setup_error) std::rethrow_exception(setup_error);

  StudyResult res;
  res.systems = cfg.systems;
  res.methods = cfg.methods;
  res.replications = cfg.replications;
  res.seed = cfg.seed;
  res.runs = std::move(runs);
  res.aggregates = aggregate_runs(res.runs, res.systems, res.methods);
  const long failed = res.failures();
  if (static_cast<double>(failed) > cfg.max_failure_rate * static_cast<double>(res.runs.size())) {
    std::ostringstream msg;
    msg << "study aborted: " << failed << " of " << res.runs.size() << " runs failed";
    for (const auto& r : res.runs)
      if (r.failed) {
        msg << "; first failure: system " << r.system << ", replication " << r.replication << ", "
            << method_name(r.method) << ": " << r.error;
        break;
      }
    throw StudyAborted(msg.str(), std::move(res));
  }
  return res;
}

std::vector<ComparisonRow> compare_methods(const StudyResult& result, const std::string& metric, Method a, Method b,
                                           int resamples, std::uint64_t seed, BootstrapMode mode) {
  for (Method m : {a, b})
    if (std::find(result.methods.begin(), result.methods.end(), m) == result.methods.end())
      throw std::invalid_argument("method " + method_name(m) + " is not part of the study");
  std::vector<ComparisonRow> rows;
  for (int sys : result.systems) {
    auto va = result.metric_vector(sys, a, metric);
    auto vb = result.metric_vector(sys, b, metric);
    for (const auto* v : {&va, &vb})
      if (2 * v->size() < static_cast<std::size_t>(result.replications))
        throw DataError("metric " + metric + " is undefined in more than half the replications of system " +
                        std::to_string(sys));
    rows.push_back({sys,
                    bootstrap_compare(va, vb, resamples, derive_seed(seed, {static_cast<std::uint64_t>(sys)}), mode),
                    va.size(), vb.size()});
  }
  return rows;
}

void write_comparison_csv(std::ostream& out, const std::vector<ComparisonRow>& rows, const std::string& metric,
                          Method a, Method b) {
  out << "system,metric,method_a,method_b,p_value,n_a,n_b\n";
  out.precision(17);
  for (const auto& r : rows)
    out << r.system << ',' << metric << ',' << method_name(a) << ',' << method_name(b) << ',' << r.p_value << ','
        << r.n_a << ',' << r.n_b << '\n';
}

ExportFormat parse_export_format(const std::string& s) {
  if (s == "csv") return ExportFormat::Csv;
  if (s == "json") return ExportFormat::Json;
  if (s == "tsv") return ExportFormat::Tsv;
  throw std::invalid_argument("unknown export format '" + s + "' (expected csv, json or tsv)");
}

namespace {

using nlohmann::json;

json opt_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }
std::optional<double> opt_from(const json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

json metrics_json(const MetricsReport& m) {
  json j;
  for (const auto& n : MetricsReport::names()) j[n] = opt_json(m.get(n));
  return j;
}

MetricsReport metrics_from(const json& j) {
  MetricsReport m;
  m.sensitivity = opt_from(j.at("sensitivity"));
  m.specificity = opt_from(j.at("specificity"));
  m.accuracy = opt_from(j.at("accuracy"));
  m.tpv = opt_from(j.at("tpv"));
  m.f1 = opt_from(j.at("f1"));
  m.auc = opt_from(j.at("auc"));
  m.mse = opt_from(j.at("mse"));
  return m;
}

void write_cell(std::ostream& out, const std::optional<double>& v) {
  if (v) out << *v;
  else out << "NA";
}

}  // namespace

void export_results(const StudyResult& res, ExportFormat format, std::ostream& out) {
  out.precision(17);
  if (format == ExportFormat::Json) {
    json j;
    j["format"] = "falris-study";
    j["version"] = 1;
    j["systems"] = res.systems;
    std::vector<std::string> methods;
    for (Method m : res.methods) methods.push_back(method_name(m));
    j["methods"] = methods;
    j["replications"] = res.replications;
    j["seed"] = res.seed;
    json runs = json::array();
    for (const auto& r : res.runs)
      runs.push_back({{"system", r.system},
                      {"replication", r.replication},
                      {"method", method_name(r.method)},
                      {"metrics", metrics_json(r.metrics)},
                      {"failed", r.failed},
                      {"error", r.error},
                      {"train_hash", r.train_hash},
                      {"test_hash", r.test_hash},
                      {"factors", r.factors},
                      {"bandwidth", r.bandwidth},
                      {"train_violations", r.train_violations},
                      {"test_violations", r.test_violations}});
    j["runs"] = runs;
    json aggs = json::array();
    for (const auto& a : res.aggregates)
      aggs.push_back({{"system", a.system},
                      {"method", method_name(a.method)},
                      {"metric", a.metric},
                      {"mean", opt_json(a.mean)},
                      {"sd", opt_json(a.sd)},
                      {"count", a.count},
                      {"skipped", a.skipped}});
    j["aggregates"] = aggs;
    out << j.dump(1) << '\n';
  } else if (format == ExportFormat::Csv) {
    out << "system,method";
    for (const auto& n : MetricsReport::names()) out << ',' << n << "_mean," << n << "_sd," << n << "_n";
    out << '\n';
    for (int sys : res.systems)
      for (Method m : res.methods) {
        out << sys << ',' << method_name(m);
        for (const auto& n : MetricsReport::names()) {
          const Aggregate& a = res.aggregate(sys, m, n);
          out << ',';
          write_cell(out, a.mean);
          out << ',';
          write_cell(out, a.sd);
          out << ',' << a.count;
        }
        out << '\n';
      }
  } else {
    out << "system\tmethod\treplication";
    for (const auto& n : MetricsReport::names()) out << '\t' << n;
    out << '\n';
    for (const auto& r : res.runs) {
      out << r.system << '\t' << method_name(r.method) << '\t' << r.replication;
      for (const auto& n : MetricsReport::names()) {
        out << '\t';
        write_cell(out, r.failed ? std::nullopt : r.metrics.get(n));
      }
      out << '\n';
    }
  }
  if (!out) throw std::runtime_error("failed to write study results");
}

void export_results(const StudyResult& res, ExportFormat format, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open '" + path + "' for writing");
  export_results(res, format, f);
}

StudyResult import_results_json(std::istream& in) {
  try {
    json j = json::parse(in);
    if (j.value("format", "") != "falris-study") throw DataError("not a study result file");
    StudyResult res;
    res.systems = j.at("systems").get<std::vector<int>>();
    for (const auto& m : j.at("methods")) res.methods.push_back(parse_method(m.get<std::string>()));
    res.replications = j.at("replications").get<int>();
    res.seed = j.at("seed").get<std::uint64_t>();
    for (const auto& r : j.at("runs")) {
      RunRecord rec;
      rec.system = r.at("system").get<int>();
      rec.replication = r.at("replication").get<int>();
      rec.method = parse_method(r.at("method").get<std::string>());
      rec.metrics = metrics_from(r.at("metrics"));
      rec.failed = r.at("failed").get<bool>();
      rec.error = r.at("error").get<std::string>();
      rec.train_hash = r.at("train_hash").get<std::uint64_t>();
      rec.test_hash = r.at("test_hash").get<std::uint64_t>();
      rec.factors = r.at("factors").get<int>();
      rec.bandwidth = r.at("bandwidth").get<double>();
      rec.train_violations = r.at("train_violations").get<long>();
      rec.test_violations = r.at("test_violations").get<long>();
      res.runs.push_back(std::move(rec));
    }
    for (const auto& a : j.at("aggregates")) {
      Aggregate ag;
      ag.system = a.at("system").get<int>();
      ag.method = parse_method(a.at("method").get<std::string>());
      ag.metric = a.at("metric").get<std::string>();
      ag.mean = opt_from(a.at("mean"));
      ag.sd = opt_from(a.at("sd"));
      ag.count = a.at("count").get<int>();
      ag.skipped = a.at("skipped").get<int>();
      res.aggregates.push_back(std::move(ag));
    }
    return res;
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed study result: ") + e.what());
  }
}

StudyResult import_results_json(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw DataError("cannot open '" + path + "'");
  return import_results_json(f);
}

namespace {

int eigenvalue_rule(const Vector& scree) {
  int k = 0;
  for (Eigen::Index i = 0; i < scree.size(); ++i)
    if (scree(i) > 1.0) ++k;
  return std::max(k, 1);
}

}  // namespace

RealDataResult run_real_data(const DataSet& data, const RealDataConfig& cfg) {
  if (cfg.methods.empty()) throw std::invalid_argument("at least one method is required");
  auto [train, test] = split_train_test(data, cfg.train_fraction, derive_seed(cfg.seed, {0x5ea1}));
  if (!has_both_classes(train.labels()) || !has_both_classes(test.labels()))
    throw DataError("degenerate class balance after the train/test split");
  RealDataResult res;
  res.n_train = train.n();
  res.n_test = test.n();
  const Matrix u_all = standardize_apply(standardize_fit(data.states()), data.states());
  res.correlation = correlation_matrix(u_all);
  res.scree = eigen_scree(u_all);

  MethodSettings settings = cfg.settings;
  if (settings.falris.fixed_factors <= 0) {
    const Matrix u_train = standardize_apply(standardize_fit(train.states()), train.states());
    settings.falris.fixed_factors =
        std::min(eigenvalue_rule(eigen_scree(u_train)), max_identifiable_factors(train.p()));
  }
  Replication rep{train, test};
  for (Method m : cfg.methods) {
    const std::uint64_t seed = derive_seed(cfg.seed, {0x5ea2, static_cast<std::uint64_t>(m)});
    RunRecord r = evaluate_method(m, rep, settings, seed);
    if (r.failed) {
      res.errors.emplace_back(m, r.error);
      continue;
    }
    if (m == Method::FaLrIs) {
      res.factors = r.factors;
      res.bandwidth = r.bandwidth;
    }
    res.metrics.emplace_back(m, r.metrics);
  }
  return res;
}

void write_metrics_table_csv(std::ostream& out, const RealDataResult& res) {
  out.precision(17);
  out << "metric";
  for (const auto& [m, unused] : res.metrics) out << ',' << method_name(m);
  out << '\n';
  for (const std::string name : {"sensitivity", "specificity", "accuracy", "tpv", "f1"}) {
    out << name;
    for (const auto& [m, rep] : res.metrics) {
      out << ',';
      write_cell(out, rep.get(name));
    }
    out << '\n';
  }
}

}  // namespace falris
