#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include "CLI11.hpp"
#include "falris/config.hpp"
#include "falris/dataset.hpp"
#include "falris/error.hpp"
#include "falris/factor_analysis.hpp"
#include "falris/pipeline.hpp"
#include "falris/sensor_ingest.hpp"
#include "falris/structure.hpp"
#include "falris/study.hpp"

namespace fs = std::filesystem;
using namespace falris;

namespace {

// "-" means stdout.
class Output {
 public:
  explicit Output(const std::string& path) {
    if (path.empty() || path == "-") return;
    file_ = std::make_unique<std::ofstream>(path);
    if (!*file_) throw std::runtime_error("cannot open '" + path + "' for writing");
  }
  std::ostream& stream() { return file_ ? *file_ : std::cout; }

 private:
  std::unique_ptr<std::ofstream> file_;
};

Config load_config(const std::string& path) { return path.empty() ? Config() : Config::load(path); }

void write_vector_csv(std::ostream& out, const Vector& v, const std::string& name) {
  out.precision(17);
  out << "index," << name << '\n';
  for (Eigen::Index i = 0; i < v.size(); ++i) out << i + 1 << ',' << v(i) << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Coherent-system reliability estimation and benchmark toolkit"};
  app.require_subcommand(1);

  // simulate
  auto* sim = app.add_subcommand("simulate", "Simulate a benchmark system dataset as CSV");
  int sim_system = 1;
  SimConfig sim_cfg;
  std::uint64_t sim_seed = 0;
  std::string sim_out;
  sim->add_option("--system", sim_system, "System id (1-4)")->check(CLI::Range(1, 4));
  sim->add_option("--n", sim_cfg.n, "Number of systems");
  sim->add_option("--rho", sim_cfg.rho, "Within-block correlation");
  sim->add_option("--sigma", sim_cfg.sigma, "Latent noise scale");
  sim->add_option("--y0", sim_cfg.y0, "Operating level");
  sim->add_option("--seed", sim_seed, "Random seed")->required();
  sim->add_option("--out", sim_out, "Output CSV (default stdout)");

  // run-study
  auto* study = app.add_subcommand("run-study", "Run the replicated simulation study");
  std::string study_config, study_out = "study";
  std::uint64_t study_seed = 0;
  std::vector<int> study_systems;
  std::vector<std::string> study_methods;
  int study_reps = 0, study_threads = -1;
  Eigen::Index study_n = 0;
  study->add_option("--config", study_config, "Key-value config file");
  study->add_option("--seed", study_seed, "Root seed")->required();
  study->add_option("--systems", study_systems, "Systems to run")->delimiter(',');
  study->add_option("--methods", study_methods, "Methods: fa-lr-is, ann, knn, rf")->delimiter(',');
  study->add_option("--replications", study_reps, "Replications per system");
  study->add_option("--n", study_n, "Systems per replication");
  study->add_option("--threads", study_threads, "Worker threads (0 = all cores)");
  study->add_option("--out", study_out, "Output prefix for .json, .csv and .tsv files");

  // compare
  auto* cmp = app.add_subcommand("compare", "Bootstrap comparison of two methods from a study result");
  std::string cmp_results, cmp_metric = "auc", cmp_a = "fa-lr-is", cmp_b = "ann", cmp_mode = "standard", cmp_out;
  int cmp_b_count = 10000;
  std::uint64_t cmp_seed = 0;
  cmp->add_option("--results", cmp_results, "Study result JSON")->required();
  cmp->add_option("--metric", cmp_metric, "Metric name");
  cmp->add_option("--a", cmp_a, "First method");
  cmp->add_option("--b", cmp_b, "Second method");
  cmp->add_option("--resamples", cmp_b_count, "Bootstrap resamples");
  cmp->add_option("--seed", cmp_seed, "Bootstrap seed");
  cmp->add_option("--mode", cmp_mode, "standard or literal");
  cmp->add_option("--out", cmp_out, "Output CSV (default stdout)");

  // real-data
  auto* real = app.add_subcommand("real-data", "Ingest a sensor CSV and evaluate every method");
  std::string real_csv, real_config, real_dir = "real-data";
  IngestOptions ingest;
  std::vector<std::string> real_operative, real_methods;
  std::uint64_t real_seed = 0;
  real->add_option("--csv", real_csv, "Sensor CSV")->required();
  real->add_option("--subsample", ingest.subsample_every, "Keep every k-th row");
  real->add_option("--status-column", ingest.status_column, "Status column name");
  real->add_option("--operative", real_operative, "Status values mapped to 1")->delimiter(',');
  real->add_option("--sensor-prefix", ingest.sensor_prefix, "Sensor column prefix");
  real->add_option("--methods", real_methods, "Methods: fa-lr-is, ann, knn, rf")->delimiter(',');
  real->add_option("--config", real_config, "Key-value config file");
  real->add_option("--seed", real_seed, "Root seed")->required();
  real->add_option("--out-dir", real_dir, "Directory for metrics, correlation and scree CSVs");

  // fa
  auto* fa = app.add_subcommand("fa", "Factor analysis of a dataset CSV");
  std::string fa_data, fa_out;
  bool fa_scree = false, fa_loadings = false;
  int fa_factors = 0;
  double fa_alpha = 0.05;
  fa->add_option("--data", fa_data, "Dataset CSV (x1..xp,y[,true_r])")->required();
  fa->add_flag("--scree", fa_scree, "Emit correlation eigenvalues");
  fa->add_flag("--loadings", fa_loadings, "Emit rotated loadings");
  fa->add_option("--factors", fa_factors, "Factor count (default: likelihood-ratio selection)");
  fa->add_option("--alpha", fa_alpha, "Test level for factor selection");
  fa->add_option("--out", fa_out, "Output CSV (default stdout)");

  // export
  auto* exp = app.add_subcommand("export", "Convert a study result JSON to csv, tsv or json");
  std::string exp_results, exp_format = "csv", exp_out;
  exp->add_option("--results", exp_results, "Study result JSON")->required();
  exp->add_option("--format", exp_format, "csv, tsv or json");
  exp->add_option("--out", exp_out, "Output path (default stdout)");

  // fit
  auto* fit = app.add_subcommand("fit", "Fit the reliability pipeline and save it as JSON");
  std::string fit_data, fit_out = "pipeline.json", fit_config;
  double fit_alpha = 0.05;
  std::uint64_t fit_seed = 0;
  fit->add_option("--data", fit_data, "Training dataset CSV")->required();
  fit->add_option("--alpha", fit_alpha, "Test level for factor selection");
  fit->add_option("--seed", fit_seed, "Seed")->required();
  fit->add_option("--config", fit_config, "Key-value config file");
  fit->add_option("--out", fit_out, "Pipeline JSON");

  // predict
  auto* pred = app.add_subcommand("predict", "Estimate reliabilities with a saved pipeline");
  std::string pred_pipeline, pred_data, pred_out;
  pred->add_option("--pipeline", pred_pipeline, "Pipeline JSON")->required();
  pred->add_option("--data", pred_data, "CSV of component states (x1..xp; y and true_r ignored)")->required();
  pred->add_option("--out", pred_out, "Output CSV (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*sim) {
      sim_cfg.seed = sim_seed;
      DataSet ds = simulate_dataset(sim_system, sim_cfg);
      Output out(sim_out);
      write_dataset_csv(out.stream(), ds);
    } else if (*study) {
      StudyConfig cfg;
      apply_config(load_config(study_config), cfg);
      cfg.seed = study_seed;
      if (!study_systems.empty()) cfg.systems = study_systems;
      if (!study_methods.empty()) {
        cfg.methods.clear();
        for (const auto& m : study_methods) cfg.methods.push_back(parse_method(m));
      }
      if (study_reps > 0) cfg.replications = study_reps;
      if (study_n > 0) cfg.sim.n = study_n;
      if (study_threads >= 0) cfg.threads = study_threads;
      StudyResult res = run_simulation_study(cfg);
      export_results(res, ExportFormat::Json, study_out + ".json");
      export_results(res, ExportFormat::Csv, study_out + ".csv");
      export_results(res, ExportFormat::Tsv, study_out + ".tsv");
      export_results(res, ExportFormat::Csv, std::cout);
      if (res.failures() > 0) std::cerr << res.failures() << " runs failed; see " << study_out << ".json\n";
    } else if (*cmp) {
      StudyResult res = import_results_json(cmp_results);
      Method a = parse_method(cmp_a), b = parse_method(cmp_b);
      auto rows = compare_methods(res, cmp_metric, a, b, cmp_b_count, cmp_seed, parse_bootstrap_mode(cmp_mode));
      Output out(cmp_out);
      write_comparison_csv(out.stream(), rows, cmp_metric, a, b);
    } else if (*real) {
      if (!real_operative.empty()) ingest.operative_statuses = {real_operative.begin(), real_operative.end()};
      Ingested in = ingest_sensor_csv(real_csv, ingest);
      const auto& rep = in.report;
      std::cerr << "rows read " << rep.rows_read << ", kept " << rep.rows_kept << ", sensors " << rep.columns.size()
                << ", imputed cells " << rep.imputed_cells << '\n';
      for (const auto& [col, why] : rep.dropped) std::cerr << "dropped " << col << ": " << why << '\n';
      RealDataConfig cfg;
      apply_config(load_config(real_config), cfg.settings);
      cfg.seed = real_seed;
      if (!real_methods.empty()) {
        cfg.methods.clear();
        for (const auto& m : real_methods) cfg.methods.push_back(parse_method(m));
      }
      RealDataResult res = run_real_data(in.data, cfg);
      fs::create_directories(real_dir);
      {
        std::ofstream f(fs::path(real_dir) / "metrics.csv");
        write_metrics_table_csv(f, res);
      }
      {
        std::ofstream f(fs::path(real_dir) / "correlation.csv");
        write_matrix_csv(f, res.correlation, rep.columns);
      }
      {
        std::ofstream f(fs::path(real_dir) / "scree.csv");
        write_vector_csv(f, res.scree, "eigenvalue");
      }
      std::cerr << "factors " << res.factors << ", bandwidth " << res.bandwidth << '\n';
      for (const auto& [m, err] : res.errors) std::cerr << method_name(m) << " failed: " << err << '\n';
      write_metrics_table_csv(std::cout, res);
    } else if (*fa) {
      DataSet ds = read_dataset_csv(fa_data);
      Matrix u = standardize_apply(standardize_fit(ds.states()), ds.states());
      Output out(fa_out);
      if (fa_scree || !fa_loadings) write_vector_csv(out.stream(), eigen_scree(u), "eigenvalue");
      if (fa_loadings) {
        int p0 = fa_factors > 0 ? fa_factors : select_num_factors(u, fa_alpha).p0;
        FactorModel model = fit_fa(u, p0);
        Matrix table(model.loadings.rows(), model.p0 + 1);
        table << model.loadings, model.uniquenesses;
        std::vector<std::string> header;
        for (int k = 0; k < model.p0; ++k) header.push_back("factor" + std::to_string(k + 1));
        header.push_back("uniqueness");
        write_matrix_csv(out.stream(), table, header);
      }
    } else if (*exp) {
      StudyResult res = import_results_json(exp_results);
      Output out(exp_out);
      export_results(res, parse_export_format(exp_format), out.stream());
    } else if (*fit) {
      DataSet ds = read_dataset_csv(fit_data);
      MethodSettings settings;
      apply_config(load_config(fit_config), settings);
      FittedPipeline pl = fit_pipeline(ds, fit_alpha, fit_seed, settings.falris);
      save_pipeline(fit_out, pl);
      std::cerr << "factors " << pl.factor_model.p0 << ", bandwidth " << pl.bandwidth << ", threshold "
                << pl.threshold << '\n';
    } else if (*pred) {
      FittedPipeline pl = load_pipeline(pred_pipeline);
      std::ifstream f(pred_data);
      if (!f) throw DataError("cannot open '" + pred_data + "'");
      Matrix raw = read_matrix_csv(f, true);
      const Eigen::Index p = pl.scaler.means.size();
      if (raw.cols() < p) throw DataError("expected at least " + std::to_string(p) + " columns");
      Matrix x = raw.leftCols(p);
      PipelinePrediction r = predict_detailed(pl, x);
      Labels cls = classify(pl, r.reliability);
      Output out(pred_out);
      out.stream().precision(17);
      out.stream() << "reliability,class,fallback\n";
      for (Eigen::Index i = 0; i < x.rows(); ++i)
        out.stream() << r.reliability(i) << ',' << cls[static_cast<std::size_t>(i)] << ','
                     << (r.used_fallback[static_cast<std::size_t>(i)] ? 1 : 0) << '\n';
    }
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 3;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
