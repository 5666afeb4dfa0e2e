#include "falris/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "falris/isotonic.hpp"
#include "falris/metrics.hpp"
#include "json.hpp"

namespace falris {

namespace {

constexpr int kFormatVersion = 1;

double local_estimate(const FittedPipeline& pl, const Vector& z0, bool* fallback) {
  try {
    return predict_at_center(fit_local_logistic(pl.train_scores, pl.train_labels, z0, pl.bandwidth, pl.local));
  } catch (const DataError&) {
    // Only reachable with the hard window: no training point within h.
    *fallback = true;
    Vector ones = Vector::Ones(pl.train_scores.rows());
    return predict_at_center(fit_weighted_logistic(pl.train_scores, pl.train_labels, z0, ones, pl.local));
  }
}

std::string describe_scree(const Vector& s) {
  std::ostringstream o;
  o << "scree:";
  for (Eigen::Index k = 0; k < s.size(); ++k) o << ' ' << s(k);
  return o.str();
}

}  // namespace

FittedPipeline fit_pipeline(const DataSet& train, double alpha, std::uint64_t seed, const PipelineOptions& opt) {
  if (!has_both_classes(train.labels()))
    throw DataError("degenerate labels: training data needs both failed and operative systems");
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha must lie in (0,1)");

  FittedPipeline pl;
  pl.seed = seed;
  pl.alpha = alpha;
  pl.local = opt.local;
  pl.train_labels = train.labels();
  pl.train_states = train.states();
  pl.scaler = standardize_fit(train.states());
  const Matrix u = standardize_apply(pl.scaler, train.states());

  int p0 = opt.fixed_factors;
  if (p0 <= 0) {
    try {
      FactorSelection sel = select_num_factors(u, alpha, opt.fa);
      p0 = sel.p0;
      pl.factors_all_rejected = sel.all_rejected;
    } catch (const NumericalError& e) {
      Vector scree = eigen_scree(u);
      throw FactorSelectionError(std::string("factor selection failed: ") + e.what() + "; " + describe_scree(scree),
                                 scree);
    }
  }
  pl.factor_model = fit_fa(u, p0, opt.fa);
  pl.train_scores = scores(pl.factor_model, u);

  std::vector<double> grid =
      opt.bandwidth_grid.empty() ? default_bandwidth_grid(pl.train_scores, opt.grid_size) : opt.bandwidth_grid;
  BandwidthSearch search = loocv_bandwidth(pl.train_scores, pl.train_labels, grid, opt.local);
  pl.bandwidth = search.bandwidth;
  pl.bandwidth_grid = search.grid;
  pl.bandwidth_scores = search.scores;

  const Eigen::Index n = train.n();
  pl.train_raw.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    bool unused = false;
    pl.train_raw(i) = local_estimate(pl, pl.train_scores.row(i).transpose(), &unused);
  }
  pl.train_predictions = isotonic_project(pl.train_raw, comparable_pairs(train.states()));
  pl.threshold = youden_threshold(pl.train_predictions, pl.train_labels);
  return pl;
}

PipelinePrediction predict_detailed(const FittedPipeline& pl, const Matrix& x_new) {
  if (x_new.cols() != pl.scaler.means.size())
    throw DataError("dimension mismatch: pipeline expects " + std::to_string(pl.scaler.means.size()) +
                    " components, got " + std::to_string(x_new.cols()));
  const Matrix z = scores(pl.factor_model, standardize_apply(pl.scaler, x_new));
  PipelinePrediction out;
  out.raw.resize(x_new.rows());
  out.used_fallback.assign(static_cast<std::size_t>(x_new.rows()), false);
  for (Eigen::Index i = 0; i < x_new.rows(); ++i) {
    bool fb = false;
    out.raw(i) = local_estimate(pl, z.row(i).transpose(), &fb);
    out.used_fallback[static_cast<std::size_t>(i)] = fb;
  }
  out.reliability = isotonic_project(out.raw, comparable_pairs(x_new));
  return out;
}

Vector predict(const FittedPipeline& pipeline, const Matrix& x_new) {
  return predict_detailed(pipeline, x_new).reliability;
}

Labels classify(const FittedPipeline& pipeline, const Vector& reliabilities) {
  Labels out(static_cast<std::size_t>(reliabilities.size()));
  for (Eigen::Index i = 0; i < reliabilities.size(); ++i)
    out[static_cast<std::size_t>(i)] = reliabilities(i) >= pipeline.threshold ? 1 : 0;
  return out;
}

long monotonicity_violations(const Matrix& x, const Vector& g, double tol) {
  if (x.rows() != g.size()) throw DataError("dimension mismatch in monotonicity audit");
  long count = 0;
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    for (Eigen::Index j = 0; j < x.rows(); ++j)
      if (i != j && (x.row(i).array() <= x.row(j).array()).all() && g(i) > g(j) + tol) ++count;
  return count;
}

namespace {

using nlohmann::json;

json to_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

json to_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Vector r = m.row(i).transpose();
    rows.push_back(to_json(r));
  }
  return json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", rows}};
}

Vector vector_from(const json& j) {
  auto v = j.get<std::vector<double>>();
  return Eigen::Map<Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

Matrix matrix_from(const json& j) {
  Matrix m(j.at("rows").get<Eigen::Index>(), j.at("cols").get<Eigen::Index>());
  const json& data = j.at("data");
  if (static_cast<Eigen::Index>(data.size()) != m.rows()) throw DataError("matrix row count mismatch in pipeline file");
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Vector r = vector_from(data[static_cast<std::size_t>(i)]);
    if (r.size() != m.cols()) throw DataError("matrix column count mismatch in pipeline file");
    m.row(i) = r.transpose();
  }
  return m;
}

}  // namespace

void save_pipeline(std::ostream& out, const FittedPipeline& pl) {
  json j;
  j["format"] = "falris-pipeline";
  j["version"] = kFormatVersion;
  j["scaler"] = {{"means", to_json(pl.scaler.means)}, {"sds", to_json(pl.scaler.sds)}};
  j["factor_model"] = {{"p0", pl.factor_model.p0},
                       {"loadings", to_json(pl.factor_model.loadings)},
                       {"uniquenesses", to_json(pl.factor_model.uniquenesses)},
                       {"score_weights", to_json(pl.factor_model.score_weights)},
                       {"discrepancy", pl.factor_model.discrepancy},
                       {"iterations", pl.factor_model.iterations}};
  j["bandwidth"] = pl.bandwidth;
  j["threshold"] = pl.threshold;
  j["train_scores"] = to_json(pl.train_scores);
  j["train_labels"] = pl.train_labels;
  j["train_states"] = to_json(pl.train_states);
  j["train_predictions"] = to_json(pl.train_predictions);
  j["train_raw"] = to_json(pl.train_raw);
  j["local"] = {{"kernel", pl.local.kernel == KernelKind::Gaussian ? "gaussian" : "window"},
                {"ridge", pl.local.ridge},
                {"max_iterations", pl.local.max_iterations},
                {"gradient_tolerance", pl.local.gradient_tolerance},
                {"min_weight", pl.local.min_weight}};
  j["seed"] = pl.seed;
  j["alpha"] = pl.alpha;
  j["factors_all_rejected"] = pl.factors_all_rejected;
  j["bandwidth_grid"] = pl.bandwidth_grid;
  std::vector<json> qs;
  for (double q : pl.bandwidth_scores) qs.push_back(std::isfinite(q) ? json(q) : json(nullptr));
  j["bandwidth_scores"] = qs;
  out << j.dump(1) << '\n';
  if (!out) throw std::runtime_error("failed to write pipeline");
}

void save_pipeline(const std::string& path, const FittedPipeline& pl) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open '" + path + "' for writing");
  save_pipeline(f, pl);
}

FittedPipeline load_pipeline(std::istream& in) {
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed pipeline file: ") + e.what());
  }
  try {
    if (j.value("format", "") != "falris-pipeline") throw DataError("not a pipeline file");
    int version = j.at("version").get<int>();
    if (version != kFormatVersion) throw DataError("unsupported pipeline version " + std::to_string(version));
    FittedPipeline pl;
    pl.scaler.means = vector_from(j.at("scaler").at("means"));
    pl.scaler.sds = vector_from(j.at("scaler").at("sds"));
    const json& fm = j.at("factor_model");
    pl.factor_model.p0 = fm.at("p0").get<int>();
    pl.factor_model.loadings = matrix_from(fm.at("loadings"));
    pl.factor_model.uniquenesses = vector_from(fm.at("uniquenesses"));
    pl.factor_model.score_weights = matrix_from(fm.at("score_weights"));
    pl.factor_model.discrepancy = fm.at("discrepancy").get<double>();
    pl.factor_model.iterations = fm.at("iterations").get<int>();
    pl.bandwidth = j.at("bandwidth").get<double>();
    pl.threshold = j.at("threshold").get<double>();
    pl.train_scores = matrix_from(j.at("train_scores"));
    pl.train_labels = j.at("train_labels").get<Labels>();
    pl.train_states = matrix_from(j.at("train_states"));
    pl.train_predictions = vector_from(j.at("train_predictions"));
    pl.train_raw = vector_from(j.at("train_raw"));
    const json& lo = j.at("local");
    std::string kernel = lo.at("kernel").get<std::string>();
    if (kernel != "gaussian" && kernel != "window") throw DataError("unknown kernel '" + kernel + "'");
    pl.local.kernel = kernel == "gaussian" ? KernelKind::Gaussian : KernelKind::Window;
    pl.local.ridge = lo.at("ridge").get<double>();
    pl.local.max_iterations = lo.at("max_iterations").get<int>();
    pl.local.gradient_tolerance = lo.at("gradient_tolerance").get<double>();
    pl.local.min_weight = lo.at("min_weight").get<double>();
    pl.seed = j.at("seed").get<std::uint64_t>();
    pl.alpha = j.at("alpha").get<double>();
    pl.factors_all_rejected = j.at("factors_all_rejected").get<bool>();
    pl.bandwidth_grid = j.at("bandwidth_grid").get<std::vector<double>>();
    for (const json& q : j.at("bandwidth_scores"))
      pl.bandwidth_scores.push_back(q.is_null() ? std::nan("") : q.get<double>());
    const Eigen::Index p = pl.scaler.means.size();
    if (pl.scaler.sds.size() != p || pl.factor_model.score_weights.rows() != p ||
        pl.train_scores.rows() != static_cast<Eigen::Index>(pl.train_labels.size()) ||
        pl.train_scores.cols() != pl.factor_model.p0)
      throw DataError("inconsistent shapes in pipeline file");
    return pl;
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed pipeline file: ") + e.what());
  }
}

FittedPipeline load_pipeline(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw DataError("cannot open '" + path + "'");
  return load_pipeline(f);
}

}  // namespace falris
