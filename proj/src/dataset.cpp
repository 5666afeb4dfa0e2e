#include "falris/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "csv.hpp"
#include "falris/error.hpp"
#include "falris/random.hpp"

namespace falris {

DataSet make_dataset(Matrix states, Labels labels, std::optional<Vector> true_reliability) {
  if (states.rows() < 1 || states.cols() < 1) throw DataError("dataset needs n >= 1 and p >= 1");
  if (static_cast<Eigen::Index>(labels.size()) != states.rows())
    throw DataError("dimension mismatch: " + std::to_string(labels.size()) + " labels for " +
                    std::to_string(states.rows()) + " rows");
  for (Eigen::Index i = 0; i < states.rows(); ++i)
    for (Eigen::Index j = 0; j < states.cols(); ++j) {
      double v = states(i, j);
      if (!(v >= 0.0 && v <= 1.0))
        throw DataError("state out of range at row " + std::to_string(i + 1) + ", column " +
                        std::to_string(j + 1));
    }
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i] != 0 && labels[i] != 1)
      throw DataError("label not in {0,1} at row " + std::to_string(i + 1));
  if (true_reliability) {
    if (true_reliability->size() != states.rows()) throw DataError("dimension mismatch: true_r length");
    for (double r : *true_reliability)
      if (!(r >= 0.0 && r <= 1.0)) throw DataError("true reliability out of range");
  }
  return DataSet(std::move(states), std::move(labels), std::move(true_reliability));
}

DataSet DataSet::subset(std::span<const Eigen::Index> rows) const {
  Matrix s(static_cast<Eigen::Index>(rows.size()), p());
  Labels y(rows.size());
  std::optional<Vector> r;
  if (true_r_) r = Vector(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t k = 0; k < rows.size(); ++k) {
    Eigen::Index i = rows[k];
    if (i < 0 || i >= n()) throw std::out_of_range("subset row index");
    s.row(static_cast<Eigen::Index>(k)) = states_.row(i);
    y[k] = labels_[static_cast<std::size_t>(i)];
    if (r) (*r)(static_cast<Eigen::Index>(k)) = (*true_r_)(i);
  }
  return DataSet(std::move(s), std::move(y), std::move(r));
}

bool operator==(const DataSet& a, const DataSet& b) {
  if (a.states_.rows() != b.states_.rows() || a.states_.cols() != b.states_.cols()) return false;
  if (a.labels_ != b.labels_ || a.true_r_.has_value() != b.true_r_.has_value()) return false;
  if (std::memcmp(a.states_.data(), b.states_.data(), sizeof(double) * a.states_.size()) != 0) return false;
  if (a.true_r_ &&
      std::memcmp(a.true_r_->data(), b.true_r_->data(), sizeof(double) * a.true_r_->size()) != 0)
    return false;
  return true;
}

Split make_split(Eigen::Index n, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) throw std::invalid_argument("split fraction must lie in (0,1)");
  if (n < 2) throw DataError("n = " + std::to_string(n) + " too small for a split with both sets non-empty");
  auto n_train = std::clamp<Eigen::Index>(std::llround(fraction * static_cast<double>(n)), 1, n - 1);
  std::vector<Eigen::Index> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), Eigen::Index{0});
  auto rng = make_rng(seed, {0x5b117});
  std::shuffle(perm.begin(), perm.end(), rng);
  Split s;
  s.train.assign(perm.begin(), perm.begin() + n_train);
  s.test.assign(perm.begin() + n_train, perm.end());
  std::sort(s.train.begin(), s.train.end());
  std::sort(s.test.begin(), s.test.end());
  return s;
}

std::pair<DataSet, DataSet> split_train_test(const DataSet& ds, double fraction, std::uint64_t seed) {
  Split s = make_split(ds.n(), fraction, seed);
  return {ds.subset(s.train), ds.subset(s.test)};
}

Scaler standardize_fit(const Matrix& states) {
  const Eigen::Index n = states.rows();
  if (n < 2) throw DataError("standardize_fit needs at least 2 rows");
  Scaler sc;
  sc.means = states.colwise().mean().transpose();
  sc.sds.resize(states.cols());
  for (Eigen::Index j = 0; j < states.cols(); ++j) {
    double ss = (states.col(j).array() - sc.means(j)).square().sum();
    double sd = std::sqrt(ss / static_cast<double>(n - 1));
    if (!(sd > 0.0)) throw DataError("zero-variance column " + std::to_string(j + 1));
    sc.sds(j) = sd;
  }
  return sc;
}

Matrix standardize_apply(const Scaler& scaler, const Matrix& states) {
  if (states.cols() != scaler.means.size() || scaler.means.size() != scaler.sds.size())
    throw DataError("dimension mismatch: scaler has " + std::to_string(scaler.means.size()) +
                    " columns, matrix has " + std::to_string(states.cols()));
  Matrix u = states.rowwise() - scaler.means.transpose();
  u.array().rowwise() /= scaler.sds.transpose().array();
  return u;
}

bool has_both_classes(const Labels& y) {
  bool zero = false, one = false;
  for (int v : y) (v ? one : zero) = true;
  return zero && one;
}

namespace {

struct Fnv {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  void bytes(const void* p, std::size_t len) {
    auto c = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < len; ++i) {
      h ^= c[i];
      h *= 0x100000001b3ULL;
    }
  }
  template <class T>
  void value(const T& v) { bytes(&v, sizeof v); }
};

}  // namespace

std::uint64_t dataset_hash(const DataSet& ds) {
  Fnv f;
  f.value(static_cast<std::int64_t>(ds.n()));
  f.value(static_cast<std::int64_t>(ds.p()));
  for (Eigen::Index i = 0; i < ds.n(); ++i)
    for (Eigen::Index j = 0; j < ds.p(); ++j) f.value(ds.states()(i, j));
  for (int y : ds.labels()) f.value(y);
  if (ds.true_reliability()) {
    f.value(std::uint8_t{1});
    for (double r : *ds.true_reliability()) f.value(r);
  }
  return f.h;
}

void write_dataset_csv(std::ostream& out, const DataSet& ds) {
  out.precision(std::numeric_limits<double>::max_digits10);
  for (Eigen::Index j = 0; j < ds.p(); ++j) out << 'x' << (j + 1) << ',';
  out << 'y';
  if (ds.true_reliability()) out << ",true_r";
  out << '\n';
  for (Eigen::Index i = 0; i < ds.n(); ++i) {
    for (Eigen::Index j = 0; j < ds.p(); ++j) out << ds.states()(i, j) << ',';
    out << ds.labels()[static_cast<std::size_t>(i)];
    if (ds.true_reliability()) out << ',' << (*ds.true_reliability())(i);
    out << '\n';
  }
}

void write_dataset_csv(const std::string& path, const DataSet& ds) {
  std::ofstream f(path);
  if (!f) throw DataError("cannot open " + path + " for writing");
  write_dataset_csv(f, ds);
  if (!f) throw DataError("write failed: " + path);
}

DataSet read_dataset_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw DataError("empty dataset file");
  auto header = detail::split_csv_line(line);
  int y_col = -1, r_col = -1;
  std::vector<int> x_cols;
  for (std::size_t c = 0; c < header.size(); ++c) {
    auto name = detail::trim(header[c]);
    if (name == "y") y_col = static_cast<int>(c);
    else if (name == "true_r") r_col = static_cast<int>(c);
    else if (!name.empty() && name.front() == 'x') x_cols.push_back(static_cast<int>(c));
    else throw DataError("unexpected column '" + std::string(name) + "' in dataset header");
  }
  if (y_col < 0) throw DataError("dataset header lacks a 'y' column");
  if (x_cols.empty()) throw DataError("dataset header lacks x columns");
  std::vector<std::vector<double>> rows;
  Labels y;
  std::vector<double> r;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::trim(line).empty()) continue;
    auto f = detail::split_csv_line(line);
    if (f.size() != header.size()) throw DataError("wrong field count on line " + std::to_string(lineno));
    std::vector<double> row;
    for (int c : x_cols) {
      auto v = detail::parse_double(f[static_cast<std::size_t>(c)]);
      if (!v) throw DataError("non-numeric state on line " + std::to_string(lineno));
      row.push_back(*v);
    }
    auto yv = detail::parse_double(f[static_cast<std::size_t>(y_col)]);
    if (!yv) throw DataError("non-numeric label on line " + std::to_string(lineno));
    y.push_back(static_cast<int>(*yv));
    if (*yv != 0.0 && *yv != 1.0) throw DataError("label not in {0,1} on line " + std::to_string(lineno));
    if (r_col >= 0) {
      auto rv = detail::parse_double(f[static_cast<std::size_t>(r_col)]);
      if (!rv) throw DataError("non-numeric true_r on line " + std::to_string(lineno));
      r.push_back(*rv);
    }
    rows.push_back(std::move(row));
  }
  Matrix s(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(x_cols.size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < x_cols.size(); ++j)
      s(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  std::optional<Vector> tr;
  if (r_col >= 0) tr = Eigen::Map<Vector>(r.data(), static_cast<Eigen::Index>(r.size()));
  return make_dataset(std::move(s), std::move(y), std::move(tr));
}

DataSet read_dataset_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw DataError("cannot open " + path);
  return read_dataset_csv(f);
}

Matrix read_matrix_csv(std::istream& in, bool has_header) {
  std::string line;
  std::vector<std::vector<double>> rows;
  std::size_t width = 0, lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (has_header && lineno == 1) continue;
    if (detail::trim(line).empty()) continue;
    auto f = detail::split_csv_line(line);
    if (width == 0) width = f.size();
    if (f.size() != width) throw DataError("ragged matrix on line " + std::to_string(lineno));
    std::vector<double> row;
    for (auto& cell : f) {
      auto v = detail::parse_double(cell);
      if (!v) throw DataError("non-numeric cell on line " + std::to_string(lineno));
      row.push_back(*v);
    }
    rows.push_back(std::move(row));
  }
  Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(width));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < width; ++j)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  return m;
}

void write_matrix_csv(std::ostream& out, const Matrix& m, const std::vector<std::string>& header) {
  out.precision(std::numeric_limits<double>::max_digits10);
  for (std::size_t c = 0; c < header.size(); ++c) out << (c ? "," : "") << header[c];
  if (!header.empty()) out << '\n';
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) out << (j ? "," : "") << m(i, j);
    out << '\n';
  }
}

}  // namespace falris
