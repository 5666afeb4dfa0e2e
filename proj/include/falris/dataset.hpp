#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace falris {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Labels = std::vector<int>;

// n systems observed through p component states in [0,1] plus the binary
// system state. Simulated data also carries the true reliability R(x).
class DataSet {
 public:
  const Matrix& states() const { return states_; }
  const Labels& labels() const { return labels_; }
  const std::optional<Vector>& true_reliability() const { return true_r_; }
  Eigen::Index n() const { return states_.rows(); }
  Eigen::Index p() const { return states_.cols(); }

  DataSet subset(std::span<const Eigen::Index> rows) const;

  friend bool operator==(const DataSet& a, const DataSet& b);

 private:
  friend DataSet make_dataset(Matrix, Labels, std::optional<Vector>);
  DataSet(Matrix s, Labels y, std::optional<Vector> r)
      : states_(std::move(s)), labels_(std::move(y)), true_r_(std::move(r)) {}

  Matrix states_;
  Labels labels_;
  std::optional<Vector> true_r_;
};

// Validates shapes and ranges; throws DataError on violation.
DataSet make_dataset(Matrix states, Labels labels, std::optional<Vector> true_reliability = std::nullopt);

struct Split {
  std::vector<Eigen::Index> train;
  std::vector<Eigen::Index> test;
};

// Uniform random permutation; |train| = round(fraction * n), clamped to [1, n - 1].
Split make_split(Eigen::Index n, double fraction, std::uint64_t seed);
std::pair<DataSet, DataSet> split_train_test(const DataSet& ds, double fraction, std::uint64_t seed);

struct Scaler {
  Vector means;
  Vector sds;
};

Scaler standardize_fit(const Matrix& states);
Matrix standardize_apply(const Scaler& scaler, const Matrix& states);

bool has_both_classes(const Labels& y);

// Stable 64-bit FNV-1a digest over shapes and raw bytes of every field.
std::uint64_t dataset_hash(const DataSet& ds);

// CSV with header x1..xp,y[,true_r]; doubles written with max_digits10.
void write_dataset_csv(std::ostream& out, const DataSet& ds);
void write_dataset_csv(const std::string& path, const DataSet& ds);
DataSet read_dataset_csv(std::istream& in);
DataSet read_dataset_csv(const std::string& path);

// Row-major text matrix helpers shared by the CLI and tests.
Matrix read_matrix_csv(std::istream& in, bool has_header);
void write_matrix_csv(std::ostream& out, const Matrix& m, const std::vector<std::string>& header);

}  // namespace falris
