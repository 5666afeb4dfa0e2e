#include "falris/sensor_ingest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <optional>
#include <stdexcept>

#include "csv.hpp"
#include "falris/error.hpp"

namespace falris {

namespace {

std::optional<double> cell_value(const std::string& s) {
  auto v = detail::parse_double(s);
  if (!v || !std::isfinite(*v)) return std::nullopt;
  return v;
}

bool is_missing_token(std::string_view s) {
  s = detail::trim(s);
  return s.empty() || s == "NA" || s == "NaN" || s == "nan" || s == "null";
}

double median(std::vector<double> v) {
  const std::size_t m = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(m), v.end());
  double hi = v[m];
  if (v.size() % 2 == 1) return hi;
  return 0.5 * (hi + *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(m)));
}

}  // namespace

Ingested ingest_sensor_csv(std::istream& in, const IngestOptions& opt) {
  if (opt.subsample_every < 1) throw std::invalid_argument("subsample interval must be >= 1");
  std::string line;
  if (!std::getline(in, line)) throw DataError("empty sensor file");
  const std::vector<std::string> header = detail::split_csv_line(line);
  auto status_it = std::find(header.begin(), header.end(), opt.status_column);
  if (status_it == header.end()) throw DataError("missing status column '" + opt.status_column + "'");
  const std::size_t status_col = static_cast<std::size_t>(status_it - header.begin());

  IngestReport report;
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    if (detail::trim(line).empty()) continue;
    if (report.rows_read % static_cast<std::size_t>(opt.subsample_every) == 0) {
      auto cells = detail::split_csv_line(line);
      if (cells.size() != header.size())
        throw DataError("row " + std::to_string(report.rows_read + 1) + " has " + std::to_string(cells.size()) +
                        " fields, header has " + std::to_string(header.size()));
      rows.push_back(std::move(cells));
    }
    ++report.rows_read;
  }
  report.rows_kept = rows.size();
  if (rows.empty()) throw DataError("sensor file has no data rows");

  std::vector<std::size_t> candidates;
  if (!opt.sensor_prefix.empty())
    for (std::size_t c = 0; c < header.size(); ++c)
      if (c != status_col && header[c].rfind(opt.sensor_prefix, 0) == 0) candidates.push_back(c);
  if (candidates.empty()) {
    for (std::size_t c = 0; c < header.size(); ++c) {
      if (c == status_col) continue;
      bool numeric = std::all_of(rows.begin(), rows.end(), [&](const auto& r) {
        return is_missing_token(r[c]) || cell_value(r[c]).has_value();
      });
      if (numeric) candidates.push_back(c);
    }
  }

  std::vector<std::vector<double>> kept;
  for (std::size_t c : candidates) {
    std::vector<std::optional<double>> col;
    std::vector<double> present;
    for (const auto& r : rows) {
      std::optional<double> v = is_missing_token(r[c]) ? std::nullopt : cell_value(r[c]);
      if (!v && !is_missing_token(r[c]))
        throw DataError("non-numeric value '" + r[c] + "' in sensor column " + header[c]);
      col.push_back(v);
      if (v) present.push_back(*v);
    }
    if (present.empty()) {
      report.dropped.emplace_back(header[c], "all values missing");
      continue;
    }
    auto [lo, hi] = std::minmax_element(present.begin(), present.end());
    if (*lo == *hi) {
      report.dropped.emplace_back(header[c], "zero variance");
      continue;
    }
    const double med = median(present), mn = *lo, mx = *hi;
    std::vector<double> filled;
    for (const auto& v : col) {
      if (!v) ++report.imputed_cells;
      filled.push_back(((v ? *v : med) - mn) / (mx - mn));
    }
    report.columns.push_back(header[c]);
    report.minimums.push_back(mn);
    report.maximums.push_back(mx);
    kept.push_back(std::move(filled));
  }
  if (kept.empty()) throw DataError("no sensor columns survive ingestion");

  Matrix states(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(kept.size()));
  Labels labels(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < kept.size(); ++j)
      states(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = kept[j][i];
    labels[i] = opt.operative_statuses.count(std::string(detail::trim(rows[i][status_col]))) ? 1 : 0;
  }
  return Ingested{make_dataset(std::move(states), std::move(labels)), std::move(report)};
}

Ingested ingest_sensor_csv(const std::string& path, const IngestOptions& opt) {
  std::ifstream f(path);
  if (!f) throw DataError("cannot open sensor file '" + path + "'");
  return ingest_sensor_csv(f, opt);
}

}  // namespace falris
