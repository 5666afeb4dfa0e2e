#pragma once

#include <iosfwd>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "falris/dataset.hpp"

namespace falris {

struct IngestOptions {
  int subsample_every = 60;
  std::string status_column = "machine_status";
  std::set<std::string> operative_statuses{"NORMAL"};  // every other status maps to 0
  std::string sensor_prefix = "sensor";  // no match falls back to every numeric column
};

struct IngestReport {
  std::size_t rows_read = 0;
  std::size_t rows_kept = 0;
  std::vector<std::string> columns;  // surviving sensors, in file order
  std::vector<std::pair<std::string, std::string>> dropped;  // (column, reason)
  std::vector<double> minimums, maximums;  // pre-rescaling bounds per surviving column
  std::size_t imputed_cells = 0;
};

struct Ingested {
  DataSet data;
  IngestReport report;
};

// Keeps rows 0, k, 2k, ...; drops all-missing and constant columns; imputes
// column medians; rescales each column to [0,1].
Ingested ingest_sensor_csv(std::istream& in, const IngestOptions& opt = {});
Ingested ingest_sensor_csv(const std::string& path, const IngestOptions& opt = {});

}  // namespace falris
