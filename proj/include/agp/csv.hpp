#pragma once

#include <string>
#include <vector>

namespace agp {

struct CsvTable {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  int n_rows() const { return static_cast<int>(rows.size()); }
  int n_cols() const { return static_cast<int>(columns.size()); }
  // Index of a named column, -1 if absent.
  int column_index(const std::string& name) const;
};

// Headered numeric CSV. Malformed cells and ragged rows raise with the
// offending row/column named; missing values are rejected.
CsvTable read_csv(const std::string& path);

void write_csv(const std::string& path, const std::vector<std::string>& columns,
               const std::vector<std::vector<double>>& rows);

}  // namespace agp
