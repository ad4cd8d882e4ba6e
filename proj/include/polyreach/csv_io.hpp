#pragma once

#include <string>
#include <vector>

#include "polyreach/types.hpp"

namespace polyreach {

/// Shortest round-trip decimal form (17 significant digits).
std::string format_double(double value);

/// Writes `header` then one row per matrix row.
void write_matrix_csv(const Matrix& values, const std::vector<std::string>& header,
                      const std::string& path);

struct CsvTable {
  std::vector<std::string> header;
  Matrix values;
};

CsvTable read_csv(const std::string& path);

}  // namespace polyreach
