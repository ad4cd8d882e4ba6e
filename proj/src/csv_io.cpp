#include "polyreach/csv_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace polyreach {

std::string format_double(double value) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

void write_matrix_csv(const Matrix& values, const std::vector<std::string>& header,
                      const std::string& path) {
  if (static_cast<Index>(header.size()) != values.cols())
    throw std::invalid_argument("write_matrix_csv: header width != column count");
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  for (size_t j = 0; j < header.size(); ++j) {
    if (j) out << ',';
    out << header[j];
  }
  out << '\n';
  for (Index i = 0; i < values.rows(); ++i) {
    for (Index j = 0; j < values.cols(); ++j) {
      if (j) out << ',';
      out << format_double(values(i, j));
    }
    out << '\n';
  }
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);

  CsvTable table;
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty csv: " + path);
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) table.header.push_back(cell);
  }
  const Index cols = static_cast<Index>(table.header.size());

  std::vector<double> data;
  Index rows = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    Index got = 0;
    while (std::getline(ss, cell, ',')) {
      data.push_back(std::stod(cell));
      ++got;
    }
    if (got != cols)
      throw std::runtime_error("ragged csv row in " + path);
    ++rows;
  }
  table.values.resize(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) table.values(i, j) = data[i * cols + j];
  return table;
}

}  // namespace polyreach
