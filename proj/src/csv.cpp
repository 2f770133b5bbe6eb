#include "wrvi/util/csv.hpp"

#include <cstdio>
#include <sstream>

namespace wrvi {

std::string format_full(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

CsvWriter::CsvWriter(const std::string& path, const std::vector<std::string>& header)
    : os_(path, std::ios::trunc), width_(header.size()) {
  if (!os_) throw IoError("cannot open '" + path + "' for writing");
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i) os_ << ',';
    os_ << header[i];
  }
  os_ << '\n';
}

void CsvWriter::write_row(const std::vector<double>& values) {
  if (values.size() != width_) {
    throw IoError("csv row width " + std::to_string(values.size()) + " != header width " +
                  std::to_string(width_));
  }
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) os_ << ',';
    os_ << format_full(values[i]);
  }
  os_ << '\n';
}

void CsvWriter::write_mixed_row(const std::vector<std::string>& cells) {
  if (cells.size() != width_) {
    throw IoError("csv row width " + std::to_string(cells.size()) + " != header width " +
                  std::to_string(width_));
  }
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) os_ << ',';
    os_ << cells[i];
  }
  os_ << '\n';
}

CsvTable read_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open '" + path + "'");
  CsvTable table;
  std::string line;
  if (!std::getline(is, line)) throw IoError("'" + path + "' is empty (missing header)");
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) table.header.push_back(cell);
  }
  std::size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> row;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t pos = 0;
        row.push_back(std::stod(cell, &pos));
        if (pos != cell.size()) throw std::invalid_argument(cell);
      } catch (const std::exception&) {
        throw IoError("'" + path + "' line " + std::to_string(line_no) +
                      ": cell '" + cell + "' is not a number");
      }
    }
    if (row.size() != table.header.size()) {
      throw IoError("'" + path + "' line " + std::to_string(line_no) + ": row has " +
                    std::to_string(row.size()) + " cells, header has " +
                    std::to_string(table.header.size()));
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

}  // namespace wrvi
