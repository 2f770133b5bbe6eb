#pragma once

#include <fstream>
#include <string>
#include <vector>

#include "wrvi/common.hpp"

namespace wrvi {

// 17 significant digits: round-trip exact for 64-bit floats.
std::string format_full(double v);

class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& header);

  void write_row(const std::vector<double>& values);
  void write_mixed_row(const std::vector<std::string>& cells);
  void flush() { os_.flush(); }

 private:
  std::ofstream os_;
  std::size_t width_;
};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

// Strict numeric CSV: every data cell must parse as a double, every row
// must match the header width.
CsvTable read_csv(const std::string& path);

}  // namespace wrvi
