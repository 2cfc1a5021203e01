#pragma once

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "sg/errors.hpp"

namespace sg {

// RFC-4180-ish CSV with '.' decimals, LF line endings and a header row.
// Doubles are written with 17 significant digits so round trips are exact.
class CsvWriter {
 public:
  explicit CsvWriter(const std::string& path) : out_(path, std::ios::binary) {
    if (!out_) throw ConfigError("cannot open for writing: " + path);
  }

  void header(const std::vector<std::string>& cols) { row_strings(cols); }

  void field(const std::string& s) { fields_.push_back(s); }
  void field(long long v) { fields_.push_back(std::to_string(v)); }
  void field(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    fields_.emplace_back(buf);
  }

  void end_row() {
    row_strings(fields_);
    fields_.clear();
  }

 private:
  void row_strings(const std::vector<std::string>& cols) {
    for (std::size_t i = 0; i < cols.size(); ++i) {
      if (i) out_ << ',';
      out_ << cols[i];
    }
    out_ << '\n';
  }

  std::ofstream out_;
  std::vector<std::string> fields_;
};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return static_cast<int>(i);
    throw ConfigError("missing CSV column: " + name);
  }
};

inline CsvTable read_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open for reading: " + path);
  CsvTable t;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (first) {
      t.header = std::move(cells);
      first = false;
    } else {
      t.rows.push_back(std::move(cells));
    }
  }
  return t;
}

inline double parse_double(const std::string& s) {
  try {
    return std::stod(s);
  } catch (const std::exception&) {
    throw ConfigError("bad numeric field: " + s);
  }
}

}  // namespace sg
