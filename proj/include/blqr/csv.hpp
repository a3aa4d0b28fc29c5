#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace blqr {

// Minimal CSV table: header plus string cells. No quoting or embedded
// separators; `.` decimal, one record per line.
struct RawTable {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  // Column position or -1.
  int col_index(const std::string& name) const;
};

RawTable read_csv(std::istream& in, const std::string& origin = "<stream>");
RawTable read_csv_file(const std::string& path);

// Locale-independent numeric formatting (shortest round-trip form).
std::string fmt_double(double v);

// Parse a cell as double; throws a data error locating `where` on failure.
double parse_double(const std::string& cell, const std::string& where);

}  // namespace blqr
