#include "blqr/csv.hpp"

#include <charconv>
#include <fstream>
#include <istream>

#include "blqr/error.hpp"

namespace blqr {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      out.push_back(trim(line.substr(start)));
      break;
    }
    out.push_back(trim(line.substr(start, comma - start)));
    start = comma + 1;
  }
  return out;
}

}  // namespace

int RawTable::col_index(const std::string& name) const {
  for (std::size_t j = 0; j < columns.size(); ++j)
    if (columns[j] == name) return static_cast<int>(j);
  return -1;
}

RawTable read_csv(std::istream& in, const std::string& origin) {
  RawTable t;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    auto cells = split_line(line);
    if (t.columns.empty()) {
      t.columns = cells;
      continue;
    }
    if (cells.size() != t.columns.size())
      throw DataError(origin + ":" + std::to_string(lineno) + ": expected " +
                      std::to_string(t.columns.size()) + " fields, got " +
                      std::to_string(cells.size()));
    t.rows.push_back(std::move(cells));
  }
  if (t.columns.empty()) throw DataError(origin + ": empty file, no header row");
  return t;
}

RawTable read_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open input file: " + path);
  return read_csv(in, path);
}

// to_chars/from_chars keep the formatting locale-independent even when the
// library is loaded into a host process that called setlocale().
std::string fmt_double(double v) {
  char buf[40];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& cell, const std::string& where) {
  if (cell.empty()) throw DataError(where + ": missing value");
  double v = 0.0;
  auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (res.ec != std::errc() || res.ptr != cell.data() + cell.size())
    throw DataError(where + ": cannot parse '" + cell + "' as a number");
  return v;
}

}  // namespace blqr
