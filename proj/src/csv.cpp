#include "hst/csv.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

#include "hst/errors.hpp"

namespace hst {

namespace {

std::vector<std::string> split_row(const std::string& line) {
  std::vector<std::string> tokens;
  std::string cur;
  for (char ch : line) {
    if (ch == ',' || ch == ' ' || ch == '\t' || ch == '\r') {
      if (!cur.empty()) tokens.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  if (!cur.empty()) tokens.push_back(std::move(cur));
  return tokens;
}

bool parse_value(const std::string& tok, double& out) {
  const char* s = tok.c_str();
  char* end = nullptr;
  out = std::strtod(s, &end);
  return end == s + tok.size() && end != s;
}

}  // namespace

Dataset read_csv(std::istream& in) {
  std::string line;
  std::vector<double> coords;
  std::size_t dim = 0;
  std::size_t row_no = 0;
  bool saw_rows = false;

  while (std::getline(in, line)) {
    ++row_no;
    auto tokens = split_row(line);
    if (tokens.empty()) continue;

    std::vector<double> row(tokens.size());
    bool numeric = true;
    for (std::size_t j = 0; j < tokens.size(); ++j)
      if (!parse_value(tokens[j], row[j])) {
        numeric = false;
        break;
      }

    if (!numeric) {
      // Only the leading row may be non-numeric (a header).
      if (!saw_rows) continue;
      throw DataError("row " + std::to_string(row_no) +
                      ": unparseable value");
    }
    for (double v : row)
      if (!std::isfinite(v))
        throw DataError("row " + std::to_string(row_no) +
                        ": invalid coordinate");

    if (!saw_rows) {
      dim = row.size();
      saw_rows = true;
    } else if (row.size() != dim) {
      throw DataError("row " + std::to_string(row_no) + ": expected " +
                      std::to_string(dim) + " columns, got " +
                      std::to_string(row.size()));
    }
    coords.insert(coords.end(), row.begin(), row.end());
  }

  if (!saw_rows) throw DataError("empty dataset");
  return Dataset(dim, std::move(coords));
}

Dataset read_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  return read_csv(in);
}

void write_csv(std::ostream& out, const Dataset& data) {
  char buf[64];
  for (std::size_t i = 0; i < data.size(); ++i) {
    auto p = data.point(i);
    for (std::size_t j = 0; j < p.size(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", p[j]);
      out << (j ? "," : "") << buf;
    }
    out << '\n';
  }
}

void write_csv_file(const std::string& path, const Dataset& data) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open " + path + " for writing");
  write_csv(out, data);
}

}  // namespace hst
