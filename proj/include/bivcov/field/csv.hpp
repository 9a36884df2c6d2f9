#pragma once

// Data files: comma-separated, mandatory header naming the columns x[, y[, z]], component,
// value. Components are written 1 and 2. Target files need only the coordinate columns.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "bivcov/errors.hpp"
#include "bivcov/field/sample.hpp"

namespace bivcov {

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) {
    const auto b = cell.find_first_not_of(" \t\r");
    const auto e = cell.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? "" : cell.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

inline double parse_cell(const std::string& s, const std::string& column, std::size_t line) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw ParseError("column '" + column + "': not a number: '" + s + "'", line);
  }
  if (used != s.size()) throw ParseError("column '" + column + "': trailing characters in '" + s + "'", line);
  if (!std::isfinite(v)) throw ParseError("column '" + column + "': non-finite value", line);
  return v;
}

}  // namespace detail

struct CsvReadOptions {
  bool require_component = true;
  bool require_value = true;
};

inline FieldSample read_sample(std::istream& in, const CsvReadOptions& opt = {}) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") != std::string::npos) break;
  }
  if (line_no == 0 || line.find_first_not_of(" \t\r") == std::string::npos) throw ParseError("empty file", 0);
  if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) line = line.substr(3);  // UTF-8 BOM

  const auto header = detail::split_csv_line(line);
  std::map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (col.count(header[i])) throw ParseError("duplicate column '" + header[i] + "'", line_no);
    col[header[i]] = i;
  }
  if (!col.count("x")) throw ParseError("header lacks column 'x'", line_no);
  int dim = 1;
  if (col.count("y")) dim = 2;
  if (col.count("z")) {
    if (dim != 2) throw ParseError("column 'z' requires column 'y'", line_no);
    dim = 3;
  }
  const bool has_comp = col.count("component") > 0;
  const bool has_value = col.count("value") > 0;
  if (opt.require_component && !has_comp) throw ParseError("header lacks column 'component'", line_no);
  if (opt.require_value && !has_value) throw ParseError("header lacks column 'value'", line_no);

  FieldSample s;
  s.points.dim = dim;
  const char* names[3] = {"x", "y", "z"};
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto cells = detail::split_csv_line(line);
    if (cells.size() != header.size()) {
      throw ParseError("expected " + std::to_string(header.size()) + " fields, found " + std::to_string(cells.size()),
                       line_no);
    }
    std::array<double, 3> p{0.0, 0.0, 0.0};
    for (int k = 0; k < dim; ++k) p[k] = detail::parse_cell(cells[col[names[k]]], names[k], line_no);
    s.points.add(p);
    if (has_comp) {
      const double c = detail::parse_cell(cells[col["component"]], "component", line_no);
      if (c != 1.0 && c != 2.0) throw ParseError("component must be 1 or 2", line_no);
      s.component.push_back(static_cast<int>(c) - 1);
    }
    if (has_value) s.value.push_back(detail::parse_cell(cells[col["value"]], "value", line_no));
  }
  return s;
}

inline FieldSample read_sample_file(const std::string& path, const CsvReadOptions& opt = {}) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  return read_sample(in, opt);
}

inline void write_sample(std::ostream& out, const FieldSample& s) {
  const char* names[3] = {"x", "y", "z"};
  for (int k = 0; k < s.points.dim; ++k) out << names[k] << ',';
  out << "component,value\n";
  char buf[40];
  for (std::size_t i = 0; i < s.size(); ++i) {
    for (int k = 0; k < s.points.dim; ++k) {
      std::snprintf(buf, sizeof buf, "%.17g", s.points.coords[i][k]);
      out << buf << ',';
    }
    std::snprintf(buf, sizeof buf, "%.17g", s.value.empty() ? 0.0 : s.value[i]);
    out << s.component[i] + 1 << ',' << buf << '\n';
  }
}

}  // namespace bivcov
