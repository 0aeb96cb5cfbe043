#pragma once

// Plain-text formats. Centers CSV: first row `dim,<d>`, then `x1,...,xd,level`
// per center (level -1 when untagged). Density CSV: first row `dim,<d>`,
// then `x1,...,xd,rho`. Reals carry 17 significant digits.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "polyharm/density.hpp"
#include "polyharm/errors.hpp"
#include "polyharm/geometry.hpp"

namespace polyharm::io {

inline std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

inline double parse_real(const std::string& s, const std::string& where) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw InputError(where + ": not a number: '" + s + "'");
  }
  if (used != s.size()) throw InputError(where + ": trailing characters in '" + s + "'");
  return v;
}

inline long parse_int(const std::string& s, const std::string& where) {
  std::size_t used = 0;
  long v = 0;
  try {
    v = std::stol(s, &used);
  } catch (const std::exception&) {
    throw InputError(where + ": not an integer: '" + s + "'");
  }
  if (used != s.size()) throw InputError(where + ": trailing characters in '" + s + "'");
  return v;
}

struct Table {
  std::size_t dim = 0;
  std::vector<std::vector<double>> rows;  // each row: d coordinates + one value
};

inline std::string strip_cr(std::string s) {
  if (!s.empty() && s.back() == '\r') s.pop_back();
  return s;
}

/// Reads a `dim,<d>` headed table with d + 1 numeric columns per row.
inline Table read_point_table(std::istream& in, const std::string& name) {
  std::string line;
  if (!std::getline(in, line)) throw InputError(name + ": empty file");
  const auto head = split_csv_line(strip_cr(line));
  if (head.size() != 2 || head[0] != "dim") throw InputError(name + ": header must be 'dim,<d>'");
  const long d = parse_int(head[1], name + " header");
  if (d < 1) throw InputError(name + ": dimension must be positive");
  Table t;
  t.dim = static_cast<std::size_t>(d);
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    line = strip_cr(line);
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    const std::string where = name + " line " + std::to_string(lineno);
    if (cells.size() != t.dim + 1) throw InputError(where + ": expected " + std::to_string(t.dim + 1) + " fields");
    std::vector<double> row;
    for (const auto& c : cells) row.push_back(parse_real(c, where));
    t.rows.push_back(std::move(row));
  }
  if (t.rows.empty()) throw InputError(name + ": no data rows");
  return t;
}

inline void write_centers(std::ostream& out, const CenterSet& cs) {
  out << "dim," << cs.dim() << "\n";
  for (std::size_t i = 0; i < cs.size(); ++i) {
    for (double c : cs.point(i)) out << format_real(c) << ",";
    out << cs.level(i).value_or(-1) << "\n";
  }
}

inline CenterSet read_centers(std::istream& in, const std::string& name = "centers") {
  const Table t = read_point_table(in, name);
  std::vector<Point> pts;
  std::vector<int> levels;
  bool tagged = false;
  for (const auto& row : t.rows) {
    pts.emplace_back(std::vector<double>(row.begin(), row.end() - 1));
    const double lv = row.back();
    if (lv != std::floor(lv)) throw InputError(name + ": level must be an integer");
    levels.push_back(static_cast<int>(lv));
    tagged = tagged || lv >= 0;
  }
  if (!tagged) levels.clear();
  return CenterSet(t.dim, pts, std::move(levels));
}

inline void write_density(std::ostream& out, const DensityField& df) {
  out << "dim," << df.dim() << "\n";
  for (std::size_t i = 0; i < df.size(); ++i) {
    for (double c : df.point(i).coords()) out << format_real(c) << ",";
    out << format_real(df.rho(i)) << "\n";
  }
}

inline DensityField read_density(std::istream& in, const DensityParams& params = {},
                                 const std::string& name = "density") {
  const Table t = read_point_table(in, name);
  std::vector<Point> pts;
  std::vector<double> rho;
  for (const auto& row : t.rows) {
    pts.emplace_back(std::vector<double>(row.begin(), row.end() - 1));
    rho.push_back(row.back());
  }
  return DensityField(t.dim, std::move(pts), std::move(rho), params);
}

template <class Fn>
void with_output_file(const std::string& path, Fn&& fn) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot open '" + path + "' for writing");
  fn(out);
  if (!out) throw InputError("failed writing '" + path + "'");
}

template <class Fn>
auto with_input_file(const std::string& path, Fn&& fn) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path + "'");
  return fn(in);
}

}  // namespace polyharm::io
