#include "core/csv.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

namespace ksmpc::csv {

int Table::col(const std::string& name) const {
  for (size_t i = 0; i < columns.size(); ++i)
    if (columns[i] == name) return static_cast<int>(i);
  fail(ErrorCode::Io, "csv: no column named '" + name + "'");
}

void Table::add_row(const std::vector<double>& r) {
  require(r.size() == columns.size(), ErrorCode::DimensionMismatch,
          "csv: row width mismatch");
  rows.push_back(r);
}

double Table::at(size_t row, const std::string& name) const {
  return rows.at(row).at(static_cast<size_t>(col(name)));
}

std::string format_double(double v) {
  char buf[32];
  // %.17g always round-trips; prefer the shortest representation that does
  for (int prec = 7; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) return buf;
  }
  return buf;
}

void write(const std::string& path, const Table& t) {
  std::ofstream out(path);
  require(out.good(), ErrorCode::Io, "csv: cannot open for write: " + path);
  for (const auto& [k, v] : t.metadata) out << "# " << k << "=" << v << "\n";
  for (size_t i = 0; i < t.columns.size(); ++i)
    out << (i ? "," : "") << t.columns[i];
  out << "\n";
  for (const auto& row : t.rows) {
    for (size_t i = 0; i < row.size(); ++i)
      out << (i ? "," : "") << format_double(row[i]);
    out << "\n";
  }
  require(out.good(), ErrorCode::Io, "csv: write failed: " + path);
}

Table read(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), ErrorCode::Io, "csv: cannot open for read: " + path);
  Table t;
  std::string line;
  bool header_done = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::string body = line.substr(1);
      size_t start = body.find_first_not_of(' ');
      if (start == std::string::npos) continue;
      body = body.substr(start);
      size_t eq = body.find('=');
      if (eq != std::string::npos)
        t.metadata.emplace_back(body.substr(0, eq), body.substr(eq + 1));
      continue;
    }
    std::stringstream ss(line);
    std::string cell;
    if (!header_done) {
      while (std::getline(ss, cell, ',')) t.columns.push_back(cell);
      header_done = true;
      continue;
    }
    std::vector<double> row;
    row.reserve(t.columns.size());
    while (std::getline(ss, cell, ',')) row.push_back(std::strtod(cell.c_str(), nullptr));
    require(row.size() == t.columns.size(), ErrorCode::Io,
            "csv: ragged row in " + path);
    t.rows.push_back(std::move(row));
  }
  return t;
}

}  // namespace ksmpc::csv
