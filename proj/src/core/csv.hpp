#pragma once

#include <string>
#include <vector>

#include "core/common.hpp"

namespace ksmpc::csv {

// Table with named columns. Comment lines ("# key=value") round-trip as
// metadata so run logs can carry their manifest inline.
struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
  std::vector<std::pair<std::string, std::string>> metadata;

  int col(const std::string& name) const;
  void add_row(const std::vector<double>& r);
  double at(size_t row, const std::string& name) const;
};

void write(const std::string& path, const Table& t);
Table read(const std::string& path);

std::string format_double(double v);  // shortest round-trip formatting

}  // namespace ksmpc::csv
