#pragma once

#include <string>
#include <vector>

namespace ksmpc::svg {

struct Series {
  std::string label;
  std::string color;
  std::vector<double> x, y;
};

struct ChartOptions {
  std::string title, x_label, y_label;
  int width = 900, height = 360;
  std::vector<double> h_lines;  // horizontal guide lines (constraints)
};

void line_chart(const std::string& path, const std::vector<Series>& series,
                const ChartOptions& opt);

void histogram(const std::string& path, const std::vector<double>& mass,
               double lo, double hi, const ChartOptions& opt);

// scatter with a shaded horizontal band [-band, band]
void scatter_band(const std::string& path, const std::vector<Series>& series,
                  double band, const ChartOptions& opt);

}  // namespace ksmpc::svg
