#include "core/svg.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "core/common.hpp"

namespace ksmpc::svg {

namespace {

constexpr int kMarginL = 60, kMarginR = 20, kMarginT = 30, kMarginB = 45;

struct Frame {
  double x_lo, x_hi, y_lo, y_hi;
  int width, height;
  double px(double x) const {
    return kMarginL + (x - x_lo) / (x_hi - x_lo) * (width - kMarginL - kMarginR);
  }
  double py(double y) const {
    return height - kMarginB -
           (y - y_lo) / (y_hi - y_lo) * (height - kMarginT - kMarginB);
  }
};

void open_svg(std::ofstream& out, const ChartOptions& opt) {
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << opt.width
      << "\" height=\"" << opt.height << "\" font-family=\"sans-serif\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << opt.width / 2 << "\" y=\"18\" text-anchor=\"middle\" "
      << "font-size=\"14\">" << opt.title << "</text>\n";
}

void axes(std::ofstream& out, const Frame& f, const ChartOptions& opt) {
  out << "<rect x=\"" << kMarginL << "\" y=\"" << kMarginT << "\" width=\""
      << f.width - kMarginL - kMarginR << "\" height=\""
      << f.height - kMarginT - kMarginB
      << "\" fill=\"none\" stroke=\"#888\" stroke-width=\"1\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double xv = f.x_lo + (f.x_hi - f.x_lo) * i / 4;
    const double yv = f.y_lo + (f.y_hi - f.y_lo) * i / 4;
    char bx[32], by[32];
    std::snprintf(bx, sizeof(bx), "%.3g", xv);
    std::snprintf(by, sizeof(by), "%.3g", yv);
    out << "<text x=\"" << f.px(xv) << "\" y=\"" << f.height - kMarginB + 16
        << "\" font-size=\"10\" text-anchor=\"middle\">" << bx << "</text>\n";
    out << "<text x=\"" << kMarginL - 6 << "\" y=\"" << f.py(yv) + 3
        << "\" font-size=\"10\" text-anchor=\"end\">" << by << "</text>\n";
  }
  out << "<text x=\"" << (kMarginL + f.width - kMarginR) / 2 << "\" y=\""
      << f.height - 8 << "\" font-size=\"11\" text-anchor=\"middle\">"
      << opt.x_label << "</text>\n";
  out << "<text x=\"14\" y=\"" << (kMarginT + f.height - kMarginB) / 2
      << "\" font-size=\"11\" text-anchor=\"middle\" transform=\"rotate(-90 14 "
      << (kMarginT + f.height - kMarginB) / 2 << ")\">" << opt.y_label
      << "</text>\n";
}

const char* default_color(size_t i) {
  static const char* colors[] = {"#2c7fb8", "#d95f02", "#1b9e77",
                                 "#7570b3", "#e7298a", "#666666"};
  return colors[i % 6];
}

}  // namespace

void line_chart(const std::string& path, const std::vector<Series>& series,
                const ChartOptions& opt) {
  std::ofstream out(path);
  ksmpc::require(out.good(), ksmpc::ErrorCode::Io, "svg: cannot write " + path);
  double x_lo = std::numeric_limits<double>::max(), x_hi = -x_lo;
  double y_lo = x_lo, y_hi = -x_lo;
  for (const auto& s : series)
    for (size_t i = 0; i < s.x.size(); ++i) {
      x_lo = std::min(x_lo, s.x[i]); x_hi = std::max(x_hi, s.x[i]);
      y_lo = std::min(y_lo, s.y[i]); y_hi = std::max(y_hi, s.y[i]);
    }
  for (double h : opt.h_lines) {
    y_lo = std::min(y_lo, h);
    y_hi = std::max(y_hi, h);
  }
  if (x_hi <= x_lo) x_hi = x_lo + 1;
  const double pad = 0.05 * (y_hi - y_lo + 1e-12);
  y_lo -= pad; y_hi += pad;

  Frame f{x_lo, x_hi, y_lo, y_hi, opt.width, opt.height};
  open_svg(out, opt);
  axes(out, f, opt);
  for (double h : opt.h_lines)
    out << "<line x1=\"" << f.px(x_lo) << "\" y1=\"" << f.py(h) << "\" x2=\""
        << f.px(x_hi) << "\" y2=\"" << f.py(h)
        << "\" stroke=\"black\" stroke-dasharray=\"6 3\" stroke-width=\"1\"/>\n";
  for (size_t si = 0; si < series.size(); ++si) {
    const auto& s = series[si];
    const std::string color = s.color.empty() ? default_color(si) : s.color;
    out << "<polyline fill=\"none\" stroke=\"" << color
        << "\" stroke-width=\"1.3\" points=\"";
    for (size_t i = 0; i < s.x.size(); ++i)
      out << f.px(s.x[i]) << "," << f.py(s.y[i]) << " ";
    out << "\"/>\n";
    out << "<text x=\"" << opt.width - kMarginR - 8 << "\" y=\""
        << kMarginT + 16 + 14 * si << "\" font-size=\"11\" text-anchor=\"end\" fill=\""
        << color << "\">" << s.label << "</text>\n";
  }
  out << "</svg>\n";
}

void histogram(const std::string& path, const std::vector<double>& mass,
               double lo, double hi, const ChartOptions& opt) {
  std::ofstream out(path);
  ksmpc::require(out.good(), ksmpc::ErrorCode::Io, "svg: cannot write " + path);
  const double y_max = mass.empty() ? 1.0 : *std::max_element(mass.begin(), mass.end());
  Frame f{lo, hi, 0.0, y_max * 1.1 + 1e-12, opt.width, opt.height};
  open_svg(out, opt);
  axes(out, f, opt);
  const double bw = (hi - lo) / std::max<size_t>(1, mass.size());
  for (size_t i = 0; i < mass.size(); ++i) {
    const double x0 = lo + i * bw;
    out << "<rect x=\"" << f.px(x0) << "\" y=\"" << f.py(mass[i]) << "\" width=\""
        << (f.px(x0 + bw) - f.px(x0)) * 0.92 << "\" height=\""
        << f.py(0) - f.py(mass[i]) << "\" fill=\"#2c7fb8\"/>\n";
  }
  out << "</svg>\n";
}

void scatter_band(const std::string& path, const std::vector<Series>& series,
                  double band, const ChartOptions& opt) {
  std::ofstream out(path);
  ksmpc::require(out.good(), ksmpc::ErrorCode::Io, "svg: cannot write " + path);
  double x_lo = 0, x_hi = 1, y_abs = band * 1.2;
  bool any = false;
  for (const auto& s : series)
    for (size_t i = 0; i < s.x.size(); ++i) {
      if (!any) { x_lo = x_hi = s.x[i]; any = true; }
      x_lo = std::min(x_lo, s.x[i]); x_hi = std::max(x_hi, s.x[i]);
      y_abs = std::max(y_abs, std::abs(s.y[i]) * 1.05);
    }
  Frame f{x_lo, x_hi, -y_abs, y_abs, opt.width, opt.height};
  open_svg(out, opt);
  out << "<rect x=\"" << f.px(x_lo) << "\" y=\"" << f.py(band) << "\" width=\""
      << f.px(x_hi) - f.px(x_lo) << "\" height=\"" << f.py(-band) - f.py(band)
      << "\" fill=\"#fde0ef\"/>\n";
  axes(out, f, opt);
  for (size_t si = 0; si < series.size(); ++si) {
    const auto& s = series[si];
    const std::string color = s.color.empty() ? default_color(si) : s.color;
    for (size_t i = 0; i < s.x.size(); ++i)
      out << "<circle cx=\"" << f.px(s.x[i]) << "\" cy=\"" << f.py(s.y[i])
          << "\" r=\"1.2\" fill=\"" << color << "\"/>\n";
    out << "<text x=\"" << opt.width - kMarginR - 8 << "\" y=\""
        << kMarginT + 16 + 14 * si << "\" font-size=\"11\" text-anchor=\"end\" fill=\""
        << color << "\">" << s.label << "</text>\n";
  }
  out << "</svg>\n";
}

}  // namespace ksmpc::svg
