#include "dtn/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace dtn {

namespace {

constexpr double kWidth = 640, kHeight = 420, kLeft = 70, kRight = 160, kTop = 40, kBottom = 50;
constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                    "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  void add(double v) {
    if (!std::isfinite(v)) return;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  void finish() {
    if (!std::isfinite(lo)) lo = 0, hi = 1;
    if (hi - lo < 1e-12) lo -= 0.5, hi += 0.5;
    const double pad = 0.05 * (hi - lo);
    lo -= pad;
    hi += pad;
  }
};

class Canvas {
 public:
  Canvas(const std::string& title, const std::string& x_label, const std::string& y_label, Range x,
         Range y)
      : x_(x), y_(y) {
    out_ << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
         << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\" font-family=\"sans-serif\">\n"
         << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
         << "<text x=\"" << kWidth / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">"
         << escape(title) << "</text>\n";
    const double x0 = kLeft, x1 = kWidth - kRight, y0 = kHeight - kBottom, y1 = kTop;
    out_ << "<line x1=\"" << x0 << "\" y1=\"" << y0 << "\" x2=\"" << x1 << "\" y2=\"" << y0
         << "\" stroke=\"black\"/>\n<line x1=\"" << x0 << "\" y1=\"" << y0 << "\" x2=\"" << x0
         << "\" y2=\"" << y1 << "\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 4; ++i) {
      const double xv = x_.lo + (x_.hi - x_.lo) * i / 4.0, yv = y_.lo + (y_.hi - y_.lo) * i / 4.0;
      out_ << "<text x=\"" << num(px(xv)) << "\" y=\"" << y0 + 16
           << "\" text-anchor=\"middle\" font-size=\"10\">" << num(xv) << "</text>\n"
           << "<text x=\"" << x0 - 6 << "\" y=\"" << num(py(yv) + 3)
           << "\" text-anchor=\"end\" font-size=\"10\">" << num(yv) << "</text>\n";
    }
    out_ << "<text x=\"" << (x0 + x1) / 2 << "\" y=\"" << kHeight - 12
         << "\" text-anchor=\"middle\" font-size=\"12\">" << escape(x_label) << "</text>\n"
         << "<text transform=\"translate(16," << (y0 + y1) / 2
         << ") rotate(-90)\" text-anchor=\"middle\" font-size=\"12\">" << escape(y_label)
         << "</text>\n";
  }

  double px(double v) const { return kLeft + (v - x_.lo) / (x_.hi - x_.lo) * (kWidth - kLeft - kRight); }
  double py(double v) const {
    return kHeight - kBottom - (v - y_.lo) / (y_.hi - y_.lo) * (kHeight - kTop - kBottom);
  }
  std::ostringstream& out() { return out_; }

  void legend(std::size_t i, const std::string& name) {
    const double y = kTop + 10 + 18.0 * static_cast<double>(i);
    out_ << "<rect x=\"" << kWidth - kRight + 12 << "\" y=\"" << y - 8
         << "\" width=\"10\" height=\"10\" fill=\"" << kPalette[i % 8] << "\"/>\n<text x=\""
         << kWidth - kRight + 28 << "\" y=\"" << y + 1 << "\" font-size=\"11\">" << escape(name)
         << "</text>\n";
  }

  std::string finish() {
    out_ << "</svg>\n";
    return out_.str();
  }

 private:
  Range x_, y_;
  std::ostringstream out_;
};

void check_series(const std::vector<Series>& series) {
  for (const Series& s : series) {
    if (s.x.size() != s.y.size()) throw std::invalid_argument("series '" + s.name + "' x/y length mismatch");
  }
}

}  // namespace

std::string svg_line_plot(const std::string& title, const std::string& x_label,
                          const std::string& y_label, const std::vector<Series>& series) {
  check_series(series);
  Range xr, yr;
  for (const Series& s : series) {
    for (double v : s.x) xr.add(v);
    for (double v : s.y) yr.add(v);
  }
  xr.finish();
  yr.finish();
  Canvas c(title, x_label, y_label, xr, yr);
  for (std::size_t i = 0; i < series.size(); ++i) {
    c.out() << "<polyline fill=\"none\" stroke-width=\"1.5\" stroke=\"" << kPalette[i % 8] << "\" points=\"";
    for (std::size_t k = 0; k < series[i].x.size(); ++k) {
      if (!std::isfinite(series[i].y[k])) continue;
      c.out() << num(c.px(series[i].x[k])) << ',' << num(c.py(series[i].y[k])) << ' ';
    }
    c.out() << "\"/>\n";
    c.legend(i, series[i].name);
  }
  return c.finish();
}

std::string svg_scatter_plot(const std::string& title, const std::string& x_label,
                             const std::string& y_label, const std::vector<Series>& groups) {
  check_series(groups);
  Range xr, yr;
  for (const Series& s : groups) {
    for (double v : s.x) xr.add(v);
    for (double v : s.y) yr.add(v);
  }
  xr.finish();
  yr.finish();
  Canvas c(title, x_label, y_label, xr, yr);
  for (std::size_t i = 0; i < groups.size(); ++i) {
    for (std::size_t k = 0; k < groups[i].x.size(); ++k) {
      c.out() << "<circle r=\"2.5\" fill-opacity=\"0.7\" fill=\"" << kPalette[i % 8] << "\" cx=\""
              << num(c.px(groups[i].x[k])) << "\" cy=\"" << num(c.py(groups[i].y[k])) << "\"/>\n";
    }
    c.legend(i, groups[i].name);
  }
  return c.finish();
}

std::string svg_bar_chart(const std::string& title, const std::string& y_label,
                          const std::vector<std::string>& labels, const std::vector<double>& values) {
  if (labels.size() != values.size()) throw std::invalid_argument("bar labels and values differ in length");
  Range xr, yr;
  xr.add(0);
  xr.add(static_cast<double>(values.size()));
  yr.add(0);
  for (double v : values) yr.add(v);
  yr.finish();
  yr.lo = std::min(0.0, yr.lo);
  Canvas c(title, "", y_label, Range{0, std::max<double>(1, static_cast<double>(values.size()))}, yr);
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double x0 = c.px(static_cast<double>(i) + 0.15), x1 = c.px(static_cast<double>(i) + 0.85);
    const double top = c.py(std::max(values[i], 0.0)), base = c.py(std::min(values[i], 0.0));
    c.out() << "<rect x=\"" << num(x0) << "\" y=\"" << num(top) << "\" width=\"" << num(x1 - x0)
            << "\" height=\"" << num(base - top) << "\" fill=\"" << kPalette[i % 8] << "\"/>\n";
    c.legend(i, labels[i] + " (" + num(values[i]) + ")");
  }
  return c.finish();
}

}  // namespace dtn
