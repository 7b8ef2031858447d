#pragma once

#include <string>
#include <vector>

namespace dtn {

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

/// Standalone SVG documents with axes, tick labels and a legend.
std::string svg_line_plot(const std::string& title, const std::string& x_label,
                          const std::string& y_label, const std::vector<Series>& series);
std::string svg_scatter_plot(const std::string& title, const std::string& x_label,
                             const std::string& y_label, const std::vector<Series>& groups);
std::string svg_bar_chart(const std::string& title, const std::string& y_label,
                          const std::vector<std::string>& labels, const std::vector<double>& values);

}  // namespace dtn
