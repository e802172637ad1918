#pragma once

#include <string>
#include <utility>
#include <vector>

namespace nonsmooth {

// Minimal standalone SVG charts for experiment summaries.

struct BoxStats {
  double min = 0.0, q1 = 0.0, median = 0.0, q3 = 0.0, max = 0.0;
};

struct BoxGroup {
  std::string label;
  std::vector<std::pair<std::string, BoxStats>> boxes;  // series name, stats
};

/// Side-by-side box plots per group. With log_y, values are clamped to
/// 1e-16 before taking log10.
std::string box_plot_svg(const std::string& title, const std::string& y_label, const std::vector<BoxGroup>& groups,
                         bool log_y);

struct BarGroup {
  std::string label;
  std::vector<std::pair<std::string, double>> bars;  // series name, value
};

std::string bar_chart_svg(const std::string& title, const std::string& y_label, const std::vector<BarGroup>& groups);

}  // namespace nonsmooth
