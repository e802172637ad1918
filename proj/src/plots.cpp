#include "nonsmooth/plots.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace nonsmooth {

namespace {

constexpr double kWidth = 640, kHeight = 400;
constexpr double kLeft = 70, kRight = 130, kTop = 40, kBottom = 50;
const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

std::string escape(const std::string& s) {
  std::string out;
  for (char ch : s) {
    switch (ch) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += ch;
    }
  }
  return out;
}

// Maps data values onto the plot's vertical pixel range.
struct YAxis {
  double lo, hi;
  double pixel(double v) const {
    const double t = hi > lo ? (v - lo) / (hi - lo) : 0.5;
    return kTop + (1.0 - t) * (kHeight - kTop - kBottom);
  }
};

void header(std::ostringstream& os, const std::string& title, const std::string& y_label) {
  os.precision(6);
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
     << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << kWidth / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << escape(title)
     << "</text>\n";
  os << "<text transform=\"translate(16," << kHeight / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
     << escape(y_label) << "</text>\n";
}

void axes(std::ostringstream& os, const YAxis& y, bool log_y) {
  const double x0 = kLeft, x1 = kWidth - kRight, yb = kHeight - kBottom;
  os << "<line x1=\"" << x0 << "\" y1=\"" << kTop << "\" x2=\"" << x0 << "\" y2=\"" << yb
     << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << x0 << "\" y1=\"" << yb << "\" x2=\"" << x1 << "\" y2=\"" << yb << "\" stroke=\"black\"/>\n";
  const int ticks = 5;
  for (int i = 0; i <= ticks; ++i) {
    const double v = y.lo + (y.hi - y.lo) * i / ticks;
    const double py = y.pixel(v);
    os << "<line x1=\"" << x0 - 4 << "\" y1=\"" << py << "\" x2=\"" << x0 << "\" y2=\"" << py
       << "\" stroke=\"black\"/>\n";
    os << "<text x=\"" << x0 - 6 << "\" y=\"" << py + 4 << "\" text-anchor=\"end\">";
    if (log_y) {
      os << "1e" << std::lround(v * 10) / 10.0;
    } else {
      os << v;
    }
    os << "</text>\n";
  }
}

void legend(std::ostringstream& os, const std::vector<std::string>& series) {
  for (std::size_t i = 0; i < series.size(); ++i) {
    const double y = kTop + 18.0 * static_cast<double>(i);
    os << "<rect x=\"" << kWidth - kRight + 15 << "\" y=\"" << y << "\" width=\"12\" height=\"12\" fill=\""
       << kPalette[i % 6] << "\"/>\n";
    os << "<text x=\"" << kWidth - kRight + 32 << "\" y=\"" << y + 10 << "\">" << escape(series[i]) << "</text>\n";
  }
}

std::vector<std::string> names_of(const std::vector<BoxGroup>& groups) {
  std::vector<std::string> names;
  for (const auto& g : groups)
    for (const auto& b : g.boxes)
      if (std::find(names.begin(), names.end(), b.first) == names.end()) names.push_back(b.first);
  return names;
}

std::vector<std::string> names_of(const std::vector<BarGroup>& groups) {
  std::vector<std::string> names;
  for (const auto& g : groups)
    for (const auto& b : g.bars)
      if (std::find(names.begin(), names.end(), b.first) == names.end()) names.push_back(b.first);
  return names;
}

std::size_t index_of(const std::vector<std::string>& names, const std::string& n) {
  return static_cast<std::size_t>(std::find(names.begin(), names.end(), n) - names.begin());
}

}  // namespace

std::string box_plot_svg(const std::string& title, const std::string& y_label, const std::vector<BoxGroup>& groups,
                         bool log_y) {
  auto tr = [&](double v) { return log_y ? std::log10(std::max(v, 1e-16)) : v; };
  double lo = HUGE_VAL, hi = -HUGE_VAL;
  for (const auto& g : groups) {
    for (const auto& [_, b] : g.boxes) {
      lo = std::min(lo, tr(b.min));
      hi = std::max(hi, tr(b.max));
    }
  }
  if (!(lo <= hi)) lo = 0.0, hi = 1.0;
  const double pad = 0.05 * std::max(hi - lo, 1e-12);
  const YAxis y{lo - pad, hi + pad};
  const std::vector<std::string> names = names_of(groups);

  std::ostringstream os;
  header(os, title, y_label);
  axes(os, y, log_y);
  const double span = (kWidth - kLeft - kRight) / std::max<double>(1.0, static_cast<double>(groups.size()));
  const double box_w = span * 0.7 / std::max<double>(1.0, static_cast<double>(names.size()));
  for (std::size_t gi = 0; gi < groups.size(); ++gi) {
    const double gx = kLeft + span * static_cast<double>(gi) + span * 0.15;
    for (const auto& [name, b] : groups[gi].boxes) {
      const std::size_t si = index_of(names, name);
      const double x = gx + box_w * static_cast<double>(si), cx = x + box_w / 2;
      const char* color = kPalette[si % 6];
      os << "<line x1=\"" << cx << "\" y1=\"" << y.pixel(tr(b.min)) << "\" x2=\"" << cx << "\" y2=\""
         << y.pixel(tr(b.max)) << "\" stroke=\"" << color << "\"/>\n";
      os << "<rect x=\"" << x + 2 << "\" y=\"" << y.pixel(tr(b.q3)) << "\" width=\"" << box_w - 4 << "\" height=\""
         << std::max(0.5, y.pixel(tr(b.q1)) - y.pixel(tr(b.q3))) << "\" fill=\"" << color
         << "\" fill-opacity=\"0.35\" stroke=\"" << color << "\"/>\n";
      os << "<line x1=\"" << x + 2 << "\" y1=\"" << y.pixel(tr(b.median)) << "\" x2=\"" << x + box_w - 2
         << "\" y2=\"" << y.pixel(tr(b.median)) << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    }
    os << "<text x=\"" << kLeft + span * (static_cast<double>(gi) + 0.5) << "\" y=\"" << kHeight - kBottom + 18
       << "\" text-anchor=\"middle\">" << escape(groups[gi].label) << "</text>\n";
  }
  legend(os, names);
  os << "</svg>\n";
  return os.str();
}

std::string bar_chart_svg(const std::string& title, const std::string& y_label, const std::vector<BarGroup>& groups) {
  double hi = 0.0;
  for (const auto& g : groups)
    for (const auto& [_, v] : g.bars) hi = std::max(hi, v);
  const YAxis y{0.0, hi > 0.0 ? hi * 1.05 : 1.0};
  const std::vector<std::string> names = names_of(groups);

  std::ostringstream os;
  header(os, title, y_label);
  axes(os, y, false);
  const double span = (kWidth - kLeft - kRight) / std::max<double>(1.0, static_cast<double>(groups.size()));
  const double bar_w = span * 0.7 / std::max<double>(1.0, static_cast<double>(names.size()));
  for (std::size_t gi = 0; gi < groups.size(); ++gi) {
    const double gx = kLeft + span * static_cast<double>(gi) + span * 0.15;
    for (const auto& [name, v] : groups[gi].bars) {
      const std::size_t si = index_of(names, name);
      const double x = gx + bar_w * static_cast<double>(si);
      os << "<rect x=\"" << x + 2 << "\" y=\"" << y.pixel(v) << "\" width=\"" << bar_w - 4 << "\" height=\""
         << y.pixel(0.0) - y.pixel(v) << "\" fill=\"" << kPalette[si % 6] << "\"/>\n";
      os << "<text x=\"" << x + bar_w / 2 << "\" y=\"" << y.pixel(v) - 3 << "\" text-anchor=\"middle\">" << v
         << "</text>\n";
    }
    os << "<text x=\"" << kLeft + span * (static_cast<double>(gi) + 0.5) << "\" y=\"" << kHeight - kBottom + 18
       << "\" text-anchor=\"middle\">" << escape(groups[gi].label) << "</text>\n";
  }
  legend(os, names);
  os << "</svg>\n";
  return os.str();
}

}  // namespace nonsmooth
