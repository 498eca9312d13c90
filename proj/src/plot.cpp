#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "glmrl/error.hpp"
#include "glmrl/harness.hpp"

namespace glmrl {

namespace {

constexpr double kWidth = 800.0;
constexpr double kHeight = 500.0;
constexpr double kMarginLeft = 70.0;
constexpr double kMarginRight = 150.0;
constexpr double kMarginTop = 30.0;
constexpr double kMarginBottom = 50.0;

const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};

std::string fmt(double v, const char* spec = "%.2f") {
  char buf[48];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

void validate(const AggregateTable& table) {
  if (table.series.empty()) throw ParseError("aggregate table has no series to plot");
  if (table.episodes.empty()) throw ParseError("aggregate table has no data rows");
  for (const auto& s : table.series) {
    if (s.mean.size() != table.episodes.size() || s.stddev.size() != table.episodes.size()) {
      throw ParseError("series '" + s.name + "' does not match the episode column");
    }
  }
}

}  // namespace

PlotBounds plot_bounds(const AggregateTable& table) {
  validate(table);
  PlotBounds b;
  const auto [xmin, xmax] = std::minmax_element(table.episodes.begin(), table.episodes.end());
  b.x_min = *xmin;
  b.x_max = *xmax;
  b.y_min = std::numeric_limits<double>::infinity();
  b.y_max = -std::numeric_limits<double>::infinity();
  for (const auto& s : table.series) {
    for (std::size_t i = 0; i < s.mean.size(); ++i) {
      if (!std::isfinite(s.mean[i])) continue;
      const double sd = std::isfinite(s.stddev[i]) ? s.stddev[i] : 0.0;
      b.y_min = std::min(b.y_min, s.mean[i] - sd);
      b.y_max = std::max(b.y_max, s.mean[i] + sd);
    }
  }
  if (!std::isfinite(b.y_min)) {
    b.y_min = 0.0;
    b.y_max = 1.0;
  }
  auto pad = [](double& lo, double& hi) {
    double span = hi - lo;
    if (span <= 0.0) span = std::max(1.0, std::abs(lo));
    lo -= 0.05 * span;
    hi += 0.05 * span;
  };
  pad(b.x_min, b.x_max);
  pad(b.y_min, b.y_max);
  return b;
}

std::string render_svg(const AggregateTable& table) {
  const PlotBounds b = plot_bounds(table);
  const double plot_w = kWidth - kMarginLeft - kMarginRight;
  const double plot_h = kHeight - kMarginTop - kMarginBottom;
  auto sx = [&](double x) { return kMarginLeft + (x - b.x_min) / (b.x_max - b.x_min) * plot_w; };
  auto sy = [&](double y) { return kMarginTop + (b.y_max - y) / (b.y_max - b.y_min) * plot_h; };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
      << "\" viewBox=\"0 0 " << kWidth << " " << kHeight << "\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<rect x=\"" << kMarginLeft << "\" y=\"" << kMarginTop << "\" width=\"" << plot_w
      << "\" height=\"" << plot_h << "\" fill=\"none\" stroke=\"black\"/>\n";

  for (int i = 0; i <= 4; ++i) {
    const double x = b.x_min + (b.x_max - b.x_min) * i / 4.0;
    const double y = b.y_min + (b.y_max - b.y_min) * i / 4.0;
    svg << "<text x=\"" << fmt(sx(x)) << "\" y=\"" << fmt(kHeight - kMarginBottom + 18)
        << "\" font-size=\"12\" text-anchor=\"middle\">" << fmt(x, "%.0f") << "</text>\n"
        << "<text x=\"" << fmt(kMarginLeft - 6) << "\" y=\"" << fmt(sy(y) + 4)
        << "\" font-size=\"12\" text-anchor=\"end\">" << fmt(y, "%.3g") << "</text>\n";
  }
  svg << "<text x=\"" << fmt(kMarginLeft + plot_w / 2) << "\" y=\"" << fmt(kHeight - 10)
      << "\" font-size=\"13\" text-anchor=\"middle\">episode</text>\n"
      << "<text x=\"16\" y=\"" << fmt(kMarginTop + plot_h / 2)
      << "\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
      << fmt(kMarginTop + plot_h / 2) << ")\">cumulative regret</text>\n";

  for (std::size_t k = 0; k < table.series.size(); ++k) {
    const auto& s = table.series[k];
    const char* color = kPalette[k % std::size(kPalette)];
    std::ostringstream upper;
    std::ostringstream lower;
    std::ostringstream line;
    for (std::size_t i = 0; i < table.episodes.size(); ++i) {
      if (!std::isfinite(s.mean[i])) continue;
      const double sd = std::isfinite(s.stddev[i]) ? s.stddev[i] : 0.0;
      const double x = sx(table.episodes[i]);
      upper << fmt(x) << "," << fmt(sy(s.mean[i] + sd)) << " ";
      line << fmt(x) << "," << fmt(sy(s.mean[i])) << " ";
    }
    for (std::size_t i = table.episodes.size(); i-- > 0;) {
      if (!std::isfinite(s.mean[i])) continue;
      const double sd = std::isfinite(s.stddev[i]) ? s.stddev[i] : 0.0;
      lower << fmt(sx(table.episodes[i])) << "," << fmt(sy(s.mean[i] - sd)) << " ";
    }
    svg << "<polygon points=\"" << upper.str() << lower.str() << "\" fill=\"" << color
        << "\" fill-opacity=\"0.2\" stroke=\"none\"/>\n"
        << "<polyline points=\"" << line.str() << "\" fill=\"none\" stroke=\"" << color
        << "\" stroke-width=\"1.5\"/>\n"
        << "<text x=\"" << fmt(kWidth - kMarginRight + 10) << "\" y=\"" << fmt(kMarginTop + 16 + 18.0 * k)
        << "\" font-size=\"13\" fill=\"" << color << "\">" << s.name << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

void emit_plot(const std::filesystem::path& aggregate_csv, const std::filesystem::path& svg_out) {
  std::ifstream in(aggregate_csv);
  if (!in) throw IoError("cannot read " + aggregate_csv.string());
  const AggregateTable table = read_aggregate_csv(in);
  const std::string svg = render_svg(table);
  std::ofstream out(svg_out);
  if (!out) throw IoError("cannot write " + svg_out.string());
  out << svg;
}

}  // namespace glmrl
