#include "gridsiting/plot.h"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "gridsiting/errors.h"

namespace gridsiting {
namespace {

constexpr double kWidth = 720.0;
constexpr double kHeight = 480.0;
constexpr double kLeft = 90.0;
constexpr double kRight = 200.0;  // room for the legend
constexpr double kTop = 30.0;
constexpr double kBottom = 60.0;

constexpr const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                   "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

struct Series {
  std::string name;
  std::vector<FrontierPoint> points;
};

struct Axis {
  double lo;
  double hi;

  double span() const { return hi - lo; }
};

Axis padded(double lo, double hi) {
  if (hi - lo <= 1e-12 * std::max(1.0, std::fabs(hi))) {
    const double pad = std::max(1.0, std::fabs(hi) * 0.05);
    return {lo - pad, hi + pad};
  }
  const double pad = 0.05 * (hi - lo);
  return {lo - pad, hi + pad};
}

}  // namespace

std::string render_frontier_svg(std::span<const FrontierPoint> points) {
  std::vector<Series> series;
  for (const FrontierPoint& p : points) {
    if (p.failed()) continue;
    const std::string name = fmt::format("{} ({})", to_string(p.label), p.dependence);
    auto it = std::find_if(series.begin(), series.end(),
                           [&](const Series& s) { return s.name == name; });
    if (it == series.end()) {
      series.push_back(Series{name, {}});
      it = series.end() - 1;
    }
    it->points.push_back(p);
  }
  if (series.empty()) throw ValidationError("no data rows");

  double xmin = INFINITY, xmax = -INFINITY, ymin = INFINITY, ymax = -INFINITY;
  for (Series& s : series) {
    s.points = pareto_filter(s.points);
    std::stable_sort(s.points.begin(), s.points.end(),
                     [](const FrontierPoint& a, const FrontierPoint& b) {
                       return a.oos_avg_cost < b.oos_avg_cost;
                     });
    for (const FrontierPoint& p : s.points) {
      xmin = std::min(xmin, p.oos_avg_cost);
      xmax = std::max(xmax, p.oos_avg_cost);
      ymin = std::min(ymin, p.oos_tail_shed);
      ymax = std::max(ymax, p.oos_tail_shed);
    }
  }
  const Axis ax = padded(xmin, xmax);
  const Axis ay = padded(std::min(0.0, ymin), ymax);
  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kHeight - kTop - kBottom;
  auto px = [&](double v) { return kLeft + (v - ax.lo) / ax.span() * plot_w; };
  auto py = [&](double v) { return kTop + plot_h - (v - ay.lo) / ay.span() * plot_h; };

  std::ostringstream out;
  fmt::print(out,
             "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" "
             "viewBox=\"0 0 {} {}\" font-family=\"sans-serif\" font-size=\"12\">\n",
             kWidth, kHeight, kWidth, kHeight);
  fmt::print(out, "<rect x=\"0\" y=\"0\" width=\"{}\" height=\"{}\" fill=\"white\"/>\n",
             kWidth, kHeight);
  fmt::print(out,
             "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" "
             "stroke=\"black\"/>\n",
             kLeft, kTop, plot_w, plot_h);

  for (int t = 0; t <= 4; ++t) {
    const double xv = ax.lo + ax.span() * t / 4.0;
    const double yv = ay.lo + ay.span() * t / 4.0;
    fmt::print(out,
               "<line x1=\"{0:.2f}\" y1=\"{1:.2f}\" x2=\"{0:.2f}\" y2=\"{2:.2f}\" "
               "stroke=\"black\"/><text x=\"{0:.2f}\" y=\"{3:.2f}\" "
               "text-anchor=\"middle\">{4:.6g}</text>\n",
               px(xv), kTop + plot_h, kTop + plot_h + 5, kTop + plot_h + 20, xv);
    fmt::print(out,
               "<line x1=\"{0:.2f}\" y1=\"{1:.2f}\" x2=\"{2:.2f}\" y2=\"{1:.2f}\" "
               "stroke=\"black\"/><text x=\"{3:.2f}\" y=\"{4:.2f}\" "
               "text-anchor=\"end\">{5:.6g}</text>\n",
               kLeft - 5, py(yv), kLeft, kLeft - 8, py(yv) + 4, yv);
  }
  fmt::print(out,
             "<text class=\"axis-label\" x=\"{:.2f}\" y=\"{:.2f}\" "
             "text-anchor=\"middle\">Average cost ($/h)</text>\n",
             kLeft + plot_w / 2, kHeight - 15);
  fmt::print(out,
             "<text class=\"axis-label\" x=\"20\" y=\"{:.2f}\" text-anchor=\"middle\" "
             "transform=\"rotate(-90 20 {:.2f})\">Tail load shed (MW)</text>\n",
             kTop + plot_h / 2, kTop + plot_h / 2);

  for (std::size_t k = 0; k < series.size(); ++k) {
    const Series& s = series[k];
    const char* color = kColors[k % std::size(kColors)];
    fmt::print(out, "<g class=\"series\" stroke=\"{}\" fill=\"{}\">\n", color, color);
    if (s.points.size() > 1) {
      out << "<polyline fill=\"none\" points=\"";
      for (std::size_t i = 0; i < s.points.size(); ++i) {
        fmt::print(out, "{}{:.2f},{:.2f}", i ? " " : "", px(s.points[i].oos_avg_cost),
                   py(s.points[i].oos_tail_shed));
      }
      out << "\"/>\n";
    }
    for (const FrontierPoint& p : s.points) {
      fmt::print(out,
                 "<circle class=\"marker\" cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"4\">"
                 "<title>beta {} x {}</title></circle>\n",
                 px(p.oos_avg_cost), py(p.oos_tail_shed), p.beta, p.x.bits());
    }
    out << "</g>\n";
    const double ly = kTop + 10 + 20.0 * static_cast<double>(k);
    fmt::print(out,
               "<g class=\"legend-entry\"><rect x=\"{:.2f}\" y=\"{:.2f}\" width=\"12\" "
               "height=\"12\" fill=\"{}\"/><text x=\"{:.2f}\" y=\"{:.2f}\">{}</text></g>\n",
               kWidth - kRight + 15, ly - 10, color, kWidth - kRight + 32, ly, s.name);
  }
  out << "</svg>\n";
  return out.str();
}

}  // namespace gridsiting
