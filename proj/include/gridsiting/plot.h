#ifndef GRIDSITING_PLOT_H_
#define GRIDSITING_PLOT_H_

#include <span>
#include <string>

#include "gridsiting/frontier.h"

namespace gridsiting {

// Scatter/line chart of out-of-sample average cost (x) against tail load
// shed (y). Points are grouped by (label, dependence); each group is reduced
// to its nondominated points and drawn as one polyline with markers. Failed
// points are skipped. Throws ValidationError("no data rows") when nothing is
// left to draw.
std::string render_frontier_svg(std::span<const FrontierPoint> points);

}  // namespace gridsiting

#endif  // GRIDSITING_PLOT_H_
