#include "gridsiting/demo.h"

#include <cmath>
#include <vector>

#include <fmt/format.h>

#include "gridsiting/errors.h"
#include "gridsiting/random.h"

namespace gridsiting {
namespace {

constexpr double kSpacingKm = 150.0;

struct Layout {
  int rows;
  int cols;
  int existing;
  int candidates;
};

class Draws {
 public:
  explicit Draws(std::uint64_t seed) : rng_(seed, 0) {}

  // Uniform on [lo, hi], rounded to one decimal so files stay readable.
  double between(double lo, double hi) {
    return std::round((lo + (hi - lo) * rng_.uniform()) * 10.0) / 10.0;
  }
  int index(int n) {
    return std::min(n - 1, static_cast<int>(rng_.uniform() * n));
  }

 private:
  RandomStream rng_;
};

}  // namespace

DemoSize parse_demo_size(const std::string& name) {
  if (name == "small") return DemoSize::kSmall;
  if (name == "medium") return DemoSize::kMedium;
  throw ValidationError(fmt::format("unknown demo size \"{}\"", name));
}

GridInstance make_demo(DemoSize size, std::uint64_t seed) {
  const Layout layout = size == DemoSize::kSmall ? Layout{2, 4, 3, 6}
                                                 : Layout{5, 5, 6, 12};
  Draws draw(seed);

  std::vector<Bus> buses;
  for (int r = 0; r < layout.rows; ++r) {
    for (int c = 0; c < layout.cols; ++c) {
      Bus b;
      b.id = fmt::format("b{}", buses.size() + 1);
      b.x_km = c * kSpacingKm;
      b.y_km = r * kSpacingKm;
      b.base_demand_mw = draw.between(70.0, 130.0);
      b.mean_temp_c = draw.between(17.0, 21.0);
      buses.push_back(std::move(b));
    }
  }
  const auto id = [&](int r, int c) { return buses[r * layout.cols + c].id; };

  std::vector<Line> lines;
  for (int r = 0; r < layout.rows; ++r) {
    for (int c = 0; c + 1 < layout.cols; ++c) {
      lines.push_back(Line{id(r, c), id(r, c + 1), draw.between(120.0, 200.0)});
    }
  }
  for (int r = 0; r + 1 < layout.rows; ++r) {
    for (int c = 0; c < layout.cols; ++c) {
      lines.push_back(Line{id(r, c), id(r + 1, c), draw.between(120.0, 200.0)});
    }
  }

  double total_demand = 0.0;
  for (const Bus& b : buses) total_demand += b.base_demand_mw;

  // Existing fleet covers base demand with a margin; candidates add peaking
  // capacity that only pays off under temperature stress.
  std::vector<GeneratorSpec> gens;
  const int n_bus = static_cast<int>(buses.size());
  const double existing_share = 1.15 * total_demand / layout.existing;
  for (int g = 0; g < layout.existing; ++g) {
    GeneratorSpec spec;
    spec.id = fmt::format("g{}", g + 1);
    spec.bus = buses[(g * n_bus) / layout.existing + draw.index(n_bus / layout.existing)].id;
    spec.capacity_mw = std::round(existing_share * draw.between(0.9, 1.1) * 10.0) / 10.0;
    spec.marginal_cost = draw.between(20.0, 40.0);
    spec.kind = GeneratorKind::kExisting;
    gens.push_back(std::move(spec));
  }
  for (int j = 0; j < layout.candidates; ++j) {
    GeneratorSpec spec;
    spec.id = fmt::format("c{}", j + 1);
    spec.bus = buses[(j * n_bus) / layout.candidates].id;
    spec.capacity_mw = draw.between(60.0, 120.0);
    spec.marginal_cost = draw.between(40.0, 70.0);
    spec.kind = GeneratorKind::kCandidate;
    spec.build_cost = std::round(spec.capacity_mw * draw.between(4.0, 12.0));
    gens.push_back(std::move(spec));
  }

  ResponseParams response;
  response.comfort_lo_c = 15.0;
  response.comfort_hi_c = 23.0;
  response.demand_slope_per_c = 0.02;
  response.derate_start_c = 4.0;
  response.derate_full_c = 16.0;
  response.derate_max_frac = 0.3;
  response.shed_penalty = 1000.0;
  return GridInstance(std::move(buses), std::move(lines), std::move(gens), response);
}

SpatialModel demo_spatial_model() {
  SpatialModel model;
  model.sigma_c = 5.0;
  model.range_km = 800.0;
  model.kernel = Kernel::kExponential;
  return model;
}

}  // namespace gridsiting
