#ifndef GRIDSITING_DEMO_H_
#define GRIDSITING_DEMO_H_

#include <cstdint>
#include <string>

#include "gridsiting/grid_model.h"
#include "gridsiting/weather.h"

namespace gridsiting {

enum class DemoSize { kSmall, kMedium };

DemoSize parse_demo_size(const std::string& name);  // throws ValidationError

// Synthetic grid on a rectangular lattice of buses, 150 km apart.
//   small:  2x4 buses, 10 lines, 3 existing generators, 6 candidate sites
//   medium: 5x5 buses, 40 lines, 6 existing generators, 12 candidate sites
// Per-bus and per-unit parameters are drawn from fixed ranges (see the
// README) with a stream keyed by `seed`.
GridInstance make_demo(DemoSize size, std::uint64_t seed);

// Ground-truth temperature field that goes with the demo instances.
SpatialModel demo_spatial_model();

}  // namespace gridsiting

#endif  // GRIDSITING_DEMO_H_
