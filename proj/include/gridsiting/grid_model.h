#ifndef GRIDSITING_GRID_MODEL_H_
#define GRIDSITING_GRID_MODEL_H_

#include <string>
#include <string_view>
#include <vector>

namespace gridsiting {

// All power quantities are MW for one representative hour. Costs are $ for
// that hour; build costs are expected to be amortized to the same hour.

struct Bus {
  std::string id;
  double x_km = 0.0;
  double y_km = 0.0;
  double base_demand_mw = 0.0;
  double mean_temp_c = 0.0;
};

// Bidirectional transmission corridor with a symmetric flow limit.
struct Line {
  std::string from_bus;
  std::string to_bus;
  double capacity_mw = 0.0;
};

enum class GeneratorKind { kExisting, kCandidate };

struct GeneratorSpec {
  std::string id;
  std::string bus;
  double capacity_mw = 0.0;
  double marginal_cost = 0.0;
  GeneratorKind kind = GeneratorKind::kExisting;
  double build_cost = 0.0;  // candidate sites only
};

// Temperature response of demand and generation, plus the load-shed penalty.
struct ResponseParams {
  double comfort_lo_c = 18.0;
  double comfort_hi_c = 24.0;
  double demand_slope_per_c = 0.0;
  double derate_start_c = 0.0;
  double derate_full_c = 1.0;
  double derate_max_frac = 0.0;
  double shed_penalty = 1000.0;
};

// Validated, immutable grid description. Cross references are resolved to
// indices at construction so the hot dispatch path never looks up strings.
class GridInstance {
 public:
  // Throws ValidationError naming the first violated invariant.
  GridInstance(std::vector<Bus> buses, std::vector<Line> lines,
               std::vector<GeneratorSpec> generators, ResponseParams response);

  const std::vector<Bus>& buses() const { return buses_; }
  const std::vector<Line>& lines() const { return lines_; }
  const std::vector<GeneratorSpec>& generators() const { return generators_; }
  const ResponseParams& response() const { return response_; }

  int num_buses() const { return static_cast<int>(buses_.size()); }
  int num_generators() const { return static_cast<int>(generators_.size()); }
  // Candidate sites, numbered in the order they appear among generators.
  int num_sites() const { return static_cast<int>(site_generators_.size()); }

  int line_from(int line) const { return line_ends_[line].first; }
  int line_to(int line) const { return line_ends_[line].second; }
  int generator_bus(int gen) const { return generator_bus_[gen]; }
  int site_generator(int site) const { return site_generators_[site]; }
  // -1 for existing generators.
  int generator_site(int gen) const { return generator_site_[gen]; }
  int bus_index(std::string_view id) const;  // -1 when absent

 private:
  std::vector<Bus> buses_;
  std::vector<Line> lines_;
  std::vector<GeneratorSpec> generators_;
  ResponseParams response_;
  std::vector<std::pair<int, int>> line_ends_;
  std::vector<int> generator_bus_;
  std::vector<int> site_generators_;
  std::vector<int> generator_site_;
};

// Parses and validates the JSON instance format. Unknown fields are errors.
GridInstance load_instance(std::string_view text);
GridInstance load_instance_file(const std::string& path);
std::string serialize_instance(const GridInstance& instance);

// Distance outside the comfort band, in degrees C (0 inside the band).
double comfort_deviation(double temp_c, const ResponseParams& p);

double demand_at(const Bus& bus, double temp_c, const ResponseParams& p);

// Capacity after piecewise-linear temperature derating.
double available_capacity(const GeneratorSpec& gen, double temp_c,
                          const ResponseParams& p);

}  // namespace gridsiting

#endif  // GRIDSITING_GRID_MODEL_H_
