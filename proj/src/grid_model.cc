#include "gridsiting/grid_model.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "gridsiting/errors.h"

namespace gridsiting {
namespace {

using nlohmann::json;

void require(bool ok, const std::string& what) {
  if (!ok) throw ValidationError(what);
}

bool nonnegative(double v) { return std::isfinite(v) && v >= 0.0; }

// Reads fields of one JSON object, tracking which were consumed so that
// leftovers (typos) can be rejected.
class ObjectReader {
 public:
  ObjectReader(const json& obj, std::string path)
      : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) {
      throw ParseError(fmt::format("{}: expected an object", path_));
    }
  }

  double number(const std::string& key) {
    const json& v = at(key);
    if (!v.is_number()) {
      throw ParseError(fmt::format("{}.{}: expected a number", path_, key));
    }
    return v.get<double>();
  }

  std::string string(const std::string& key) {
    const json& v = at(key);
    if (!v.is_string()) {
      throw ParseError(fmt::format("{}.{}: expected a string", path_, key));
    }
    return v.get<std::string>();
  }

  bool has(const std::string& key) const { return obj_.contains(key); }

  void finish() const {
    for (const auto& [key, value] : obj_.items()) {
      if (!seen_.contains(key)) {
        throw ParseError(fmt::format("{}: unknown field \"{}\"", path_, key));
      }
    }
  }

 private:
  const json& at(const std::string& key) {
    auto it = obj_.find(key);
    if (it == obj_.end()) {
      throw ParseError(fmt::format("{}: missing field \"{}\"", path_, key));
    }
    seen_.insert(key);
    return *it;
  }

  const json& obj_;
  std::string path_;
  std::set<std::string> seen_;
};

const json& array_field(const json& doc, const char* key) {
  const json& v = doc.at(key);
  if (!v.is_array()) throw ParseError(fmt::format("{}: expected an array", key));
  return v;
}

int line_of_offset(std::string_view text, std::size_t byte) {
  byte = std::min(byte, text.size());
  return 1 + static_cast<int>(std::count(text.begin(), text.begin() + byte, '\n'));
}

}  // namespace

GridInstance::GridInstance(std::vector<Bus> buses, std::vector<Line> lines,
                           std::vector<GeneratorSpec> generators,
                           ResponseParams response)
    : buses_(std::move(buses)),
      lines_(std::move(lines)),
      generators_(std::move(generators)),
      response_(response) {
  require(!buses_.empty(), "instance has no buses");

  std::unordered_map<std::string, int> bus_ids;
  for (int b = 0; b < num_buses(); ++b) {
    const Bus& bus = buses_[b];
    require(!bus.id.empty(), fmt::format("bus {}: empty id", b));
    require(bus_ids.emplace(bus.id, b).second,
            fmt::format("duplicate id \"{}\" among buses", bus.id));
    require(nonnegative(bus.base_demand_mw),
            fmt::format("bus \"{}\": negative base demand", bus.id));
    require(std::isfinite(bus.x_km) && std::isfinite(bus.y_km) &&
                std::isfinite(bus.mean_temp_c),
            fmt::format("bus \"{}\": non-finite coordinate or temperature",
                        bus.id));
  }
  auto resolve = [&](const std::string& id, const std::string& where) {
    auto it = bus_ids.find(id);
    require(it != bus_ids.end(),
            fmt::format("{}: unknown bus id \"{}\"", where, id));
    return it->second;
  };

  for (std::size_t l = 0; l < lines_.size(); ++l) {
    const Line& line = lines_[l];
    const std::string where = fmt::format("line {}", l);
    int from = resolve(line.from_bus, where);
    int to = resolve(line.to_bus, where);
    require(from != to, fmt::format("{}: endpoints must differ", where));
    require(nonnegative(line.capacity_mw),
            fmt::format("{}: negative capacity", where));
    line_ends_.emplace_back(from, to);
  }

  std::unordered_set<std::string> gen_ids;
  for (int g = 0; g < num_generators(); ++g) {
    const GeneratorSpec& gen = generators_[g];
    const std::string where = fmt::format("generator \"{}\"", gen.id);
    require(!gen.id.empty(), fmt::format("generator {}: empty id", g));
    require(gen_ids.insert(gen.id).second,
            fmt::format("duplicate id \"{}\" among generators", gen.id));
    generator_bus_.push_back(resolve(gen.bus, where));
    require(nonnegative(gen.capacity_mw),
            fmt::format("{}: negative capacity", where));
    require(nonnegative(gen.marginal_cost),
            fmt::format("{}: negative marginal cost", where));
    if (gen.kind == GeneratorKind::kCandidate) {
      require(nonnegative(gen.build_cost),
              fmt::format("{}: negative build cost", where));
      generator_site_.push_back(num_sites());
      site_generators_.push_back(g);
    } else {
      require(gen.build_cost == 0.0,
              fmt::format("{}: existing generator with nonzero build cost",
                          where));
      generator_site_.push_back(-1);
    }
  }

  const ResponseParams& p = response_;
  require(std::isfinite(p.comfort_lo_c) && std::isfinite(p.comfort_hi_c) &&
              p.comfort_lo_c <= p.comfort_hi_c,
          "response: comfort_lo_c must not exceed comfort_hi_c");
  require(nonnegative(p.demand_slope_per_c),
          "response: negative demand_slope_per_c");
  require(nonnegative(p.derate_start_c), "response: negative derate_start_c");
  require(std::isfinite(p.derate_full_c) && p.derate_full_c > p.derate_start_c,
          "response: derate_full_c must exceed derate_start_c");
  require(p.derate_max_frac >= 0.0 && p.derate_max_frac <= 1.0,
          "response: derate_max_frac outside [0,1]");
  require(std::isfinite(p.shed_penalty) && p.shed_penalty > 0.0,
          "response: shed_penalty must be positive");
}

int GridInstance::bus_index(std::string_view id) const {
  for (int b = 0; b < num_buses(); ++b) {
    if (buses_[b].id == id) return b;
  }
  return -1;
}

GridInstance load_instance(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw ParseError(fmt::format("line {}: {}", line_of_offset(text, e.byte),
                                 e.what()));
  }
  if (!doc.is_object()) throw ParseError("line 1: top level must be an object");
  for (const auto& [key, value] : doc.items()) {
    if (key != "buses" && key != "lines" && key != "generators" &&
        key != "response") {
      throw ParseError(fmt::format("top level: unknown field \"{}\"", key));
    }
  }
  for (const char* key : {"buses", "lines", "generators", "response"}) {
    if (!doc.contains(key)) {
      throw ParseError(fmt::format("top level: missing field \"{}\"", key));
    }
  }

  std::vector<Bus> buses;
  const json& bus_array = array_field(doc, "buses");
  for (std::size_t i = 0; i < bus_array.size(); ++i) {
    ObjectReader r(bus_array[i], fmt::format("buses[{}]", i));
    Bus bus;
    bus.id = r.string("id");
    bus.x_km = r.number("x_km");
    bus.y_km = r.number("y_km");
    bus.base_demand_mw = r.number("base_demand_mw");
    bus.mean_temp_c = r.number("mean_temp_c");
    r.finish();
    buses.push_back(std::move(bus));
  }

  std::vector<Line> lines;
  const json& line_array = array_field(doc, "lines");
  for (std::size_t i = 0; i < line_array.size(); ++i) {
    ObjectReader r(line_array[i], fmt::format("lines[{}]", i));
    Line line;
    line.from_bus = r.string("from_bus");
    line.to_bus = r.string("to_bus");
    line.capacity_mw = r.number("capacity_mw");
    r.finish();
    lines.push_back(std::move(line));
  }

  std::vector<GeneratorSpec> generators;
  const json& gen_array = array_field(doc, "generators");
  for (std::size_t i = 0; i < gen_array.size(); ++i) {
    const std::string path = fmt::format("generators[{}]", i);
    ObjectReader r(gen_array[i], path);
    GeneratorSpec gen;
    gen.id = r.string("id");
    gen.bus = r.string("bus");
    gen.capacity_mw = r.number("capacity_mw");
    gen.marginal_cost = r.number("marginal_cost");
    const std::string kind = r.string("kind");
    if (kind == "existing") {
      gen.kind = GeneratorKind::kExisting;
      if (r.has("build_cost")) gen.build_cost = r.number("build_cost");
    } else if (kind == "candidate") {
      gen.kind = GeneratorKind::kCandidate;
      gen.build_cost = r.number("build_cost");
    } else {
      throw ParseError(fmt::format(
          "{}.kind: expected \"existing\" or \"candidate\", got \"{}\"", path,
          kind));
    }
    r.finish();
    generators.push_back(std::move(gen));
  }

  ObjectReader r(doc.at("response"), "response");
  ResponseParams p;
  p.comfort_lo_c = r.number("comfort_lo_c");
  p.comfort_hi_c = r.number("comfort_hi_c");
  p.demand_slope_per_c = r.number("demand_slope_per_c");
  p.derate_start_c = r.number("derate_start_c");
  p.derate_full_c = r.number("derate_full_c");
  p.derate_max_frac = r.number("derate_max_frac");
  p.shed_penalty = r.number("shed_penalty");
  r.finish();

  return GridInstance(std::move(buses), std::move(lines),
                      std::move(generators), p);
}

GridInstance load_instance_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(fmt::format("cannot open instance file \"{}\"", path));
  std::stringstream buffer;
  buffer << in.rdbuf();
  return load_instance(buffer.str());
}

std::string serialize_instance(const GridInstance& instance) {
  json doc = json::object();
  json buses = json::array();
  for (const Bus& b : instance.buses()) {
    buses.push_back({{"id", b.id},
                     {"x_km", b.x_km},
                     {"y_km", b.y_km},
                     {"base_demand_mw", b.base_demand_mw},
                     {"mean_temp_c", b.mean_temp_c}});
  }
  json lines = json::array();
  for (const Line& l : instance.lines()) {
    lines.push_back({{"from_bus", l.from_bus},
                     {"to_bus", l.to_bus},
                     {"capacity_mw", l.capacity_mw}});
  }
  json gens = json::array();
  for (const GeneratorSpec& g : instance.generators()) {
    json entry = {{"id", g.id},
                  {"bus", g.bus},
                  {"capacity_mw", g.capacity_mw},
                  {"marginal_cost", g.marginal_cost}};
    if (g.kind == GeneratorKind::kCandidate) {
      entry["kind"] = "candidate";
      entry["build_cost"] = g.build_cost;
    } else {
      entry["kind"] = "existing";
    }
    gens.push_back(std::move(entry));
  }
  const ResponseParams& p = instance.response();
  doc["buses"] = std::move(buses);
  doc["lines"] = std::move(lines);
  doc["generators"] = std::move(gens);
  doc["response"] = {{"comfort_lo_c", p.comfort_lo_c},
                     {"comfort_hi_c", p.comfort_hi_c},
                     {"demand_slope_per_c", p.demand_slope_per_c},
                     {"derate_start_c", p.derate_start_c},
                     {"derate_full_c", p.derate_full_c},
                     {"derate_max_frac", p.derate_max_frac},
                     {"shed_penalty", p.shed_penalty}};
  return doc.dump(2) + "\n";
}

double comfort_deviation(double temp_c, const ResponseParams& p) {
  return std::max({0.0, p.comfort_lo_c - temp_c, temp_c - p.comfort_hi_c});
}

double demand_at(const Bus& bus, double temp_c, const ResponseParams& p) {
  const double delta = comfort_deviation(temp_c, p);
  return bus.base_demand_mw * (1.0 + p.demand_slope_per_c * delta);
}

double available_capacity(const GeneratorSpec& gen, double temp_c,
                          const ResponseParams& p) {
  const double delta = comfort_deviation(temp_c, p);
  const double ramp = std::clamp(
      (delta - p.derate_start_c) / (p.derate_full_c - p.derate_start_c), 0.0,
      1.0);
  return gen.capacity_mw * (1.0 - p.derate_max_frac * ramp);
}

}  // namespace gridsiting
