#include "gridsiting/dispatch.h"

#include <algorithm>

#include <fmt/format.h>

#include "gridsiting/errors.h"

namespace gridsiting {
namespace {

void check_dimensions(const GridInstance& instance, const SitingDecision& x,
                      const Scenario& s) {
  if (x.size() != instance.num_sites()) {
    throw DimensionMismatchError(
        fmt::format("siting decision has {} entries, instance has {} sites",
                    x.size(), instance.num_sites()));
  }
  if (static_cast<int>(s.demands_mw.size()) != instance.num_buses() ||
      static_cast<int>(s.avail_mw.size()) != instance.num_generators()) {
    throw DimensionMismatchError("scenario was not realized for this instance");
  }
}

std::int64_t site_capacity_units(const GridInstance& instance,
                                 const Scenario& s, int site) {
  return to_units(s.avail_mw[instance.site_generator(site)]);
}

}  // namespace

SitingDecision SitingDecision::zeros(int sites) {
  return SitingDecision{std::vector<std::uint8_t>(sites, 0)};
}

SitingDecision SitingDecision::from_mask(int sites, std::uint64_t mask) {
  SitingDecision x = zeros(sites);
  for (int j = 0; j < sites; ++j) x.build[j] = (mask >> j) & 1U;
  return x;
}

SitingDecision SitingDecision::from_bits(std::string_view bits) {
  SitingDecision x;
  for (char c : bits) {
    if (c != '0' && c != '1') {
      throw ValidationError(
          fmt::format("siting bits must be 0/1, got \"{}\"", bits));
    }
    x.build.push_back(c == '1');
  }
  return x;
}

std::string SitingDecision::bits() const {
  std::string out;
  out.reserve(build.size());
  for (std::uint8_t b : build) out.push_back(b ? '1' : '0');
  return out;
}

std::uint64_t SitingDecision::mask() const {
  std::uint64_t m = 0;
  for (int j = 0; j < size(); ++j) {
    if (build[j]) m |= std::uint64_t{1} << j;
  }
  return m;
}

bool dominated_by(const SitingDecision& x, const SitingDecision& y) {
  if (x.size() != y.size()) return false;
  for (int j = 0; j < x.size(); ++j) {
    if (x.build[j] > y.build[j]) return false;
  }
  return true;
}

double build_cost(const GridInstance& instance, const SitingDecision& x) {
  if (x.size() != instance.num_sites()) {
    throw DimensionMismatchError("siting decision length does not match sites");
  }
  double total = 0.0;
  for (int j = 0; j < x.size(); ++j) {
    if (x.build[j]) {
      total += instance.generators()[instance.site_generator(j)].build_cost;
    }
  }
  return total;
}

FlowNetwork build_network(const GridInstance& instance, const SitingDecision& x,
                          const Scenario& s, Objective objective) {
  return build_network(instance, x, s, objective,
                       instance.response().shed_penalty);
}

FlowNetwork build_network(const GridInstance& instance, const SitingDecision& x,
                          const Scenario& s, Objective objective,
                          double shed_penalty) {
  check_dimensions(instance, x, s);
  const bool min_shed = objective == Objective::kMinShed;
  const int buses = instance.num_buses();
  const int gens = instance.num_generators();

  FlowNetwork net;
  net.source = net.add_node(NodeRole::kSource, "source");
  for (const Bus& b : instance.buses()) net.add_node(NodeRole::kBus, b.id);
  for (const GeneratorSpec& g : instance.generators()) {
    net.add_node(NodeRole::kGenerator, g.id);
  }
  net.sink = net.add_node(NodeRole::kSink, "sink");
  const auto bus_node = [](int b) { return 1 + b; };
  const auto gen_node = [buses](int g) { return 1 + buses + g; };

  std::vector<std::int64_t> demand(buses);
  for (int b = 0; b < buses; ++b) {
    demand[b] = to_units(s.demands_mw[b]);
    net.required_flow += demand[b];
  }
  // Never binding: no generator can carry more than the total demand.
  const std::int64_t unbounded = net.required_flow + 1;

  net.arcs.reserve(2 * gens + 2 * instance.lines().size() + 2 * buses);
  for (int g = 0; g < gens; ++g) {
    const GeneratorSpec& spec = instance.generators()[g];
    const int site = instance.generator_site(g);
    const bool online = site < 0 || x.build[site];
    net.add_arc(net.source, gen_node(g), online ? to_units(s.avail_mw[g]) : 0,
                min_shed ? 0.0 : spec.marginal_cost);
    net.add_arc(gen_node(g), bus_node(instance.generator_bus(g)), unbounded, 0.0);
  }
  for (int l = 0; l < static_cast<int>(instance.lines().size()); ++l) {
    const std::int64_t cap = to_units(instance.lines()[l].capacity_mw);
    net.add_arc(bus_node(instance.line_from(l)), bus_node(instance.line_to(l)),
                cap, 0.0);
    net.add_arc(bus_node(instance.line_to(l)), bus_node(instance.line_from(l)),
                cap, 0.0);
  }
  for (int b = 0; b < buses; ++b) {
    net.add_arc(net.source, bus_node(b), demand[b],
                min_shed ? 1.0 : shed_penalty);
  }
  for (int b = 0; b < buses; ++b) {
    net.add_arc(bus_node(b), net.sink, demand[b], 0.0);
  }
  return net;
}

DispatchResult dispatch(const GridInstance& instance, const SitingDecision& x,
                        const Scenario& s, Objective objective) {
  return dispatch(instance, x, s, objective, instance.response().shed_penalty);
}

DispatchResult dispatch(const GridInstance& instance, const SitingDecision& x,
                        const Scenario& s, Objective objective,
                        double shed_penalty) {
  const FlowNetwork net = build_network(instance, x, s, objective, shed_penalty);
  const FlowSolution sol = solve_min_cost_flow(net);
  const int buses = instance.num_buses();
  const int gens = instance.num_generators();
  const int lines = static_cast<int>(instance.lines().size());
  const int shed_base = 2 * gens + 2 * lines;

  DispatchResult r;
  r.objective_kind = objective;
  r.decision = x;
  r.objective = sol.objective;
  r.dual_objective = sol.dual_objective;
  r.gen_mw.resize(gens);
  for (int g = 0; g < gens; ++g) r.gen_mw[g] = to_mw(sol.flow[2 * g]);
  r.line_flow_mw.resize(lines);
  for (int l = 0; l < lines; ++l) {
    r.line_flow_mw[l] =
        to_mw(sol.flow[2 * gens + 2 * l] - sol.flow[2 * gens + 2 * l + 1]);
  }
  r.shed_mw.resize(buses);
  std::int64_t shed_units = 0;
  for (int b = 0; b < buses; ++b) {
    shed_units += sol.flow[shed_base + b];
    r.shed_mw[b] = to_mw(sol.flow[shed_base + b]);
  }
  r.total_shed_mw = to_mw(shed_units);

  const int sites = instance.num_sites();
  r.site_reduced_cost.resize(sites);
  r.sensitivities.resize(sites);
  for (int j = 0; j < sites; ++j) {
    const double rc = reduced_cost(net, sol, 2 * instance.site_generator(j));
    r.site_reduced_cost[j] = rc;
    r.sensitivities[j] =
        std::min(0.0, rc) * to_mw(site_capacity_units(instance, s, j));
  }
  return r;
}

double CutCoefficients::evaluate(const SitingDecision& x) const {
  double v = constant;
  for (int j = 0; j < x.size(); ++j) {
    if (x.build[j]) v += coefficients[j];
  }
  return v;
}

CutCoefficients cut_coefficients(const DispatchResult& result,
                                 const GridInstance& instance,
                                 const Scenario& s) {
  CutCoefficients cut;
  cut.constant = result.objective;
  cut.coefficients.resize(instance.num_sites());
  for (int j = 0; j < instance.num_sites(); ++j) {
    // Only a saturated arc can price negatively; the dual weight on its
    // capacity row is -min(0, rc) and the capacity scales with x_j.
    const double coeff = std::min(0.0, result.site_reduced_cost[j]) *
                         to_mw(site_capacity_units(instance, s, j));
    cut.coefficients[j] = coeff;
    if (result.decision.build[j]) cut.constant -= coeff;
  }
  return cut;
}

}  // namespace gridsiting
