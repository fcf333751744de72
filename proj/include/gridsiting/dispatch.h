#ifndef GRIDSITING_DISPATCH_H_
#define GRIDSITING_DISPATCH_H_

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "gridsiting/grid_model.h"
#include "gridsiting/min_cost_flow.h"
#include "gridsiting/weather.h"

namespace gridsiting {

// First-stage build vector over candidate sites.
struct SitingDecision {
  std::vector<std::uint8_t> build;

  static SitingDecision zeros(int sites);
  // Site j corresponds to bit j of `mask`.
  static SitingDecision from_mask(int sites, std::uint64_t mask);
  // Parses a 0/1 string in site order; throws ValidationError otherwise.
  static SitingDecision from_bits(std::string_view bits);

  int size() const { return static_cast<int>(build.size()); }
  std::string bits() const;
  std::uint64_t mask() const;
  bool operator==(const SitingDecision&) const = default;
};

// Componentwise x <= y.
bool dominated_by(const SitingDecision& x, const SitingDecision& y);

double build_cost(const GridInstance& instance, const SitingDecision& x);

// `kCost` prices generation and load shed; `kMinShed` only counts shed MW.
enum class Objective { kCost, kMinShed };

// Arc layout of networks produced by build_network, G generators, L lines
// and B buses:
//   [2g]             source -> generator g
//   [2g + 1]         generator g -> its bus
//   [2G + 2l]        line l, from -> to
//   [2G + 2l + 1]    line l, to -> from
//   [2G + 2L + b]    source -> bus b (load shed)
//   [2G + 2L + B + b] bus b -> sink (demand)
// Nodes: source, buses, generators, sink.
FlowNetwork build_network(const GridInstance& instance, const SitingDecision& x,
                          const Scenario& s, Objective objective);
FlowNetwork build_network(const GridInstance& instance, const SitingDecision& x,
                          const Scenario& s, Objective objective,
                          double shed_penalty);

struct DispatchResult {
  Objective objective_kind = Objective::kCost;
  SitingDecision decision;
  double objective = 0.0;
  double dual_objective = 0.0;
  std::vector<double> gen_mw;        // per generator
  std::vector<double> shed_mw;       // per bus
  std::vector<double> line_flow_mw;  // per line, positive from -> to
  double total_shed_mw = 0.0;
  // Reduced cost of each site's source -> generator arc.
  std::vector<double> site_reduced_cost;
  // Subgradient of the scenario value with respect to each x_j.
  std::vector<double> sensitivities;
};

DispatchResult dispatch(const GridInstance& instance, const SitingDecision& x,
                        const Scenario& s, Objective objective);
DispatchResult dispatch(const GridInstance& instance, const SitingDecision& x,
                        const Scenario& s, Objective objective,
                        double shed_penalty);

// Affine minorant of the scenario value in x, tight at result.decision.
struct CutCoefficients {
  double constant = 0.0;
  std::vector<double> coefficients;

  double evaluate(const SitingDecision& x) const;
};

CutCoefficients cut_coefficients(const DispatchResult& result,
                                 const GridInstance& instance,
                                 const Scenario& s);

}  // namespace gridsiting

#endif  // GRIDSITING_DISPATCH_H_
